//! Numerical signatures of real analyticity: exponential Fourier decay and
//! truncated `E_s` norms along a trajectory.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, FchError, Result};
use crate::evolution::TrajectoryRecord;
use crate::littlewood_paley::{es_norm_truncated, es_norms_multi};
use crate::spectral::SpectralField;

/// Default relative floor below which coefficients count as transform noise.
pub const DECAY_FLOOR: f64 = 1e-13;
/// Minimum number of modes a fit needs.
pub const MIN_FIT_MODES: usize = 8;
/// Fits with a larger RMS log-residual report no `sigma`.
pub const MAX_FIT_RESIDUAL: f64 = 0.1;

/// Least-squares fit `log|û(k)| ≈ log A - σk` over positive wavenumbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    /// Fitted decay rate, reported only for a good fit.
    pub sigma: Option<f64>,
    /// Fitted rate regardless of fit quality.
    pub slope: f64,
    pub fit_window: (f64, f64),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub modes_used: usize,
}

/// Fits the decay of `|û|` over positive retained modes above
/// `floor · max|û|`. Fewer than eight such modes is a no-fit.
pub fn fourier_decay_fit(u: &SpectralField, floor: f64) -> Result<DecayFit> {
    if !(floor > 0.0 && floor < 1.0) {
        return Err(invalid(format!("relative floor {floor} outside (0, 1)")));
    }
    let g = u.grid();
    let peak = u.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let top = g.dealias_cutoff().min(g.nyquist_index() - 1);
    let points: Vec<(f64, f64)> = if peak > 0.0 {
        (1..=top)
            .filter_map(|i| {
                let c = u.coeffs()[i].norm();
                (c > floor * peak).then(|| (g.wavenumber(i), c.ln()))
            })
            .collect()
    } else {
        Vec::new()
    };
    if points.len() < MIN_FIT_MODES {
        return Err(FchError::NoFit {
            modes: points.len(),
            needed: MIN_FIT_MODES,
        });
    }
    let n = points.len() as f64;
    let kbar = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - kbar).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - kbar) * (p.1 - ybar)).sum();
    let slope = -sxy / sxx;
    let log_a = ybar + slope * kbar;
    let residual = (points
        .iter()
        .map(|&(k, y)| (y - (log_a - slope * k)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        a: log_a.exp(),
        sigma: (residual < MAX_FIT_RESIDUAL).then_some(slope),
        slope,
        fit_window: (points[0].0, points[points.len() - 1].0),
        residual,
        modes_used: points.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EsPoint {
    pub t: f64,
    pub s: f64,
    pub value: f64,
    pub argmax_k: usize,
    pub converged: bool,
}

/// Truncated `E_s` norms at every snapshot and scale, ordered by snapshot
/// then by scale.
pub fn es_trajectory(
    record: &TrajectoryRecord,
    scales: &[f64],
    kmax: usize,
    nu: f64,
) -> Result<Vec<EsPoint>> {
    es_series(&record.times, &record.snapshots, scales, kmax, nu)
}

/// [`es_trajectory`] over bare `(time, field)` lists.
pub fn es_series(
    times: &[f64],
    snapshots: &[SpectralField],
    scales: &[f64],
    kmax: usize,
    nu: f64,
) -> Result<Vec<EsPoint>> {
    if times.len() != snapshots.len() {
        return Err(invalid("one time per snapshot required"));
    }
    let rows = snapshots
        .par_iter()
        .zip(times)
        .map(|(u, &t)| {
            let norms = es_norms_multi(u, scales, kmax, nu)?;
            Ok(scales
                .iter()
                .zip(norms)
                .map(|(&s, e)| EsPoint {
                    t,
                    s,
                    value: e.value,
                    argmax_k: e.argmax_k,
                    converged: e.converged,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub fit: Option<DecayFit>,
}

/// Decay fits at every snapshot; snapshots without enough modes give `None`.
pub fn decay_trajectory(record: &TrajectoryRecord, floor: f64) -> Result<Vec<DecayPoint>> {
    decay_series(&record.times, &record.snapshots, floor)
}

pub fn decay_series(times: &[f64], snapshots: &[SpectralField], floor: f64) -> Result<Vec<DecayPoint>> {
    if times.len() != snapshots.len() {
        return Err(invalid("one time per snapshot required"));
    }
    snapshots
        .par_iter()
        .zip(times)
        .map(|(u, &t)| match fourier_decay_fit(u, floor) {
            Ok(fit) => Ok(DecayPoint { t, fit: Some(fit) }),
            Err(FchError::NoFit { .. }) => Ok(DecayPoint { t, fit: None }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Accepts nonzero trigonometric polynomials too short to fit and fields
/// whose coefficients decay.
fn check_analytic_grade(u: &SpectralField) -> Result<()> {
    match fourier_decay_fit(u, DECAY_FLOOR) {
        Ok(fit) if fit.slope > 0.0 => Ok(()),
        Ok(fit) => Err(invalid(format!("coefficients do not decay (slope {})", fit.slope))),
        Err(FchError::NoFit { modes, .. }) if modes > 0 || u.coeff(0).norm() > 0.0 => Ok(()),
        Err(e) => Err(e),
    }
}

/// `|||uv|||_s / (|||u|||_s |||v|||_s)` with truncated norms.
pub fn algebra_probe(u: &SpectralField, v: &SpectralField, s: f64, kmax: usize, nu: f64) -> Result<f64> {
    u.grid().ensure_same(v.grid())?;
    check_analytic_grade(u)?;
    check_analytic_grade(v)?;
    let uv = u.product(v)?;
    let nu_ = es_norm_truncated(u, s, kmax, nu)?.value;
    let nv = es_norm_truncated(v, s, kmax, nu)?.value;
    let nuv = es_norm_truncated(&uv, s, kmax, nu)?.value;
    Ok(nuv / (nu_ * nv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{besov_norm, critical_index, BesovSpec, Summation};
    use crate::spectral::GridSpec;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn exp_decay(g: GridSpec, rate: f64, amp: f64) -> SpectralField {
        let coeffs = (0..g.n())
            .map(|i| {
                if g.is_retained(i) && i != g.nyquist_index() {
                    Complex64::new(amp * (-rate * g.wavenumber(i).abs()).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        SpectralField::from_coeffs(g, coeffs).unwrap()
    }

    #[test]
    fn exact_exponential() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let fit = fourier_decay_fit(&exp_decay(g, 1.0, 1.0), DECAY_FLOOR).unwrap();
        assert!((fit.sigma.unwrap() - 1.0).abs() < 1e-6);
        assert!(fit.residual < 1e-10);
        assert!((fit.a - 1.0).abs() < 1e-9);
    }

    #[test]
    fn short_polynomial_has_no_fit() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let u = SpectralField::from_fn(g, |x| (3.0 * x).cos());
        assert!(matches!(
            fourier_decay_fit(&u, DECAY_FLOOR),
            Err(FchError::NoFit { .. })
        ));
        assert!(fourier_decay_fit(&SpectralField::zeros(g), DECAY_FLOOR).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let g = GridSpec::new(2.0 * PI, 128).unwrap();
        let u = exp_decay(g, 0.7, 1.0);
        let a = fourier_decay_fit(&u, DECAY_FLOOR).unwrap();
        let b = fourier_decay_fit(&u.scale(-3.0), DECAY_FLOOR).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-9);
        assert!((b.a / a.a - 3.0).abs() < 1e-9);
    }

    #[test]
    fn algebra_probe_against_constant() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let nu = 1.4;
        let u = exp_decay(g, 1.0, 0.1);
        let one = SpectralField::constant(g, 1.0);
        let r = algebra_probe(&u, &one, 0.5, 12, nu).unwrap();
        let s0 = critical_index(nu).unwrap();
        let one_norm = besov_norm(&one, &BesovSpec::l2(s0, Summation::One));
        // padded-product round-off, amplified by the derivative weights
        assert!((r - 1.0 / one_norm).abs() < 1e-10 * r);
        assert!(algebra_probe(&u, &SpectralField::zeros(g), 0.5, 12, nu).is_err());
    }
}
