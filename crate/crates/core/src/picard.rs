//! The constructive iteration
//!
//! ```text
//! u⁽⁰⁾ = 0,
//! ∂t u⁽ⁿ⁺¹⁾ + (1 + u⁽ⁿ⁾)∂x u⁽ⁿ⁺¹⁾ = ∂x P(D) f₁(u⁽ⁿ⁾) + P(D) f₂(u⁽ⁿ⁾, ∂x u⁽ⁿ⁾),
//! u⁽ⁿ⁺¹⁾(0) = S_{n+1} u₀,
//! ```
//!
//! on a uniform time grid over `[0, T]`, with the lifespan
//! `T = min(1/C, 1/(8C‖u₀‖_{B^{s₀}_{2,1}}))` and the induction bound
//! `‖u⁽ⁿ⁾(t)‖_{B^{s₀}_{2,1}} ≤ 2‖u₀‖ / (1 - 4C‖u₀‖t)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bony::{commutator_bound_audit, AuditConfig};
use crate::error::{invalid, FchError, Result};
use crate::littlewood_paley::{besov_norm, critical_index, low_cutoff, BesovSpec, Summation};
use crate::model::{source_term, FchParams, Form};
use crate::spectral::{GridSpec, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LifespanEstimate {
    pub c_hat: f64,
    pub u0_norm: f64,
    pub s0: f64,
    pub t: f64,
}

/// `min(1/C, 1/(8C‖u₀‖))`; the second branch is absent for `‖u₀‖ = 0`.
pub fn lifespan_from_norm(u0_norm: f64, c_hat: f64) -> Result<f64> {
    if !(c_hat > 0.0 && c_hat.is_finite()) {
        return Err(invalid(format!("C = {c_hat} must be positive")));
    }
    if !(u0_norm >= 0.0 && u0_norm.is_finite()) {
        return Err(invalid(format!("‖u₀‖ = {u0_norm} must be finite and nonnegative")));
    }
    let first = 1.0 / c_hat;
    Ok(if u0_norm == 0.0 {
        first
    } else {
        first.min(1.0 / (8.0 * c_hat * u0_norm))
    })
}

pub fn lifespan(u0: &SpectralField, c_hat: f64, nu: f64) -> Result<LifespanEstimate> {
    let s0 = critical_index(nu)?;
    let u0_norm = besov_norm(u0, &BesovSpec::l2(s0, Summation::One));
    Ok(LifespanEstimate {
        c_hat,
        u0_norm,
        s0,
        t: lifespan_from_norm(u0_norm, c_hat)?,
    })
}

/// `2‖u₀‖ / (1 - 4C‖u₀‖t)`, or `None` at or past the singularity.
pub fn induction_bound(u0_norm: f64, c_hat: f64, t: f64) -> Option<f64> {
    let den = 1.0 - 4.0 * c_hat * u0_norm * t;
    (den > 0.0).then(|| 2.0 * u0_norm / den)
}

/// Empirical constant: the largest ratio of a seeded commutator and product
/// audit on `grid`.
pub fn audited_c_hat(grid: &GridSpec, nu: f64, ensemble: usize, seed: u64) -> Result<f64> {
    Ok(commutator_bound_audit(grid, &AuditConfig::new(ensemble, nu, seed))?.empirical_c)
}

/// Fields sampled on a uniform time grid starting at 0.
#[derive(Clone, Debug)]
pub struct FieldTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl FieldTrajectory {
    /// `steps + 1` uniformly spaced times on `[0, t_end]`.
    pub fn time_grid(t_end: f64, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 || !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid("time grid needs t_end > 0 and at least one step"));
        }
        Ok((0..=steps).map(|i| t_end * i as f64 / steps as f64).collect())
    }

    pub fn constant(field: &SpectralField, times: &[f64]) -> Self {
        Self {
            times: times.to_vec(),
            fields: vec![field.clone(); times.len()],
        }
    }

    pub fn zeros(grid: GridSpec, times: &[f64]) -> Self {
        Self::constant(&SpectralField::zeros(grid), times)
    }

    fn check_grid(&self, times: &[f64]) -> Result<()> {
        if self.times.len() != times.len()
            || self.fields.len() != times.len()
            || self.times.iter().zip(times).any(|(a, b)| a != b)
        {
            return Err(invalid("trajectories must share one time grid"));
        }
        Ok(())
    }

    /// Value at `t = times[i] + θ(times[i+1] - times[i])`, linear in `θ`.
    fn interp(&self, i: usize, theta: f64) -> SpectralField {
        if theta == 0.0 {
            self.fields[i].clone()
        } else {
            self.fields[i].lin_comb(1.0 - theta, &self.fields[i + 1], theta)
        }
    }
}

/// Solves `f_t + (1 + v)f_x = g`, `f(0) = f0`, with `v` and `g` linear in
/// time between samples, by RK4 sub-steps no longer than `dt_sub`.
pub fn transport_solve(
    v: &FieldTrajectory,
    rhs: &FieldTrajectory,
    f0: &SpectralField,
    dt_sub: f64,
) -> Result<FieldTrajectory> {
    let times = &v.times;
    if times.len() < 2 {
        return Err(invalid("time grid needs at least two samples"));
    }
    v.check_grid(times)?;
    rhs.check_grid(times)?;
    if !(dt_sub > 0.0 && dt_sub.is_finite()) {
        return Err(invalid(format!("dt_sub = {dt_sub} must be positive")));
    }
    for f in v.fields.iter().chain(&rhs.fields) {
        f.grid().ensure_same(f0.grid())?;
    }
    let force = |f: &SpectralField, i: usize, theta: f64| -> Result<SpectralField> {
        let vi = v.interp(i, theta);
        let fx = f.derivative(1);
        let adv = fx.add(&vi.product(&fx)?);
        Ok(rhs.interp(i, theta).sub(&adv))
    };
    let mut out = Vec::with_capacity(times.len());
    let mut f = f0.clone();
    out.push(f.clone());
    for i in 0..times.len() - 1 {
        let span = times[i + 1] - times[i];
        let subs = (span / dt_sub * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / subs as f64;
        for s in 0..subs {
            let th = |frac: f64| (s as f64 + frac) / subs as f64;
            let k1 = force(&f, i, th(0.0))?;
            let k2 = force(&f.lin_comb(1.0, &k1, 0.5 * h), i, th(0.5))?;
            let k3 = force(&f.lin_comb(1.0, &k2, 0.5 * h), i, th(0.5))?;
            let k4 = force(&f.lin_comb(1.0, &k3, h), i, th(1.0))?;
            let incr = k1.add(&k4).add(&k2.add(&k3).scale(2.0));
            f = f.lin_comb(1.0, &incr, h / 6.0);
        }
        if !f.is_finite() {
            return Err(FchError::IterationFailure(format!(
                "transport solve left the finite range before t = {}",
                times[i + 1]
            )));
        }
        out.push(f.clone());
    }
    Ok(FieldTrajectory {
        times: times.clone(),
        fields: out,
    })
}

/// Source `∂x P(D) f₁(u) + P(D) f₂(u, u_x)` along a trajectory.
fn source_trajectory(u: &FieldTrajectory, params: &FchParams) -> Result<FieldTrajectory> {
    let fields = u
        .fields
        .par_iter()
        .map(|f| source_term(f, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldTrajectory {
        times: u.times.clone(),
        fields,
    })
}

/// Sub-step that respects the CFL cap for advecting speed `1 + v`.
fn default_dt_sub(v: &FieldTrajectory, grid: &GridSpec, times: &[f64]) -> f64 {
    let sup = v.fields.iter().map(SpectralField::linf_norm).fold(0.0, f64::max);
    let span = times[1] - times[0];
    span.min(0.5 * grid.dx() / (1.0 + sup))
}

fn check_params(params: &FchParams) -> Result<()> {
    if params.form != Form::Simplified32 {
        return Err(invalid("the iteration is defined for form simplified_32"));
    }
    Ok(())
}

/// `u⁽ⁿ⁺¹⁾` from `u⁽ⁿ⁾ = prev`.
pub fn picard_step(
    prev: &FieldTrajectory,
    u0: &SpectralField,
    n: usize,
    params: &FchParams,
) -> Result<FieldTrajectory> {
    check_params(params)?;
    params.grid.ensure_same(u0.grid())?;
    let source = source_trajectory(prev, params)?;
    let f0 = low_cutoff(u0, n as i32 + 1)?;
    let dt_sub = default_dt_sub(prev, &params.grid, &prev.times);
    transport_solve(prev, &source, &f0, dt_sub)
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub s0: f64,
    pub times: Vec<f64>,
    /// `u⁽ⁿ⁾` for `n = 0..=n_max`.
    pub iterates: Vec<FieldTrajectory>,
    /// `w_{n,1}(t) = ‖u⁽ⁿ⁺¹⁾(t) - u⁽ⁿ⁾(t)‖_{B^{s₀-1}_{2,∞}}`, `n = 0..n_max`.
    pub w_n1: Vec<Vec<f64>>,
    /// `w_{n,n}(t) = ‖u⁽²ⁿ⁾(t) - u⁽ⁿ⁾(t)‖_{B^{s₀-1}_{2,∞}}` for `2n ≤ n_max`.
    pub w_nn: Vec<Vec<f64>>,
    /// `‖u⁽ⁿ⁾(t)‖_{B^{s₀}_{2,1}}`.
    pub norms: Vec<Vec<f64>>,
}

impl IterationTrace {
    pub fn n_max(&self) -> usize {
        self.iterates.len() - 1
    }

    /// `sup_t w_{n,1}(t)` for each `n`.
    pub fn sup_w_n1(&self) -> Vec<f64> {
        self.w_n1
            .iter()
            .map(|w| w.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// `sup_t w_{n+1,1} / sup_t w_{n,1}`; entry `n` compares `n + 1` with `n`.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.sup_w_n1()
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// Induction-bound slack `2‖u₀‖/(1 - 4C‖u₀‖t) - ‖u⁽ⁿ⁾(t)‖` per `(n, t)`.
    pub fn bound_margins(&self, c_hat: f64, u0_norm: f64) -> Vec<Vec<f64>> {
        self.norms
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.times)
                    .map(|(norm, &t)| {
                        induction_bound(u0_norm, c_hat, t).map_or(f64::NEG_INFINITY, |b| b - norm)
                    })
                    .collect()
            })
            .collect()
    }
}

fn distance(a: &SpectralField, b: &SpectralField, spec: &BesovSpec) -> f64 {
    besov_norm(&a.sub(b), spec)
}

/// Runs `n_max` iterations on `time_steps` uniform intervals of `[0, t_end]`.
pub fn picard_run(
    u0: &SpectralField,
    n_max: usize,
    t_end: f64,
    params: &FchParams,
    time_steps: usize,
) -> Result<IterationTrace> {
    check_params(params)?;
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    params.grid.ensure_same(u0.grid())?;
    let s0 = critical_index(params.nu)?;
    let times = FieldTrajectory::time_grid(t_end, time_steps)?;
    let mut iterates = vec![FieldTrajectory::zeros(params.grid, &times)];
    for n in 0..n_max {
        let next = picard_step(&iterates[n], u0, n, params)?;
        iterates.push(next);
    }

    let weak = BesovSpec::l2(s0 - 1.0, Summation::Inf);
    let strong = BesovSpec::l2(s0, Summation::One);
    let series = |a: &FieldTrajectory, b: &FieldTrajectory| -> Vec<f64> {
        a.fields
            .iter()
            .zip(&b.fields)
            .map(|(x, y)| distance(x, y, &weak))
            .collect()
    };
    let w_n1 = (0..n_max)
        .into_par_iter()
        .map(|n| series(&iterates[n + 1], &iterates[n]))
        .collect();
    let w_nn = (1..=n_max / 2)
        .into_par_iter()
        .map(|n| series(&iterates[2 * n], &iterates[n]))
        .collect();
    let norms = iterates
        .par_iter()
        .map(|it| it.fields.iter().map(|f| besov_norm(f, &strong)).collect())
        .collect();
    Ok(IterationTrace {
        s0,
        times,
        iterates,
        w_n1,
        w_nn,
        norms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub n: usize,
    pub t: f64,
    pub norm: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
    /// Smallest slack over all `(n, t)`.
    pub min_margin: f64,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the induction bound at every recorded `(n, t)`.
pub fn bound_check(trace: &IterationTrace, c_hat: f64, u0_norm: f64) -> Result<BoundReport> {
    let t_end = trace.times.last().copied().unwrap_or(0.0);
    if induction_bound(u0_norm, c_hat, t_end).is_none() {
        return Err(invalid(format!(
            "4·C·‖u₀‖·T = {} reaches the bound's singularity",
            4.0 * c_hat * u0_norm * t_end
        )));
    }
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut checked = 0;
    for (n, row) in trace.norms.iter().enumerate() {
        for (&norm, &t) in row.iter().zip(&trace.times) {
            let bound = induction_bound(u0_norm, c_hat, t).expect("t ≤ T is below the singularity");
            checked += 1;
            min_margin = min_margin.min(bound - norm);
            if norm > bound {
                violations.push(BoundViolation { n, t, norm, bound });
            }
        }
    }
    Ok(BoundReport {
        checked,
        violations,
        min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(2.0 * PI, 32).unwrap()
    }

    #[test]
    fn lifespan_formula() {
        assert_eq!(lifespan_from_norm(2.0, 1.0).unwrap(), 1.0 / 16.0);
        assert_eq!(lifespan_from_norm(0.01, 1.0).unwrap(), 1.0);
        assert_eq!(lifespan_from_norm(0.0, 4.0).unwrap(), 0.25);
        assert!(lifespan_from_norm(1.0, 0.0).is_err());

        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let mut c = vec![num_complex::Complex64::new(0.0, 0.0); g.n()];
        c[1] = num_complex::Complex64::new(0.025, 0.0);
        c[g.n() - 1] = c[1];
        let u0 = SpectralField::from_coeffs(g, c).unwrap();
        let est = lifespan(&u0, 1.0, 2.0).unwrap();
        // cos x sits in block -1, weighted by 2^{-s₀}
        let expected = 0.05 * 2f64.powf(-3.5) * PI.sqrt();
        assert!((est.u0_norm - expected).abs() < 1e-12 * expected, "{} vs {expected}", est.u0_norm);
        assert_eq!(est.t, lifespan_from_norm(est.u0_norm, 1.0).unwrap());
    }

    #[test]
    fn unit_speed_advection() {
        let g = grid();
        let times = FieldTrajectory::time_grid(0.5, 10).unwrap();
        let z = FieldTrajectory::zeros(g, &times);
        let f0 = SpectralField::from_fn(g, f64::cos);
        let out = transport_solve(&z, &z, &f0, 0.005).unwrap();
        let exact = SpectralField::from_fn(g, |x| (x - 0.5).cos());
        assert!(out.fields.last().unwrap().sub(&exact).l2_norm() < 1e-8);

        let zero = transport_solve(&z, &z, &SpectralField::zeros(g), 0.01).unwrap();
        assert!(zero.fields.iter().all(|f| f.l2_norm() == 0.0));
    }

    #[test]
    fn zero_data_gives_zero_iterates() {
        let g = grid();
        let p = FchParams::new(1.4, Form::Simplified32, g).unwrap();
        let tr = picard_run(&SpectralField::zeros(g), 3, 0.1, &p, 4).unwrap();
        assert!(tr.sup_w_n1().iter().all(|&w| w == 0.0));
        assert!(bound_check(&tr, 2.0, 0.0).unwrap().passed());
        let bad = FchParams::new(1.4, Form::Nonlocal31, g).unwrap();
        assert!(picard_run(&SpectralField::zeros(g), 3, 0.1, &bad, 4).is_err());
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let g = grid();
        let p = FchParams::new(1.4, Form::Simplified32, g).unwrap();
        let c = SpectralField::constant(g, 0.2);
        let times = FieldTrajectory::time_grid(0.2, 4).unwrap();
        let next = picard_step(&FieldTrajectory::constant(&c, &times), &c, 3, &p).unwrap();
        for f in &next.fields {
            assert!(f.sub(&c).linf_norm() < 1e-9);
        }
    }

    #[test]
    fn bound_check_rejects_singular_horizon() {
        let g = grid();
        let p = FchParams::new(1.4, Form::Simplified32, g).unwrap();
        let tr = picard_run(&SpectralField::zeros(g), 1, 1.0, &p, 2).unwrap();
        assert!(bound_check(&tr, 1.0, 0.25).is_err());
    }
}
