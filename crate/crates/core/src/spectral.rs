//! Periodic grids, the discrete Fourier layer and Fourier multipliers.
//!
//! A [`SpectralField`] carries a real periodic function twice: as `N` grid
//! samples and as the normalized Fourier coefficients
//! `û_m = (1/N) Σ_j u_j e^{-i k_m x_j}`, so that `u(x) = Σ_m û_m e^{i k_m x}`.
//! Coefficients are stored in FFT order: index `j < N/2` holds mode `m = j`,
//! index `j ≥ N/2` holds mode `m = j - N`. Index `N/2` is the unpaired
//! Nyquist mode `m = -N/2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, FchError, Result};

/// Default retained-mode fraction for quadratic nonlinearities.
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Uniform periodic grid on `[0, L)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GridSpec {
    length: f64,
    n: usize,
    dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        Self::with_dealias(length, n, TWO_THIRDS)
    }

    pub fn with_dealias(length: f64, n: usize, dealias_fraction: f64) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(FchError::InvalidGrid(format!(
                "resolution {n} is not a power of two"
            )));
        }
        if n < 16 {
            return Err(FchError::InvalidGrid(format!(
                "resolution {n} is below the minimum of 16"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FchError::InvalidGrid(format!(
                "period {length} must be positive and finite"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(FchError::InvalidGrid(format!(
                "dealias fraction {dealias_fraction} outside (0, 1]"
            )));
        }
        Ok(Self {
            length,
            n,
            dealias_fraction,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Lattice spacing `2π/L` in wavenumber space.
    pub fn k_min(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Integer mode number `m ∈ [-N/2, N/2)` stored at FFT index `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT index holding mode `m`, if it is on the grid.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m < -half || m >= half {
            return None;
        }
        Some(if m >= 0 { m as usize } else { (m + self.n as i64) as usize })
    }

    /// Physical wavenumber `k_m = 2πm/L` at FFT index `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.mode(idx) as f64 * self.k_min()
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Largest wavenumber magnitude on the grid, `π N / L`.
    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * self.k_min()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest `|m|` kept by [`dealias`].
    pub fn dealias_cutoff(&self) -> usize {
        let limit = self.dealias_fraction * (self.n / 2) as f64;
        // |m| > limit is removed; guard against limit landing a hair below an integer
        let c = limit.floor() as usize;
        if (limit - (c + 1) as f64).abs() < 1e-12 {
            c + 1
        } else {
            c
        }
        .min(self.n / 2)
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.mode(idx).unsigned_abs() as usize <= self.dealias_cutoff()
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(FchError::GridMismatch)
        }
    }
}

/// Shorthand for [`GridSpec::new`].
pub fn make_grid(length: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(length, n)
}

#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> FftPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, FftPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            FftPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

fn forward_transform(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans(n).forward.process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

fn inverse_transform(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    plans(buf.len()).inverse.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Projects coefficients onto those of a real function: `û_{-m} = conj(û_m)`,
/// with real zero and Nyquist modes.
fn symmetrize(grid: &GridSpec, coeffs: &mut [Complex64]) {
    let n = grid.n();
    coeffs[0].im = 0.0;
    coeffs[n / 2].im = 0.0;
    for i in 1..n / 2 {
        let j = n - i;
        let avg = 0.5 * (coeffs[i] + coeffs[j].conj());
        coeffs[i] = avg;
        coeffs[j] = avg.conj();
    }
}

/// A real periodic function sampled on a [`GridSpec`].
#[derive(Clone)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("l2", &self.l2_norm())
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n()];
        coeffs[0] = Complex64::new(c, 0.0);
        Self {
            grid,
            values: vec![c; grid.n()],
            coeffs,
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(invalid(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        let coeffs = forward_transform(&values);
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        let coeffs = forward_transform(&values);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    /// Builds a field from FFT-ordered coefficients, projecting onto real data.
    pub fn from_coeffs(grid: GridSpec, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                coeffs.len()
            )));
        }
        symmetrize(&grid, &mut coeffs);
        let values = inverse_transform(&coeffs);
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    /// Builds a field from coefficients already known to be conjugate-symmetric.
    fn from_symmetric_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        let values = inverse_transform(&coeffs);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of integer mode `m`, zero if the mode is off-grid.
    pub fn coeff(&self, m: i64) -> Complex64 {
        self.grid
            .index_of(m)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Multiplies every coefficient by `symbol(k)`. `symbol` must be even in `k`.
    pub fn apply_even_symbol(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(self.grid.wavenumber(i)))
            .collect();
        Self::from_symmetric_coeffs(self.grid, coeffs)
    }

    /// Multiplies coefficients by `mask(idx)` (0 or 1 valued, even in the mode).
    fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if keep(i) { c } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self::from_symmetric_coeffs(self.grid, coeffs)
    }

    /// Spectral derivative of the band-limited interpolant. The Nyquist mode
    /// is dropped for odd orders, where its sign is ambiguous.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let nyq = self.grid.nyquist_index();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if order % 2 == 1 && i == nyq {
                    return Complex64::new(0.0, 0.0);
                }
                c * Complex64::new(0.0, self.grid.wavenumber(i)).powu(order)
            })
            .collect();
        Self::from_symmetric_coeffs(self.grid, coeffs)
    }

    /// Zeroes modes with `|m|` above the grid's dealias cutoff.
    pub fn dealias(&self) -> Self {
        let cutoff = self.grid.dealias_cutoff();
        if cutoff >= self.grid.n() / 2 {
            return self.clone();
        }
        self.masked(|i| self.grid.is_retained(i))
    }

    /// Dealiased pointwise product. The product of the two trigonometric
    /// interpolants is formed exactly on a doubled grid and then truncated,
    /// so no high-mode content folds back onto retained modes.
    pub fn product(&self, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let a = self.padded_samples();
        let b = other.padded_samples();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(Self::from_padded_samples(self.grid, prod))
    }

    /// Samples of the real trigonometric interpolant on the `2N` grid.
    /// The Nyquist coefficient is read as `c·cos(N k_min x / 2)`.
    pub(crate) fn padded_samples(&self) -> Vec<f64> {
        padded_from_coeffs(&self.coeffs)
    }

    /// Inverse of [`Self::padded_samples`] for (sums of) padded products:
    /// transforms, truncates to the `N` grid and dealiases.
    pub(crate) fn from_padded_samples(grid: GridSpec, samples: Vec<f64>) -> Self {
        let n = grid.n();
        let half = n / 2;
        let wide = forward_transform(&samples);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let m = grid.mode(i);
            if i == half {
                // ±N/2 both sample as the grid's Nyquist mode
                *c = wide[half] + wide[2 * n - half];
            } else if m >= 0 {
                *c = wide[m as usize];
            } else {
                *c = wide[(2 * n as i64 + m) as usize];
            }
        }
        symmetrize(&grid, &mut coeffs);
        Self::from_symmetric_coeffs(grid, coeffs).dealias()
    }

    /// `a·self + b·other`, exact in both representations.
    pub fn lin_comb(&self, a: f64, other: &SpectralField, b: f64) -> Self {
        assert_eq!(self.grid, other.grid, "lin_comb across grids");
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|x| a * x).collect(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a`, shifting the mean.
    pub fn add_constant(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += a);
        out.coeffs[0].re += a;
        out
    }

    /// `‖u‖_{L²(0,L)}` via Parseval.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.length() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `∫_0^L u dx`.
    pub fn integral(&self) -> f64 {
        self.grid.length() * self.coeffs[0].re
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// True when no mode above the dealias cutoff carries energy beyond `tol`
    /// relative to the total.
    pub fn is_band_limited(&self, tol: f64) -> bool {
        let total: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        let outside: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.grid.is_retained(*i))
            .map(|(_, c)| c.norm_sqr())
            .sum();
        outside <= tol * tol * total
    }
}

/// Samples on the `2N` grid of the real interpolant with FFT-ordered
/// coefficients `coeffs`.
pub(crate) fn padded_from_coeffs(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let half = n / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (i, &c) in coeffs.iter().enumerate() {
        if i == half {
            buf[half] = c * 0.5;
            buf[2 * n - half] = c * 0.5;
        } else if i < half {
            buf[i] = c;
        } else {
            buf[n + i] = c;
        }
    }
    plans(2 * n).inverse.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}


/// A real, even Fourier multiplier `u ↦ F⁻¹[σ(|k|) û]`.
#[derive(Clone)]
pub struct MultiplierOp {
    symbol: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    tag: String,
}

impl fmt::Debug for MultiplierOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierOp").field("tag", &self.tag).finish()
    }
}

impl MultiplierOp {
    /// `symbol` receives `|k|`.
    pub fn new(tag: impl Into<String>, symbol: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !symbol(0.0).is_finite() {
            return Err(invalid("multiplier symbol is not finite at k = 0"));
        }
        Ok(Self {
            symbol: Arc::new(symbol),
            tag: tag.into(),
        })
    }

    /// `(-∂x²)^ν`, symbol `|k|^{2ν}`.
    pub fn fractional_laplacian(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 1.0) {
            return Err(invalid(format!("fractional order ν = {nu} must be ≥ 1")));
        }
        Self::new(format!("(-dxx)^{nu}"), move |k| {
            if k == 0.0 {
                0.0
            } else {
                k.powf(2.0 * nu)
            }
        })
    }

    /// `(1 + a(-∂x²)^ν)^{-1}`.
    pub fn smoothing_inverse(nu: f64, a: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(invalid(format!("order ν = {nu} must be positive")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid(format!("weight a = {a} must be positive")));
        }
        Self::new(format!("(1+{a}(-dxx)^{nu})^-1"), move |k| {
            1.0 / (1.0 + a * k.powf(2.0 * nu))
        })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn eval(&self, k: f64) -> f64 {
        (self.symbol)(k.abs())
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        u.apply_even_symbol(|k| (self.symbol)(k.abs()))
    }
}

pub fn fractional_laplacian(u: &SpectralField, nu: f64) -> Result<SpectralField> {
    Ok(MultiplierOp::fractional_laplacian(nu)?.apply(u))
}

pub fn smoothing_inverse(u: &SpectralField, nu: f64, a: f64) -> Result<SpectralField> {
    Ok(MultiplierOp::smoothing_inverse(nu, a)?.apply(u))
}

pub fn derivative(u: &SpectralField, order: u32) -> Result<SpectralField> {
    if order == 0 {
        return Err(invalid("derivative order must be at least 1"));
    }
    Ok(u.derivative(order))
}

pub fn dealias(u: &SpectralField) -> SpectralField {
    u.dealias()
}

pub fn pointwise_product(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.product(v)
}

/// Seeded random real field on the retained modes with coefficients
/// `(ξ + iη)(1 + |k|)^{-decay}`, `ξ, η` standard normal. Each `(seed,
/// stream)` pair gives an independent, reproducible draw.
pub fn random_field(grid: GridSpec, decay: f64, seed: u64, stream: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n()];
    for m in 0..=grid.dealias_cutoff().min(grid.n() / 2 - 1) as i64 {
        let damp = (1.0 + grid.k_min() * m as f64).powf(-decay);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let c = if m == 0 {
            Complex64::new(re * damp, 0.0)
        } else {
            Complex64::new(re * damp, im * damp)
        };
        let i = grid.index_of(m).expect("mode below Nyquist");
        coeffs[i] = c;
        if m > 0 {
            coeffs[grid.index_of(-m).expect("mode below Nyquist")] = c.conj();
        }
    }
    SpectralField::from_symmetric_coeffs(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2pi(n: usize) -> GridSpec {
        GridSpec::new(2.0 * PI, n).unwrap()
    }

    fn rel_err(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn grid_nodes_and_wavenumbers() {
        let g = grid2pi(16);
        for (j, x) in g.nodes().iter().enumerate() {
            assert!((x - j as f64 * PI / 8.0).abs() < 1e-15);
        }
        let mut ks: Vec<f64> = g.wavenumbers();
        ks.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (-8..8).map(|m| m as f64).collect();
        for (k, e) in ks.iter().zip(&expected) {
            assert!((k - e).abs() < 1e-14);
        }

        let g = GridSpec::new(4.0 * PI, 32).unwrap();
        assert!((g.k_min() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(GridSpec::new(2.0 * PI, 15), Err(FchError::InvalidGrid(_))));
        assert!(GridSpec::new(2.0 * PI, 8).is_err());
        assert!(GridSpec::new(0.0, 16).is_err());
        assert!(GridSpec::new(-1.0, 16).is_err());
        assert!(GridSpec::with_dealias(1.0, 16, 0.0).is_err());
        assert!(GridSpec::with_dealias(1.0, 16, 1.5).is_err());
    }

    #[test]
    fn fractional_laplacian_examples() {
        let g = grid2pi(32);
        let c = SpectralField::constant(g, 3.0);
        assert!(fractional_laplacian(&c, 1.7).unwrap().linf_norm() < 1e-15);

        let cos1 = SpectralField::from_fn(g, f64::cos);
        assert!(rel_err(&fractional_laplacian(&cos1, 1.0).unwrap(), &cos1) < 1e-13);

        // |2|^{2·1.5} = 8
        let cos2 = SpectralField::from_fn(g, |x| (2.0 * x).cos());
        let expected = cos2.scale(2f64.powi(3));
        assert!(rel_err(&fractional_laplacian(&cos2, 1.5).unwrap(), &expected) < 1e-13);

        assert!(fractional_laplacian(&cos2, 0.5).is_err());
    }

    #[test]
    fn smoothing_inverse_examples() {
        let g = grid2pi(32);
        let cos1 = SpectralField::from_fn(g, f64::cos);
        let out = smoothing_inverse(&cos1, 1.0, 1.25).unwrap();
        assert!(rel_err(&out, &cos1.scale(4.0 / 9.0)) < 1e-14);

        let c = SpectralField::constant(g, -2.5);
        assert!(rel_err(&smoothing_inverse(&c, 2.3, 0.7).unwrap(), &c) < 1e-15);

        // (1 + 4^4)^{-1}; applying 1 + ∂x⁴ recovers cos 4x
        let cos4 = SpectralField::from_fn(g, |x| (4.0 * x).cos());
        let out = smoothing_inverse(&cos4, 2.0, 1.0).unwrap();
        assert!(rel_err(&out, &cos4.scale(1.0 / 257.0)) < 1e-12);
        let back = out.add(&out.derivative(4));
        assert!(rel_err(&back, &cos4) < 1e-12);

        assert!(smoothing_inverse(&cos4, 2.0, 0.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        let g = grid2pi(32);
        let s = SpectralField::from_fn(g, f64::sin);
        let c = SpectralField::from_fn(g, f64::cos);
        assert!(rel_err(&derivative(&s, 1).unwrap(), &c) < 1e-14);

        let c3 = SpectralField::from_fn(g, |x| (3.0 * x).cos());
        assert!(rel_err(&derivative(&c3, 2).unwrap(), &c3.scale(-9.0)) < 1e-14);

        let k = SpectralField::constant(g, 4.0);
        assert!(derivative(&k, 3).unwrap().linf_norm() < 1e-15);
        assert!(derivative(&k, 0).is_err());
    }

    #[test]
    fn dealias_examples() {
        let g = grid2pi(16);
        let c6 = SpectralField::from_fn(g, |x| (6.0 * x).cos());
        assert!(dealias(&c6).linf_norm() < 1e-13);
        let c4 = SpectralField::from_fn(g, |x| (4.0 * x).cos());
        assert!(rel_err(&dealias(&c4), &c4) < 1e-15);

        let g1 = GridSpec::with_dealias(2.0 * PI, 16, 1.0).unwrap();
        let u = SpectralField::from_fn(g1, |x| (7.0 * x).sin() + (8.0 * x).cos());
        assert_eq!(dealias(&u).values(), u.values());
    }

    #[test]
    fn product_examples() {
        let g = grid2pi(16);
        let one = SpectralField::constant(g, 1.0);
        let v = SpectralField::from_fn(g, |x| (2.0 * x).sin() + (6.0 * x).cos());
        assert!(rel_err(&pointwise_product(&one, &v).unwrap(), &v.dealias()) < 1e-14);

        let c = SpectralField::from_fn(g, f64::cos);
        let sq = pointwise_product(&c, &c).unwrap();
        let expected = SpectralField::from_fn(g, |x| 0.5 * (1.0 + (2.0 * x).cos()));
        assert!(rel_err(&sq, &expected) < 1e-14);

        // cos²(7x) = 1/2 + cos(14x)/2 and mode 14 is off the 16-point grid
        let c7 = SpectralField::from_fn(g, |x| (7.0 * x).cos());
        let sq7 = pointwise_product(&c7, &c7).unwrap();
        let half = SpectralField::constant(g, 0.5);
        assert!(rel_err(&sq7, &half) < 1e-14);

        let other = SpectralField::zeros(grid2pi(32));
        assert!(matches!(c.product(&other), Err(FchError::GridMismatch)));
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = grid2pi(64);
        let u = SpectralField::from_fn(g, |x| (x.sin() * 2.0).exp());
        let quad: f64 = u.values().iter().map(|v| v * v).sum::<f64>() * g.dx();
        let spec: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum();
        assert!((spec - quad / g.length()).abs() < 1e-12 * spec);
    }
}
