//! Littlewood–Paley blocks, Besov norms and the truncated analytic-scale norm.
//!
//! The low-pass profile is
//! `χ(ξ) = 1` on `|ξ| ≤ 1`, `exp(1 - 1/(1 - t²))` with `t = 3(|ξ| - 1)` on
//! `1 < |ξ| < 4/3`, and `0` beyond. The annular profile is
//! `φ(ξ) = χ(ξ/2) - χ(ξ)`, supported in `3/4 ≤ |ξ| ≤ 8/3`, so that
//! `χ(ξ) + Σ_{q≥0} φ(2^{-q}ξ) = 1` telescopes exactly.
//!
//! Blocks: `Δ_{-1} = χ(D)`, `Δ_q = φ(2^{-q}D)` for `q ≥ 0`, and the low
//! cut-off `S_q = χ(2^{-q}D) = Σ_{p ≤ q-1} Δ_p`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::spectral::{GridSpec, SpectralField};

pub fn chi(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 4.0 / 3.0 {
        0.0
    } else {
        let t = 3.0 * (a - 1.0);
        let d = 1.0 - t * t;
        if d <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / d).exp()
        }
    }
}

pub fn phi(xi: f64) -> f64 {
    chi(xi / 2.0) - chi(xi)
}

/// Precomputed block symbols for one grid.
pub struct DyadicSystem {
    grid: GridSpec,
    qmax: i32,
    // row q + 1 holds the symbol of Δ_q at every FFT index
    blocks: Vec<Vec<f64>>,
    // per FFT index, the blocks with a nonzero symbol there (at most two)
    members: Vec<Vec<(i32, f64)>>,
    // row q holds S_q as the partial block sum Σ_{p<q} Δ_p, q = 0..=qmax+1
    lows: Vec<Vec<f64>>,
}

impl fmt::Debug for DyadicSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DyadicSystem")
            .field("grid", &self.grid)
            .field("qmax", &self.qmax)
            .finish()
    }
}

/// Largest block index whose annulus meets a wavenumber of the grid.
fn qmax_for(grid: &GridSpec) -> i32 {
    let kmax = grid.k_max();
    let mut q = -1;
    while 0.75 * 2f64.powi(q + 1) < kmax {
        q += 1;
    }
    q
}

impl DyadicSystem {
    pub fn new(grid: GridSpec) -> Self {
        let qmax = qmax_for(&grid);
        let ks = grid.wavenumbers();
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity((qmax + 2) as usize);
        blocks.push(ks.iter().map(|&k| chi(k)).collect());
        for q in 0..=qmax {
            let scale = 2f64.powi(-q);
            blocks.push(
                ks.iter()
                    .map(|&k| chi(k * scale / 2.0) - chi(k * scale))
                    .collect(),
            );
        }
        let n = grid.n();
        let members = (0..n)
            .map(|i| {
                (-1..=qmax)
                    .filter_map(|q| {
                        let v = blocks[(q + 1) as usize][i];
                        (v != 0.0).then_some((q, v))
                    })
                    .collect()
            })
            .collect();
        let mut lows = Vec::with_capacity((qmax + 2) as usize);
        let mut acc = vec![0.0; n];
        for b in &blocks {
            for (a, x) in acc.iter_mut().zip(b) {
                *a += x;
            }
            lows.push(acc.clone());
        }
        Self {
            grid,
            qmax,
            blocks,
            members,
            lows,
        }
    }

    /// Blocks `(q, symbol)` that see FFT index `i`.
    pub(crate) fn members(&self, i: usize) -> &[(i32, f64)] {
        &self.members[i]
    }

    /// Symbol of `S_q` at FFT index `i`, built as a partial block sum.
    pub(crate) fn low_at(&self, q: i32, i: usize) -> f64 {
        if q <= -1 {
            0.0
        } else {
            let row = (q as usize).min(self.lows.len() - 1);
            self.lows[row][i]
        }
    }

    /// Shared, lazily built system for `grid`.
    pub fn for_grid(grid: &GridSpec) -> Arc<DyadicSystem> {
        type Key = (u64, usize, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<DyadicSystem>>>> = OnceLock::new();
        let key = (
            grid.length().to_bits(),
            grid.n(),
            grid.dealias_fraction().to_bits(),
        );
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
        guard
            .entry(key)
            .or_insert_with(|| Arc::new(DyadicSystem::new(*grid)))
            .clone()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn qmax(&self) -> i32 {
        self.qmax
    }

    /// Block indices `-1..=qmax`.
    pub fn block_range(&self) -> std::ops::RangeInclusive<i32> {
        -1..=self.qmax
    }

    /// Symbol of `Δ_q`, `None` for blocks absent from the grid.
    pub fn block_symbol(&self, q: i32) -> Option<&[f64]> {
        if q < -1 || q > self.qmax {
            None
        } else {
            Some(&self.blocks[(q + 1) as usize])
        }
    }

    /// Symbol of `S_q = χ(2^{-q}D)`.
    pub fn cutoff_symbol(&self, q: i32) -> Vec<f64> {
        let scale = 2f64.powi(-q);
        self.grid
            .wavenumbers()
            .into_iter()
            .map(|k| chi(k * scale))
            .collect()
    }

    fn apply(u: &SpectralField, symbol: &[f64]) -> SpectralField {
        let coeffs: Vec<Complex64> = u
            .coeffs()
            .iter()
            .zip(symbol)
            .map(|(c, s)| c * s)
            .collect();
        SpectralField::from_coeffs(*u.grid(), coeffs).expect("symbol length matches grid")
    }

    /// `Δ_q u`; blocks above `qmax` are identically zero.
    pub fn block(&self, u: &SpectralField, q: i32) -> SpectralField {
        match self.block_symbol(q) {
            Some(sym) => Self::apply(u, sym),
            None => SpectralField::zeros(*u.grid()),
        }
    }

    /// `S_q u` for any `q`; `q ≤ -1` gives zero.
    pub fn cutoff(&self, u: &SpectralField, q: i32) -> SpectralField {
        if q <= -1 {
            return SpectralField::zeros(*u.grid());
        }
        Self::apply(u, &self.cutoff_symbol(q))
    }

    /// `‖Δ_q u‖_{L²}` straight from the coefficients.
    pub fn block_l2(&self, u: &SpectralField, q: i32) -> f64 {
        match self.block_symbol(q) {
            Some(sym) => {
                let e: f64 = u
                    .coeffs()
                    .iter()
                    .zip(sym)
                    .map(|(c, s)| c.norm_sqr() * s * s)
                    .sum();
                (self.grid.length() * e).sqrt()
            }
            None => 0.0,
        }
    }

    /// Max over lattice wavenumbers of `|χ(k) + Σ_q φ(2^{-q}k) - 1|`.
    pub fn partition_residual(&self) -> f64 {
        (0..self.grid.n())
            .map(|i| {
                let total: f64 = self.blocks.iter().map(|b| b[i]).sum();
                (total - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn dyadic_block(u: &SpectralField, q: i32) -> Result<SpectralField> {
    if q < -1 {
        return Err(invalid(format!("block index {q} is below -1")));
    }
    Ok(DyadicSystem::for_grid(u.grid()).block(u, q))
}

pub fn low_cutoff(u: &SpectralField, q: i32) -> Result<SpectralField> {
    if q < 0 {
        return Err(invalid(format!("cut-off index {q} is negative")));
    }
    Ok(DyadicSystem::for_grid(u.grid()).cutoff(u, q))
}

/// Lebesgue exponent of a Besov norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Lebesgue {
    Two,
    Inf,
}

/// Summation exponent of a Besov norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Summation {
    One,
    Two,
    Inf,
}

fn parse_exponent(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

impl Lebesgue {
    pub fn from_value(p: f64) -> Result<Self> {
        if p == 2.0 {
            Ok(Self::Two)
        } else if p == f64::INFINITY {
            Ok(Self::Inf)
        } else {
            Err(invalid(format!("Lebesgue exponent p = {p} unsupported (use 2 or inf)")))
        }
    }
}

impl FromStr for Lebesgue {
    type Err = crate::FchError;
    fn from_str(s: &str) -> Result<Self> {
        parse_exponent(s)
            .ok_or_else(|| invalid(format!("cannot parse exponent {s:?}")))
            .and_then(Self::from_value)
    }
}

impl Summation {
    pub fn from_value(r: f64) -> Result<Self> {
        if r == 1.0 {
            Ok(Self::One)
        } else if r == 2.0 {
            Ok(Self::Two)
        } else if r == f64::INFINITY {
            Ok(Self::Inf)
        } else {
            Err(invalid(format!("summation exponent r = {r} unsupported (use 1, 2 or inf)")))
        }
    }

    fn combine(self, terms: impl Iterator<Item = f64>) -> f64 {
        match self {
            Self::One => terms.sum(),
            Self::Two => terms.map(|t| t * t).sum::<f64>().sqrt(),
            Self::Inf => terms.fold(0.0, f64::max),
        }
    }
}

impl FromStr for Summation {
    type Err = crate::FchError;
    fn from_str(s: &str) -> Result<Self> {
        parse_exponent(s)
            .ok_or_else(|| invalid(format!("cannot parse exponent {s:?}")))
            .and_then(Self::from_value)
    }
}

/// Index triple `(s, p, r)` of a nonhomogeneous Besov space `B^s_{p,r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BesovSpec {
    pub s: f64,
    pub p: Lebesgue,
    pub r: Summation,
}

impl BesovSpec {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(invalid("regularity index must be finite"));
        }
        Ok(Self {
            s,
            p: Lebesgue::from_value(p)?,
            r: Summation::from_value(r)?,
        })
    }

    /// `B^s_{2,r}`.
    pub fn l2(s: f64, r: Summation) -> Self {
        Self {
            s,
            p: Lebesgue::Two,
            r,
        }
    }
}

/// Critical regularity `s₀(ν)` of the well-posedness space `B^{s₀}_{2,1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalIndex {
    pub nu: f64,
    pub s0: f64,
}

impl CriticalIndex {
    /// `s₀ = 2ν - 1/2` for `ν > 3/2` and `5/2` for `1 ≤ ν ≤ 3/2`. The
    /// endpoint `ν = 1` reuses `5/2` so classical CH runs can be monitored.
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 1.0) {
            return Err(invalid(format!("ν = {nu} must be ≥ 1")));
        }
        let s0 = if nu > 1.5 { 2.0 * nu - 0.5 } else { 2.5 };
        Ok(Self { nu, s0 })
    }
}

pub fn critical_index(nu: f64) -> Result<f64> {
    Ok(CriticalIndex::new(nu)?.s0)
}

/// One row of a block-by-block Besov breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockNorm {
    pub q: i32,
    pub block_l2: f64,
    pub block_linf: f64,
    /// `2^{qs}‖Δ_q u‖_{L^p}` for the requested `p`.
    pub weighted: f64,
}

pub fn besov_blocks(u: &SpectralField, spec: &BesovSpec) -> Vec<BlockNorm> {
    let sys = DyadicSystem::for_grid(u.grid());
    sys.block_range()
        .map(|q| {
            let block_l2 = sys.block_l2(u, q);
            let block_linf = sys.block(u, q).linf_norm();
            let base = match spec.p {
                Lebesgue::Two => block_l2,
                Lebesgue::Inf => block_linf,
            };
            BlockNorm {
                q,
                block_l2,
                block_linf,
                weighted: 2f64.powf(q as f64 * spec.s) * base,
            }
        })
        .collect()
}

/// `‖u‖_{B^s_{p,r}} = ‖(2^{qs}‖Δ_q u‖_{L^p})_{q ≥ -1}‖_{ℓ^r}`.
pub fn besov_norm(u: &SpectralField, spec: &BesovSpec) -> f64 {
    let sys = DyadicSystem::for_grid(u.grid());
    let weight = |q: i32| 2f64.powf(q as f64 * spec.s);
    match spec.p {
        Lebesgue::Two => spec
            .r
            .combine(sys.block_range().map(|q| weight(q) * sys.block_l2(u, q))),
        Lebesgue::Inf => spec
            .r
            .combine(sys.block_range().map(|q| weight(q) * sys.block(u, q).linf_norm())),
    }
}

/// `‖∂_x^k u‖_{B^{s}_{2,1}}` for `k = 0..=kmax`, evaluated on coefficients.
pub fn derivative_besov_norms(u: &SpectralField, kmax: usize, s: f64) -> Vec<f64> {
    let grid = *u.grid();
    let sys = DyadicSystem::for_grid(&grid);
    let ks = grid.wavenumbers();
    let nyq = grid.nyquist_index();
    let energy: Vec<f64> = u.coeffs().iter().map(|c| c.norm_sqr()).collect();
    (0..=kmax)
        .map(|order| {
            sys.block_range()
                .map(|q| {
                    let sym = sys.block_symbol(q).expect("q within range");
                    let e: f64 = (0..grid.n())
                        .filter(|&i| !(order % 2 == 1 && i == nyq))
                        .map(|i| energy[i] * sym[i] * sym[i] * ks[i].abs().powi(2 * order as i32))
                        .sum();
                    2f64.powf(q as f64 * s) * (grid.length() * e).sqrt()
                })
                .sum()
        })
        .collect()
}

/// Relative coefficient floor below which modes count as transform noise.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Truncated `|||u|||_s = max_{k ≤ K} s^k ‖∂^k u‖_{B^{s₀}_{2,1}} (k+1)²/k!`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EsNorm {
    pub value: f64,
    pub argmax_k: usize,
    /// False when the maximizer sits at the truncation order or is
    /// indistinguishable from amplified round-off.
    pub converged: bool,
    pub terms: Vec<f64>,
    /// The same weights applied to a field with every retained mode at the
    /// round-off floor.
    pub noise_terms: Vec<f64>,
}

/// Weight `s^k (k+1)² / k!` applied to the `k`-th derivative norm.
pub fn es_weight(s: f64, k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    s.powi(k as i32) * ((k + 1) * (k + 1)) as f64 / fact
}

fn check_es_args(s: f64, kmax: usize) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid(format!("scale parameter s = {s} outside (0, 1]")));
    }
    if kmax < 1 {
        return Err(invalid("truncation order must be at least 1"));
    }
    Ok(())
}

/// `u` with coefficients below `ROUNDOFF_FLOOR · max|û|` set to zero, so
/// derivatives do not amplify transform noise.
fn above_floor(u: &SpectralField) -> SpectralField {
    let peak = u.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = peak * ROUNDOFF_FLOOR;
    let coeffs = u
        .coeffs()
        .iter()
        .map(|&c| if c.norm() > cut { c } else { Complex64::new(0.0, 0.0) })
        .collect();
    SpectralField::from_coeffs(*u.grid(), coeffs).expect("grid-sized coefficients")
}

/// Derivative norms of a round-off-level field on the same grid, used to
/// tell genuine high-order growth from amplified transform noise.
fn noise_norms(u: &SpectralField, kmax: usize, s0: f64) -> Vec<f64> {
    let grid = *u.grid();
    let amp = u.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max) * ROUNDOFF_FLOOR;
    let coeffs: Vec<Complex64> = (0..grid.n())
        .map(|i| {
            if i != 0 && grid.is_retained(i) {
                Complex64::new(amp, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let noise = SpectralField::from_coeffs(grid, coeffs).expect("grid-sized coefficients");
    derivative_besov_norms(&noise, kmax, s0)
}

/// Evaluates the truncated norm for several `s` from one set of derivative
/// norms, so monotonicity in `s` holds exactly. Terms with `k ≥ 1` use the
/// field with sub-floor coefficients removed; the `k = 0` term is the plain
/// `B^{s₀}_{2,1}` norm.
pub fn es_norms_multi(u: &SpectralField, scales: &[f64], kmax: usize, nu: f64) -> Result<Vec<EsNorm>> {
    for &s in scales {
        check_es_args(s, kmax)?;
    }
    let s0 = critical_index(nu)?;
    let mut norms = derivative_besov_norms(&above_floor(u), kmax, s0);
    norms[0] = derivative_besov_norms(u, 0, s0)[0];
    let noise = noise_norms(u, kmax, s0);
    Ok(scales
        .iter()
        .map(|&s| assemble_es(&norms, &noise, s, kmax))
        .collect())
}

fn assemble_es(norms: &[f64], noise: &[f64], s: f64, kmax: usize) -> EsNorm {
    let terms: Vec<f64> = norms
        .iter()
        .enumerate()
        .map(|(k, n)| es_weight(s, k) * n)
        .collect();
    let noise_terms: Vec<f64> = noise
        .iter()
        .enumerate()
        .map(|(k, n)| es_weight(s, k) * n)
        .collect();
    let (argmax_k, value) = terms
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (k, t)| if t > best.1 { (k, t) } else { best });
    let converged = value == 0.0 || (argmax_k < kmax && value > noise_terms[argmax_k]);
    EsNorm {
        value,
        argmax_k,
        converged,
        terms,
        noise_terms,
    }
}

pub fn es_norm_truncated(u: &SpectralField, s: f64, kmax: usize, nu: f64) -> Result<EsNorm> {
    Ok(es_norms_multi(u, &[s], kmax, nu)?.remove(0))
}
