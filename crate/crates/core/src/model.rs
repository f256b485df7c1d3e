//! Right-hand sides of the fractional Camassa–Holm equation
//!
//! ```text
//! u_t + u_x + u u_x + (3/4)Λ u_x + (5/4)Λ u_t + (1/4)[2Λ(u u_x) + u Λ u_x] = 0,
//! ```
//!
//! with `Λ = (-∂x²)^ν`, in three algebraically related forms:
//!
//! * `direct_11` solves the equation above for `u_t` with
//!   `M = (1 + (5/4)Λ)^{-1}`:
//!   `u_t = -M[u_x + u u_x + (3/4)Λu_x + (1/2)Λ(u u_x) + (1/4)uΛu_x]`.
//! * `nonlocal_31` is the same equation as a nonlocal conservation law:
//!   `u_t = -(3/5)(1+u)u_x - M[(2/5)u_x + (2/5)u u_x + (1/4)[u, Λ]u_x]`.
//! * `simplified_32` keeps the structure with unit coefficients:
//!   `u_t = -(1+u)u_x + ∂x P(D) f₁(u) + P(D) f₂(u, u_x)`, where
//!   `P(D) = -(1 + Λ)^{-1}`, `f₁(u) = u + u²` and `f₂(u, v) = [u, Λ]v`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bony::commutator;
use crate::error::{invalid, FchError, Result};
use crate::spectral::{fractional_laplacian, smoothing_inverse, GridSpec, SpectralField};

/// Coefficient of `Λu_t` in the direct form.
pub const MOMENTUM_COEFF: f64 = 1.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Form {
    #[serde(rename = "direct_11")]
    Direct11,
    #[serde(rename = "nonlocal_31")]
    Nonlocal31,
    #[serde(rename = "simplified_32")]
    Simplified32,
}

impl Form {
    pub const ALL: [Form; 3] = [Form::Direct11, Form::Nonlocal31, Form::Simplified32];

    pub fn tag(self) -> &'static str {
        match self {
            Form::Direct11 => "direct_11",
            Form::Nonlocal31 => "nonlocal_31",
            Form::Simplified32 => "simplified_32",
        }
    }

    /// `c` in the transport term `-c(1 + u)u_x`. The direct form is the
    /// nonlocal one rearranged, so it shares the `3/5`.
    pub fn transport_factor(self) -> f64 {
        match self {
            Form::Direct11 | Form::Nonlocal31 => 0.6,
            Form::Simplified32 => 1.0,
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Form {
    type Err = FchError;

    fn from_str(s: &str) -> Result<Self> {
        Form::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| invalid(format!("unknown form {s:?} (expected direct_11, nonlocal_31 or simplified_32)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FchParams {
    pub nu: f64,
    pub form: Form,
    pub grid: GridSpec,
}

impl FchParams {
    pub fn new(nu: f64, form: Form, grid: GridSpec) -> Result<Self> {
        if !(nu.is_finite() && nu >= 1.0) {
            return Err(invalid(format!("ν = {nu} must be ≥ 1")));
        }
        Ok(Self { nu, form, grid })
    }

    fn check(&self, u: &SpectralField) -> Result<()> {
        self.grid.ensure_same(u.grid())
    }
}

/// `f₁(u) = u + u²`.
pub fn f1(u: &SpectralField) -> SpectralField {
    u.add(&u.product(u).expect("same field"))
}

/// `f₂(u, v) = [u, Λ]v = uΛv - Λ(uv)`.
pub fn f2(u: &SpectralField, v: &SpectralField, nu: f64) -> Result<SpectralField> {
    commutator(u, v, nu)
}

/// `P(D)v = -(1 + Λ)^{-1}v`.
pub fn p_operator(v: &SpectralField, nu: f64) -> Result<SpectralField> {
    Ok(smoothing_inverse(v, nu, 1.0)?.scale(-1.0))
}

/// `-c(1 + u)u_x` with `c` from the form.
pub fn transport_term(u: &SpectralField, params: &FchParams) -> Result<SpectralField> {
    params.check(u)?;
    let ux = u.derivative(1);
    let uux = u.product(&ux)?;
    Ok(ux.add(&uux).scale(-params.form.transport_factor()))
}

/// Everything in the right-hand side except the transport term.
pub fn source_term(u: &SpectralField, params: &FchParams) -> Result<SpectralField> {
    params.check(u)?;
    let nu = params.nu;
    let ux = u.derivative(1);
    let uux = u.product(&ux)?;
    match params.form {
        Form::Direct11 | Form::Nonlocal31 => {
            let comm = commutator(u, &ux, nu)?;
            let inner = ux.scale(0.4).add(&uux.scale(0.4)).add(&comm.scale(0.25));
            Ok(smoothing_inverse(&inner, nu, MOMENTUM_COEFF)?.scale(-1.0))
        }
        Form::Simplified32 => {
            let a = p_operator(&u.add(&u.product(u)?), nu)?.derivative(1);
            let b = p_operator(&commutator(u, &ux, nu)?, nu)?;
            Ok(a.add(&b))
        }
    }
}

fn assemble(u: &SpectralField, params: &FchParams) -> Result<SpectralField> {
    Ok(transport_term(u, params)?.add(&source_term(u, params)?))
}

/// `u_t` for the nonlocal forms.
pub fn rhs_nonlocal(u: &SpectralField, params: &FchParams) -> Result<SpectralField> {
    match params.form {
        Form::Nonlocal31 | Form::Simplified32 => assemble(u, params),
        Form::Direct11 => Err(invalid("rhs_nonlocal needs form nonlocal_31 or simplified_32")),
    }
}

/// `u_t` from the original equation, inverting `1 + (5/4)Λ` on every term.
pub fn rhs_direct(u: &SpectralField, params: &FchParams) -> Result<SpectralField> {
    if params.form != Form::Direct11 {
        return Err(invalid("rhs_direct needs form direct_11"));
    }
    params.check(u)?;
    let nu = params.nu;
    let ux = u.derivative(1);
    let uux = u.product(&ux)?;
    let lux = fractional_laplacian(&ux, nu)?;
    let inner = ux
        .add(&uux)
        .add(&lux.scale(0.75))
        .add(&fractional_laplacian(&uux, nu)?.scale(0.5))
        .add(&u.product(&lux)?.scale(0.25));
    Ok(smoothing_inverse(&inner, nu, MOMENTUM_COEFF)?.scale(-1.0))
}

/// `u_t` for whichever form `params` names.
pub fn rhs(u: &SpectralField, params: &FchParams) -> Result<SpectralField> {
    match params.form {
        Form::Direct11 => rhs_direct(u, params),
        _ => rhs_nonlocal(u, params),
    }
}

/// `(u₁, u₂)` with `u₂` standing for `∂x u₁`.
#[derive(Clone, Debug)]
pub struct TwoComponentState {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl TwoComponentState {
    /// The consistent state `(u, u_x)`.
    pub fn from_field(u: &SpectralField) -> Self {
        Self {
            u1: u.clone(),
            u2: u.derivative(1),
        }
    }

    /// `‖u₂ - ∂x u₁‖_{L²} / ‖u₂‖_{L²}`, or the absolute gap when `u₂ = 0`.
    pub fn consistency_defect(&self) -> f64 {
        let gap = self.u2.sub(&self.u1.derivative(1)).l2_norm();
        let scale = self.u2.l2_norm();
        if scale > 0.0 {
            gap / scale
        } else {
            gap
        }
    }
}

/// `(F₁, F₂)` of the first-order system in `(u, u_x)`:
///
/// * `F₁ = -u₂ - ½∂x(u₁²) + ∂x P(D) f₁(u₁) + P(D) f₂(u₁, u₂)`
/// * `F₂ = -∂x(u₂ + u₁u₂) + ∂x² P(D) f₁(u₁) + ∂x P(D) f₂(u₁, u₂)`
pub fn rhs_two_component(state: &TwoComponentState, nu: f64) -> Result<TwoComponentState> {
    let (u1, u2) = (&state.u1, &state.u2);
    u1.grid().ensure_same(u2.grid())?;
    let pf1 = p_operator(&f1(u1), nu)?;
    let pf2 = p_operator(&f2(u1, u2, nu)?, nu)?;
    let sq = u1.product(u1)?;
    let f_1 = u2
        .scale(-1.0)
        .sub(&sq.derivative(1).scale(0.5))
        .add(&pf1.derivative(1))
        .add(&pf2);
    let f_2 = u2
        .add(&u1.product(u2)?)
        .derivative(1)
        .scale(-1.0)
        .add(&pf1.derivative(2))
        .add(&pf2.derivative(1));
    Ok(TwoComponentState { u1: f_1, u2: f_2 })
}

/// Local coefficients of the equation at `ν = 1`, read off by expanding
/// `Λ = -∂x²` and `∂x²(u u_x) = 3u_x u_xx + u u_xxx`:
///
/// `(1 - α∂x²)u_t + k₁u_x - δu_xxx + βu u_x = k₂(2u_x u_xx + u u_xxx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChCoefficients {
    pub momentum: f64,
    pub k1: f64,
    pub dispersion: f64,
    pub transport: f64,
    pub k2: f64,
}

pub const CH_COEFFICIENTS: ChCoefficients = ChCoefficients {
    momentum: 1.25,
    k1: 1.0,
    dispersion: 0.75,
    transport: 1.0,
    k2: 0.75,
};

/// `u_t` from the local equation with coefficients `c`, using pointwise
/// products of derivatives only.
pub fn ch_local_rhs(u: &SpectralField, c: &ChCoefficients) -> Result<SpectralField> {
    let ux = u.derivative(1);
    let uxx = u.derivative(2);
    let uxxx = u.derivative(3);
    let nonlinear = ux.product(&uxx)?.scale(2.0).add(&u.product(&uxxx)?);
    let rhs = ux
        .scale(-c.k1)
        .add(&uxxx.scale(c.dispersion))
        .sub(&u.product(&ux)?.scale(c.transport))
        .add(&nonlinear.scale(c.k2));
    // (1 - α∂x²)^{-1} is the smoothing inverse with ν = 1
    smoothing_inverse(&rhs, 1.0, c.momentum)
}

/// Relative `L²` gap between the direct form at `ν = 1` and the local
/// Camassa–Holm-type equation with [`CH_COEFFICIENTS`]. Zero input gives 0.
pub fn ch_reduction_check(u: &SpectralField) -> Result<f64> {
    let params = FchParams::new(1.0, Form::Direct11, *u.grid())?;
    let direct = rhs_direct(u, &params)?;
    let local = ch_local_rhs(u, &CH_COEFFICIENTS)?;
    let gap = direct.sub(&local).l2_norm();
    let scale = direct.l2_norm();
    Ok(if scale > 0.0 { gap / scale } else { gap })
}
