//! Explicit time integration of the model with norm monitoring.
//!
//! The semidiscretization is the dealiased Fourier-Galerkin right-hand side
//! from [`crate::model`]; time stepping is classical RK4 with a fixed step
//! chosen up front so that `t_end` is reached exactly.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, FchError, Result};
use crate::littlewood_paley::{besov_norm, critical_index, BesovSpec, Summation};
use crate::model::{rhs, FchParams};
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Requested step; reduced if the CFL cap is smaller.
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Steps between recorded diagnostics.
    pub monitor_stride: usize,
    /// Cap on `‖u_x‖_{L∞}` beyond which the run stops with a blow-up report.
    pub blowup_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            cfl_safety: 0.5,
            monitor_stride: 10,
            blowup_threshold: 1e3,
        }
    }
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end = {} must be positive", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(invalid(format!("cfl_safety = {} outside (0, 1]", self.cfl_safety)));
        }
        if self.monitor_stride == 0 {
            return Err(invalid("monitor_stride must be at least 1"));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(invalid("blowup_threshold must be positive"));
        }
        Ok(())
    }

    /// Number of steps and the uniform step that lands on `t_end`, given
    /// the sup norm that sets the CFL cap `cfl_safety·Δx/(1 + ‖u‖∞)`.
    pub fn step_plan(&self, dx: f64, sup: f64) -> (usize, f64) {
        let cap = self.cfl_safety * dx / (1.0 + sup);
        let dt = self.dt.min(cap);
        // guard against 1/1e-3 = 1000.0000000000001 adding a step
        let steps = ((self.t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

/// Diagnostics at one monitor time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormSample {
    pub t: f64,
    /// `‖u‖_{B^{s₀}_{2,1}}`
    pub besov_s0: f64,
    pub l2: f64,
    pub linf_ux: f64,
    /// `∫u dx`
    pub mass: f64,
}

impl NormSample {
    pub fn measure(u: &SpectralField, t: f64, s0: f64) -> Self {
        Self {
            t,
            besov_s0: besov_norm(u, &BesovSpec::l2(s0, Summation::One)),
            l2: u.l2_norm(),
            linf_ux: u.derivative(1).linf_norm(),
            mass: u.integral(),
        }
    }

    fn is_finite(&self) -> bool {
        [self.besov_s0, self.l2, self.linf_ux, self.mass]
            .iter()
            .all(|x| x.is_finite())
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub nu: f64,
    pub s0: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub norms: Vec<NormSample>,
}

impl TrajectoryRecord {
    fn new(nu: f64, s0: f64, dt: f64) -> Self {
        Self {
            nu,
            s0,
            dt,
            times: Vec::new(),
            snapshots: Vec::new(),
            norms: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, u: &SpectralField) {
        self.times.push(t);
        self.norms.push(NormSample::measure(u, t, self.s0));
        self.snapshots.push(u.clone());
    }

    pub fn final_field(&self) -> Option<&SpectralField> {
        self.snapshots.last()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// `max_t |∫u(t) - ∫u(0)|`.
    pub fn mass_drift(&self) -> f64 {
        match self.norms.first() {
            Some(first) => self
                .norms
                .iter()
                .map(|n| (n.mass - first.mass).abs())
                .fold(0.0, f64::max),
            None => 0.0,
        }
    }
}

/// What the integrator knew when it stopped early.
#[derive(Clone)]
pub struct BlowUpReport {
    pub reason: String,
    /// Time of the step that tripped the monitor.
    pub t_cross: f64,
    pub step: usize,
    /// Last time with an accepted field.
    pub t_last: f64,
    pub field: SpectralField,
    pub linf_ux: f64,
    pub record: TrajectoryRecord,
}

impl fmt::Debug for BlowUpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlowUpReport")
            .field("reason", &self.reason)
            .field("t_cross", &self.t_cross)
            .field("step", &self.step)
            .field("t_last", &self.t_last)
            .field("linf_ux", &self.linf_ux)
            .finish()
    }
}

/// One classical RK4 step of `u_t = rhs(u)`.
pub fn step_rk4(u: &SpectralField, dt: f64, params: &FchParams) -> Result<SpectralField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt = {dt} must be positive")));
    }
    let finite = |f: SpectralField| {
        if f.is_finite() {
            Ok(f)
        } else {
            Err(FchError::NonFinite("RK4 stage"))
        }
    };
    let k1 = finite(rhs(u, params)?)?;
    let k2 = finite(rhs(&u.lin_comb(1.0, &k1, 0.5 * dt), params)?)?;
    let k3 = finite(rhs(&u.lin_comb(1.0, &k2, 0.5 * dt), params)?)?;
    let k4 = finite(rhs(&u.lin_comb(1.0, &k3, dt), params)?)?;
    let incr = k1.add(&k4).add(&k2.add(&k3).scale(2.0));
    finite(u.lin_comb(1.0, &incr, dt / 6.0))
}

/// Integrates with an explicit `(steps, dt)` plan.
pub fn integrate_planned(
    u0: &SpectralField,
    steps: usize,
    dt: f64,
    config: &SolverConfig,
    params: &FchParams,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    params.grid.ensure_same(u0.grid())?;
    if !u0.is_finite() {
        return Err(FchError::NonFinite("initial data"));
    }
    let s0 = critical_index(params.nu)?;
    let mut record = TrajectoryRecord::new(params.nu, s0, dt);
    record.push(0.0, u0);
    let mut u = u0.clone();
    let mut t_last = 0.0;
    for step in 1..=steps {
        let t = step as f64 * dt;
        let blow = move |reason: String, linf_ux: f64, field: &SpectralField, record: &TrajectoryRecord| {
            FchError::BlowUp(Box::new(BlowUpReport {
                reason,
                t_cross: t,
                step,
                t_last,
                field: field.clone(),
                linf_ux,
                record: record.clone(),
            }))
        };
        let next = match step_rk4(&u, dt, params) {
            Ok(v) => v,
            Err(FchError::NonFinite(what)) => {
                return Err(blow(format!("non-finite value in {what}"), f64::NAN, &u, &record));
            }
            Err(e) => return Err(e),
        };
        let linf_ux = next.derivative(1).linf_norm();
        if !(linf_ux <= config.blowup_threshold) {
            return Err(blow(
                format!("‖u_x‖∞ = {linf_ux:.6e} exceeds {:.6e}", config.blowup_threshold),
                linf_ux,
                &u,
                &record,
            ));
        }
        u = next;
        t_last = t;
        if step % config.monitor_stride == 0 || step == steps {
            record.push(t, &u);
            if !record.norms.last().is_some_and(NormSample::is_finite) {
                return Err(blow("non-finite monitor norm".into(), linf_ux, &u, &record));
            }
        }
    }
    Ok(record)
}

/// Integrates from `u0` to `config.t_end`.
pub fn integrate(u0: &SpectralField, config: &SolverConfig, params: &FchParams) -> Result<TrajectoryRecord> {
    config.validate()?;
    let (steps, dt) = config.step_plan(u0.grid().dx(), u0.linf_norm());
    integrate_planned(u0, steps, dt, config, params)
}

/// `direction / ‖direction‖_{B^{s₀-1}_{2,1}}`.
pub fn normalize_direction(direction: &SpectralField, nu: f64) -> Result<SpectralField> {
    let s0 = critical_index(nu)?;
    let n = besov_norm(direction, &BesovSpec::l2(s0 - 1.0, Summation::One));
    if !(n > 0.0) {
        return Err(invalid("perturbation direction must be nonzero"));
    }
    Ok(direction.scale(1.0 / n))
}

/// `sup_t ‖u_δ(t) - u(t)‖_{B^{s₀-1}_{2,∞}} / |δ|` for the runs from `u0` and
/// `u0 + δ·direction`, both on the same time steps.
pub fn continuous_dependence_probe(
    u0: &SpectralField,
    delta: f64,
    direction: &SpectralField,
    config: &SolverConfig,
    params: &FchParams,
) -> Result<f64> {
    config.validate()?;
    let s0 = critical_index(params.nu)?;
    let dnorm = besov_norm(direction, &BesovSpec::l2(s0 - 1.0, Summation::One));
    if (dnorm - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "direction must have unit B^(s0-1)_(2,1) norm, got {dnorm}"
        )));
    }
    if !delta.is_finite() {
        return Err(invalid("delta must be finite"));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let perturbed = u0.lin_comb(1.0, direction, delta);
    let sup = u0.linf_norm().max(perturbed.linf_norm());
    let (steps, dt) = config.step_plan(u0.grid().dx(), sup);
    let (a, b) = rayon::join(
        || integrate_planned(u0, steps, dt, config, params),
        || integrate_planned(&perturbed, steps, dt, config, params),
    );
    let (a, b) = (a?, b?);
    let spec = BesovSpec::l2(s0 - 1.0, Summation::Inf);
    Ok(a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| besov_norm(&y.sub(x), &spec) / delta.abs())
        .fold(0.0, f64::max))
}
