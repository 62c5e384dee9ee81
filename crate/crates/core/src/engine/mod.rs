//! Fixed-step time integration, gain schedules, trajectory records, and the
//! multi-restart solve harness.
//!
//! The integrator works on flat `f64` state vectors. A system exposes `dim()`
//! state components and `gains()` multipliers; under an adaptive schedule the
//! multipliers are appended to the state and co-integrated with
//! `dγ_i/dt = κ' r_i(x)`, where `r` is the system's constraint residual.

mod solvers;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::ising::{round_to_spins, IsingError, SpinConfig};
use crate::iterators::IterError;

pub use solvers::{run_solver, RunSummary, SolveOutcome, SolverKind, SolverSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("trajectory diverged at step {step} (t = {t}): |x[{index}]| = {value}")]
    Diverged { step: usize, t: f64, index: usize, value: f64 },
    #[error("non-finite derivative at step {step}, component {index}")]
    NonFinite { step: usize, index: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Iter(#[from] IterError),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error("all {runs} runs failed: {}", diagnostics.join("; "))]
    AllFailed { runs: usize, diagnostics: Vec<String> },
}

impl EngineError {
    pub fn is_divergence(&self) -> bool {
        match self {
            EngineError::Diverged { .. } | EngineError::NonFinite { .. } => true,
            EngineError::Iter(IterError::Diverged { .. }) => true,
            EngineError::AllFailed { diagnostics, .. } => diagnostics.iter().all(|d| d.contains("diverged") || d.contains("non-finite")),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub divergence_bound: f64,
    /// Stop once `|ΔL| < 1e-12` holds for this many consecutive samples.
    pub plateau_samples: Option<usize>,
}

/// `|ΔL|` below which consecutive samples count toward a plateau.
pub const PLATEAU_TOL: f64 = 1e-12;

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 0.01,
            steps: 10_000,
            record_every: 100,
            divergence_bound: crate::lagrangian::DIVERGENCE_BOUND,
            plateau_samples: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(EngineError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(EngineError::Config("record_every must be >= 1".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(EngineError::Config("divergence_bound must be > 0".into()));
        }
        if self.plateau_samples == Some(0) {
            return Err(EngineError::Config("plateau_samples must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    LinearRamp,
    Adaptive,
}

/// Pump rule `t ↦ γ`. For `adaptive`, `a` is the initial multiplier and the
/// multipliers evolve under `dγ_i/dt = κ' r_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainSchedule {
    pub kind: ScheduleKind,
    pub a: f64,
    pub b: f64,
    pub gamma_max: f64,
    pub kappa_p: f64,
}

impl Default for GainSchedule {
    fn default() -> Self {
        Self { kind: ScheduleKind::LinearRamp, a: 0.0, b: 0.02, gamma_max: 2.0, kappa_p: 0.01 }
    }
}

impl GainSchedule {
    pub fn constant(a: f64) -> Self {
        Self { kind: ScheduleKind::Constant, a, b: 0.0, gamma_max: a, ..Self::default() }
    }

    pub fn linear_ramp(a: f64, b: f64, gamma_max: f64) -> Self {
        Self { kind: ScheduleKind::LinearRamp, a, b, gamma_max, ..Self::default() }
    }

    pub fn adaptive(initial: f64, kappa_p: f64) -> Self {
        Self { kind: ScheduleKind::Adaptive, a: initial, b: 0.0, gamma_max: f64::INFINITY, kappa_p }
    }

    pub fn is_adaptive(&self) -> bool {
        self.kind == ScheduleKind::Adaptive
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        match self.kind {
            ScheduleKind::LinearRamp if !(self.gamma_max >= self.a) => {
                Err(EngineError::Config(format!("gamma_max ({}) must be >= a ({})", self.gamma_max, self.a)))
            }
            ScheduleKind::Adaptive if !(self.kappa_p > 0.0) => {
                Err(EngineError::Config(format!("kappa_p must be > 0, got {}", self.kappa_p)))
            }
            _ if !self.a.is_finite() => Err(EngineError::Config("schedule intercept must be finite".into())),
            _ => Ok(()),
        }
    }
}

/// Gain at time `t`. For an adaptive schedule this is the initial multiplier;
/// the integrator evolves the multipliers itself.
pub fn schedule_value(s: &GainSchedule, t: f64) -> f64 {
    match s.kind {
        ScheduleKind::Constant | ScheduleKind::Adaptive => s.a,
        ScheduleKind::LinearRamp => (s.a + s.b * t).min(s.gamma_max),
    }
}

/// An ODE `dx/dt = F(x; γ)` with a scalar or per-variable gain `γ`.
pub trait OdeSystem: Sync {
    /// Number of state components, excluding adaptive multipliers.
    fn dim(&self) -> usize;
    /// Number of multipliers `γ_i`.
    fn gains(&self) -> usize;
    fn derivative(&self, gamma: &[f64], x: &[f64], out: &mut [f64]);
    /// Value of the paired Lagrange (or dissipation) function; `NaN` if none.
    fn lagrangian(&self, _gamma: &[f64], _x: &[f64]) -> f64 {
        f64::NAN
    }
    /// Constraint residuals `r_i(x)` driving adaptive multipliers.
    fn residual(&self, _x: &[f64], _out: &mut [f64]) -> Result<(), EngineError> {
        Err(EngineError::Config("this system has no multiplier feedback".into()))
    }
    /// Rounded spins and their energy.
    fn readout(&self, x: &[f64]) -> (SpinConfig, f64) {
        (round_to_spins(&x[..self.gains().min(x.len())]), f64::NAN)
    }
    fn name(&self) -> String {
        "ode".into()
    }
}

/// Wraps a closure `F(γ, x, out)` as an [`OdeSystem`] with one gain per component.
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &[f64], &mut [f64]) + Sync> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &[f64], &mut [f64]) + Sync> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn gains(&self) -> usize {
        self.dim
    }
    fn derivative(&self, gamma: &[f64], x: &[f64], out: &mut [f64]) {
        (self.f)(gamma, x, out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Full state; adaptive multipliers follow the `dim()` state components.
    pub state: Vec<f64>,
    pub lagrangian: f64,
    pub energy: f64,
}

impl Sample {
    pub fn max_amp(&self) -> f64 {
        self.state.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub solver: String,
    pub seed: u64,
    pub steps: usize,
    pub samples: Vec<Sample>,
    pub final_spins: SpinConfig,
    pub final_energy: f64,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("at least one sample").state
    }

    /// Trajectory as CSV with columns `t, L, energy, max_amp`.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("t,L,energy,max_amp\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", s.t, s.lagrangian, s.energy, s.max_amp()));
        }
        out
    }
}

struct Rk4Buffers {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

/// Integrates `sys` from `state0` under `schedule`.
///
/// `state0` holds `dim()` components, or `dim() + gains()` when the schedule is
/// adaptive and the initial multipliers are supplied. Non-adaptive gains are
/// evaluated once at the start of every step.
pub fn integrate(
    sys: &dyn OdeSystem,
    state0: &[f64],
    schedule: &GainSchedule,
    cfg: &IntegratorConfig,
) -> Result<RunRecord, EngineError> {
    integrate_seeded(sys, state0, schedule, cfg, 0)
}

pub(crate) fn integrate_seeded(
    sys: &dyn OdeSystem,
    state0: &[f64],
    schedule: &GainSchedule,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<RunRecord, EngineError> {
    cfg.validate()?;
    schedule.validate()?;
    let start = Instant::now();
    let d = sys.dim();
    let g = sys.gains();
    let adaptive = schedule.is_adaptive();
    let mut y = state0.to_vec();
    if adaptive && y.len() == d {
        y.extend(std::iter::repeat_n(schedule.a, g));
    }
    let total = if adaptive { d + g } else { d };
    if y.len() != total {
        return Err(EngineError::Config(format!("state has {} components, system expects {total}", y.len())));
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(EngineError::NonFinite { step: 0, index });
    }
    let mut residual = vec![0.0; if adaptive { g } else { 0 }];
    if adaptive {
        sys.residual(&y[..d], &mut residual)?;
    }

    let mut gamma = vec![schedule_value(schedule, 0.0); g];
    let deriv = |gamma: &[f64], y: &[f64], out: &mut [f64], residual: &mut [f64]| {
        if adaptive {
            let (x, gam) = y.split_at(d);
            let (dx, dg) = out.split_at_mut(d);
            sys.derivative(gam, x, dx);
            // residual() was validated above, so it cannot fail here
            let _ = sys.residual(x, residual);
            for (o, r) in dg.iter_mut().zip(residual.iter()) {
                *o = schedule.kappa_p * r;
            }
        } else {
            sys.derivative(gamma, y, out);
        }
    };
    let sample = |t: f64, y: &[f64], gamma: &[f64]| {
        let (x, gam) = if adaptive { y.split_at(d) } else { (y, gamma) };
        let (_, energy) = sys.readout(x);
        Sample { t, state: y.to_vec(), lagrangian: sys.lagrangian(gam, x), energy }
    };

    let mut samples = vec![sample(0.0, &y, &gamma)];
    let mut buf = Rk4Buffers {
        k1: vec![0.0; total],
        k2: vec![0.0; total],
        k3: vec![0.0; total],
        k4: vec![0.0; total],
        tmp: vec![0.0; total],
    };
    let dt = cfg.dt;
    let mut plateau_run = 0usize;
    let mut steps_taken = 0usize;

    for step in 0..cfg.steps {
        let t = step as f64 * dt;
        if !adaptive {
            gamma.fill(schedule_value(schedule, t));
        }
        match cfg.method {
            Method::Euler => {
                deriv(&gamma, &y, &mut buf.k1, &mut residual);
                check_finite(&buf.k1, step)?;
                for (yi, ki) in y.iter_mut().zip(&buf.k1) {
                    *yi += dt * ki;
                }
            }
            Method::Rk4 => {
                deriv(&gamma, &y, &mut buf.k1, &mut residual);
                axpy(&y, 0.5 * dt, &buf.k1, &mut buf.tmp);
                deriv(&gamma, &buf.tmp, &mut buf.k2, &mut residual);
                axpy(&y, 0.5 * dt, &buf.k2, &mut buf.tmp);
                deriv(&gamma, &buf.tmp, &mut buf.k3, &mut residual);
                axpy(&y, dt, &buf.k3, &mut buf.tmp);
                deriv(&gamma, &buf.tmp, &mut buf.k4, &mut residual);
                for k in [&buf.k1, &buf.k2, &buf.k3, &buf.k4] {
                    check_finite(k, step)?;
                }
                for i in 0..total {
                    y[i] += dt / 6.0 * (buf.k1[i] + 2.0 * buf.k2[i] + 2.0 * buf.k3[i] + buf.k4[i]);
                }
            }
        }
        steps_taken = step + 1;
        let t_next = steps_taken as f64 * dt;
        if let Some((index, value)) = y.iter().enumerate().find(|(_, v)| !v.is_finite() || v.abs() > cfg.divergence_bound) {
            if !value.is_finite() {
                return Err(EngineError::NonFinite { step, index });
            }
            return Err(EngineError::Diverged { step, t: t_next, index, value: *value });
        }
        if steps_taken.is_multiple_of(cfg.record_every) {
            let s = sample(t_next, &y, &gamma);
            if let Some(limit) = cfg.plateau_samples {
                let prev = samples.last().expect("initial sample").lagrangian;
                plateau_run = if (s.lagrangian - prev).abs() < PLATEAU_TOL { plateau_run + 1 } else { 0 };
                samples.push(s);
                if plateau_run >= limit {
                    break;
                }
            } else {
                samples.push(s);
            }
        }
    }
    if !steps_taken.is_multiple_of(cfg.record_every) {
        let t_end = steps_taken as f64 * dt;
        if !adaptive {
            gamma.fill(schedule_value(schedule, t_end));
        }
        samples.push(sample(t_end, &y, &gamma));
    }
    let (final_spins, final_energy) = sys.readout(&y[..d]);
    Ok(RunRecord {
        schema_version: crate::SCHEMA_VERSION,
        solver: sys.name(),
        seed,
        steps: steps_taken,
        samples,
        final_spins,
        final_energy,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn axpy(y: &[f64], h: f64, k: &[f64], out: &mut [f64]) {
    for i in 0..y.len() {
        out[i] = y[i] + h * k[i];
    }
}

fn check_finite(k: &[f64], step: usize) -> Result<(), EngineError> {
    match k.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(EngineError::NonFinite { step, index }),
        None => Ok(()),
    }
}
