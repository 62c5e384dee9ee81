//! Shared solver flags, the JSON config file, and their merge.
//!
//! Precedence is flag > config file > built-in default.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use lagrange_ising::dynamics::DEFAULT_BETA_SAT;
use lagrange_ising::engine::ScheduleKind;
use lagrange_ising::{GainSchedule, IntegratorConfig, Method, OscParams, SolverKind};
use serde::Deserialize;
use serde_json::Value;

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Constant,
    LinearRamp,
    Adaptive,
}

/// Physical parameters, gain schedule, and integrator flags.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    /// JSON config file; explicit flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Uniform loss α.
    #[arg(long, help_heading = "Model")]
    pub alpha: Option<f64>,
    /// Uniform gain γ (phase model: injection-locking strength).
    #[arg(long, help_heading = "Model")]
    pub gamma: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub coupling_scale: Option<f64>,
    /// Cubic saturation of the opo model [default: 0.2].
    #[arg(long, help_heading = "Model")]
    pub beta_sat: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub beta_pol: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub u_rot: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub k_kerr: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub p_pump: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub xi0: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub beta_leleu: Option<f64>,
    /// Augmentation strength of the lagrange solver.
    #[arg(long, help_heading = "Model")]
    pub penalty_c: Option<f64>,
    /// Per-step noise of the soljacic iterator.
    #[arg(long, help_heading = "Model")]
    pub noise_sigma: Option<f64>,
    #[arg(long, help_heading = "Model")]
    pub noise_decay: bool,

    /// Gain schedule kind [default: per solver].
    #[arg(long, value_enum, help_heading = "Schedule")]
    pub schedule: Option<ScheduleArg>,
    /// Initial gain (ramp intercept, constant value, or initial multiplier).
    #[arg(long, help_heading = "Schedule")]
    pub gain_a: Option<f64>,
    /// Ramp slope.
    #[arg(long, help_heading = "Schedule")]
    pub gain_b: Option<f64>,
    /// Ramp ceiling.
    #[arg(long, help_heading = "Schedule")]
    pub gamma_max: Option<f64>,
    /// Multiplier ascent rate of the adaptive schedule.
    #[arg(long, help_heading = "Schedule")]
    pub kappa_p: Option<f64>,

    #[arg(long, value_enum, help_heading = "Integrator")]
    pub method: Option<MethodArg>,
    #[arg(long, help_heading = "Integrator")]
    pub dt: Option<f64>,
    #[arg(long, help_heading = "Integrator")]
    pub steps: Option<usize>,
    /// Trajectory sampling stride.
    #[arg(long, help_heading = "Integrator")]
    pub record_every: Option<usize>,
    #[arg(long, help_heading = "Integrator")]
    pub divergence_bound: Option<f64>,
}

/// Schedule fields as they may appear in a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleOverride {
    pub kind: Option<ScheduleKind>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub gamma_max: Option<f64>,
    pub kappa_p: Option<f64>,
}

/// Config file layout. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub instance: Option<String>,
    pub instances: Vec<String>,
    pub solver: Option<String>,
    pub solvers: Vec<String>,
    pub seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub restarts: Option<usize>,
    pub bits: Option<usize>,
    pub msb_power: Option<i32>,
    /// Partial [`OscParams`]; missing fields keep CLI defaults.
    pub params: Option<Value>,
    pub schedule: Option<ScheduleOverride>,
    /// Partial [`IntegratorConfig`].
    pub integrator: Option<Value>,
}

pub fn load_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
}

pub fn parse_solver(tag: &str) -> Result<SolverKind, UsageError> {
    tag.parse::<SolverKind>().map_err(UsageError)
}

fn overlay(base: Value, patch: Option<&Value>, what: &str) -> Result<Value, UsageError> {
    let mut base = base;
    match patch {
        None => {}
        Some(Value::Object(fields)) => {
            let obj = base.as_object_mut().expect("struct serializes to an object");
            for (k, v) in fields {
                if !obj.contains_key(k) {
                    return Err(UsageError(format!("unknown {what} field `{k}`")));
                }
                obj.insert(k.clone(), v.clone());
            }
        }
        Some(_) => return Err(UsageError(format!("config `{what}` must be an object"))),
    }
    Ok(base)
}

/// CLI defaults: library defaults with the opo saturation switched on.
pub fn default_params() -> OscParams {
    OscParams { alpha: vec![1.0], gamma: vec![0.0], beta_sat: DEFAULT_BETA_SAT, ..OscParams::default() }
}

impl SolverFlags {
    pub fn params(&self, file: &FileConfig) -> Result<OscParams, UsageError> {
        let base = serde_json::to_value(default_params()).expect("params serialize");
        let merged = overlay(base, file.params.as_ref(), "params")?;
        let mut p: OscParams =
            serde_json::from_value(merged).map_err(|e| UsageError(format!("invalid params: {e}")))?;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        if let Some(a) = self.alpha {
            p.alpha = vec![a];
        }
        if let Some(g) = self.gamma {
            p.gamma = vec![g];
        }
        set(&mut p.coupling_scale, self.coupling_scale);
        set(&mut p.beta_sat, self.beta_sat);
        set(&mut p.beta_pol, self.beta_pol);
        set(&mut p.u_rot, self.u_rot);
        set(&mut p.k_kerr, self.k_kerr);
        set(&mut p.p_pump, self.p_pump);
        set(&mut p.xi0, self.xi0);
        set(&mut p.beta_leleu, self.beta_leleu);
        set(&mut p.penalty_c, self.penalty_c);
        set(&mut p.noise_sigma, self.noise_sigma);
        set(&mut p.kappa_p, self.kappa_p);
        p.noise_decay |= self.noise_decay;
        Ok(p)
    }

    pub fn schedule(&self, solver: SolverKind, file: &FileConfig) -> GainSchedule {
        let from_file = file.schedule.clone().unwrap_or_default();
        let kind = self.schedule.map(|k| match k {
            ScheduleArg::Constant => ScheduleKind::Constant,
            ScheduleArg::LinearRamp => ScheduleKind::LinearRamp,
            ScheduleArg::Adaptive => ScheduleKind::Adaptive,
        });
        let mut s = solver.default_schedule();
        if let Some(k) = kind.or(from_file.kind) {
            if k != s.kind {
                s = match k {
                    ScheduleKind::Constant => GainSchedule::constant(0.0),
                    ScheduleKind::LinearRamp => GainSchedule::default(),
                    ScheduleKind::Adaptive => GainSchedule::adaptive(0.0, GainSchedule::default().kappa_p),
                };
            }
        }
        let pick = |flag: Option<f64>, file: Option<f64>, slot: &mut f64| {
            if let Some(v) = flag.or(file) {
                *slot = v;
            }
        };
        pick(self.gain_a, from_file.a, &mut s.a);
        pick(self.gain_b, from_file.b, &mut s.b);
        pick(self.gamma_max, from_file.gamma_max, &mut s.gamma_max);
        pick(self.kappa_p, from_file.kappa_p, &mut s.kappa_p);
        if s.kind == ScheduleKind::Constant && self.gamma_max.or(from_file.gamma_max).is_none() {
            s.gamma_max = s.a;
        }
        s
    }

    pub fn integrator(&self, file: &FileConfig) -> Result<IntegratorConfig, UsageError> {
        let base = serde_json::to_value(IntegratorConfig::default()).expect("config serializes");
        let merged = overlay(base, file.integrator.as_ref(), "integrator")?;
        let mut c: IntegratorConfig =
            serde_json::from_value(merged).map_err(|e| UsageError(format!("invalid integrator config: {e}")))?;
        if let Some(m) = self.method {
            c.method = match m {
                MethodArg::Euler => Method::Euler,
                MethodArg::Rk4 => Method::Rk4,
            };
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.steps {
            c.steps = v;
        }
        if let Some(v) = self.record_every {
            c.record_every = v;
        }
        if let Some(v) = self.divergence_bound {
            c.divergence_bound = v;
        }
        c.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(c)
    }
}
