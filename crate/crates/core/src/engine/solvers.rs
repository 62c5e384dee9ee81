use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrate_seeded, schedule_value, EngineError, GainSchedule, IntegratorConfig, OdeSystem, RunRecord, Sample};
use crate::dynamics::{
    fiber_kernel, kerr_kernel, leleu_kernel, opo_kernel, phase_kernel, phase_lagrangian_slice, polariton_kernel,
    polariton_lagrangian_slice, quadratic_lagrangian, radio_kernel, OscParams,
};
use crate::ising::{self, absorb_field, round_phases_to_spins, round_to_spins, IsingInstance, SpinConfig};
use crate::iterators::{
    binary_to_spins, build_linear_matrix, build_soljacic_matrix, default_shift, soljacic_merit, soljacic_run, BinaryState,
    NoiseSchedule,
};

/// Half-width of the uniform initial amplitude noise.
pub const INITIAL_NOISE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Opo,
    Radio,
    Fiber,
    Phase,
    Polariton,
    Leleu,
    Kerr,
    Matmul,
    Soljacic,
    Lagrange,
}

impl SolverKind {
    pub const ALL: [SolverKind; 10] = [
        SolverKind::Opo,
        SolverKind::Radio,
        SolverKind::Fiber,
        SolverKind::Phase,
        SolverKind::Polariton,
        SolverKind::Leleu,
        SolverKind::Kerr,
        SolverKind::Matmul,
        SolverKind::Soljacic,
        SolverKind::Lagrange,
    ];

    pub const NAMES: [&'static str; 10] =
        ["opo", "radio", "fiber", "phase", "polariton", "leleu", "kerr", "matmul", "soljacic", "lagrange"];

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    /// Solvers whose coupling term enters with a `+` sign and therefore minimize
    /// `-Σ J s s` natively; the harness hands them `-J`.
    pub fn negates_couplings(self) -> bool {
        matches!(self, SolverKind::Radio | SolverKind::Fiber | SolverKind::Leleu | SolverKind::Phase | SolverKind::Soljacic)
    }

    pub fn supports_adaptive(self) -> bool {
        matches!(
            self,
            SolverKind::Opo | SolverKind::Radio | SolverKind::Fiber | SolverKind::Polariton | SolverKind::Lagrange
        )
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, SolverKind::Matmul | SolverKind::Soljacic)
    }

    /// Schedule used when the caller does not choose one. Models without
    /// amplitude saturation get multiplier feedback; Leleu's error variables
    /// regulate amplitude under a constant sub-threshold gain.
    pub fn default_schedule(self) -> GainSchedule {
        match self {
            SolverKind::Radio | SolverKind::Fiber | SolverKind::Polariton | SolverKind::Lagrange => {
                GainSchedule::adaptive(0.0, 0.1)
            }
            SolverKind::Leleu => GainSchedule::constant(0.0),
            SolverKind::Kerr => GainSchedule::linear_ramp(0.0, 0.05, 1.5),
            SolverKind::Matmul => GainSchedule::constant(0.0),
            _ => GainSchedule::default(),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(s))
            .map(|i| Self::ALL[i])
            .ok_or_else(|| format!("unknown solver '{s}'; valid solvers: {}", Self::NAMES.join(", ")))
    }
}

/// One continuous solver bound to an instance.
///
/// `dyn_inst` drives the dynamics; `energy_inst` scores rounded spins. When
/// `ancilla` is set, spin 0 of the dynamics is an absorbed-field ancilla that
/// readout gauge-fixes to `+1` and drops.
pub struct SolverSystem<'a> {
    pub kind: SolverKind,
    pub dyn_inst: &'a IsingInstance,
    pub energy_inst: &'a IsingInstance,
    pub params: &'a OscParams,
    pub ancilla: bool,
}

impl<'a> SolverSystem<'a> {
    pub fn new(kind: SolverKind, dyn_inst: &'a IsingInstance, energy_inst: &'a IsingInstance, params: &'a OscParams) -> Self {
        Self { kind, dyn_inst, energy_inst, params, ancilla: dyn_inst.n() == energy_inst.n() + 1 }
    }

    fn n(&self) -> usize {
        self.dyn_inst.n()
    }

    /// Spins of the dynamics instance, before gauge fixing.
    pub fn raw_spins(&self, x: &[f64]) -> SpinConfig {
        let n = self.n();
        match self.kind {
            SolverKind::Phase => round_phases_to_spins(&x[..n]),
            _ => round_to_spins(&x[..n]),
        }
    }

    pub fn score(&self, raw: SpinConfig) -> (SpinConfig, f64) {
        let s = if self.ancilla { gauge_fix(&raw) } else { raw };
        let e = ising::energy(self.energy_inst, &s).map(|r| r.energy).unwrap_or(f64::NAN);
        (s, e)
    }

    /// Initial state for restart seed `seed`; adaptive multipliers are not included.
    pub fn initial_state(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n();
        let mut noise = |m: usize| -> Vec<f64> { (0..m).map(|_| rng.random_range(-INITIAL_NOISE..=INITIAL_NOISE)).collect() };
        match self.kind {
            SolverKind::Phase => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
            }
            SolverKind::Polariton | SolverKind::Kerr => noise(2 * n),
            SolverKind::Leleu => {
                let mut x = noise(n);
                x.extend(std::iter::repeat_n(1.0, n));
                x
            }
            _ => noise(n),
        }
    }
}

/// Flips every spin when the ancilla (index 0) is `-1`, then drops the ancilla.
pub fn gauge_fix(s: &SpinConfig) -> SpinConfig {
    let v = s.as_slice();
    let sign = v[0];
    SpinConfig::new(v[1..].iter().map(|&x| x * sign).collect()).expect("±1 entries")
}

impl OdeSystem for SolverSystem<'_> {
    fn dim(&self) -> usize {
        match self.kind {
            SolverKind::Polariton | SolverKind::Kerr | SolverKind::Leleu => 2 * self.n(),
            _ => self.n(),
        }
    }

    fn gains(&self) -> usize {
        self.n()
    }

    fn derivative(&self, gamma: &[f64], x: &[f64], out: &mut [f64]) {
        let n = self.n();
        let p = self.params;
        let inst = self.dyn_inst;
        match self.kind {
            SolverKind::Opo => opo_kernel(inst, &p.alpha, gamma, p.beta_sat, x, out),
            SolverKind::Radio => radio_kernel(inst, p.coupling_scale, &p.alpha, gamma, x, out),
            SolverKind::Fiber => fiber_kernel(inst, &p.alpha, gamma, x, out),
            SolverKind::Phase => phase_kernel(inst, p.coupling_scale, gamma, x, out),
            SolverKind::Polariton => {
                let (re, im) = x.split_at(n);
                let (dre, dim) = out.split_at_mut(n);
                polariton_kernel(inst, gamma, p.beta_pol, p.u_rot, re, im, dre, dim);
            }
            SolverKind::Leleu => {
                let (xs, e) = x.split_at(n);
                let (dx, de) = out.split_at_mut(n);
                leleu_kernel(inst, &p.alpha, gamma, p.beta_leleu, xs, e, dx, de);
            }
            SolverKind::Kerr => {
                let (c, s) = x.split_at(n);
                let (dc, ds) = out.split_at_mut(n);
                kerr_kernel(inst, p.k_kerr, gamma[0], p.xi0, c, s, dc, ds);
            }
            SolverKind::Lagrange => {
                // -½∇ of L_c = ΣJxx + Σαx² - Σλ(x² - 1) + (c/2)Σ(x² - 1)²
                inst.couple_into(x, out);
                for i in 0..n {
                    let g = 1.0 - x[i] * x[i];
                    out[i] = -out[i] - p.alpha[i] * x[i] + (gamma[i] + p.penalty_c * g) * x[i];
                }
            }
            SolverKind::Matmul | SolverKind::Soljacic => unreachable!("discrete solvers are not integrated"),
        }
    }

    fn lagrangian(&self, gamma: &[f64], x: &[f64]) -> f64 {
        let n = self.n();
        let p = self.params;
        let inst = self.dyn_inst;
        match self.kind {
            SolverKind::Opo => {
                let quartic: f64 = x.iter().map(|c| c.powi(4)).sum();
                quadratic_lagrangian(inst, 1.0, &p.alpha, gamma, x) + 0.5 * p.beta_sat * quartic
            }
            SolverKind::Radio => quadratic_lagrangian(inst, -p.coupling_scale, &p.alpha, gamma, x),
            SolverKind::Fiber => quadratic_lagrangian(inst, -1.0, &p.alpha, gamma, x),
            SolverKind::Leleu => quadratic_lagrangian(inst, -1.0, &p.alpha, gamma, &x[..n]),
            SolverKind::Phase => phase_lagrangian_slice(inst, p.coupling_scale, gamma, x),
            SolverKind::Polariton => {
                let (re, im) = x.split_at(n);
                polariton_lagrangian_slice(inst, p.beta_pol, gamma, re, im)
            }
            SolverKind::Kerr => {
                // conserved Hamiltonian at fixed p
                let (c, s) = x.split_at(n);
                let jc = inst.couple(c);
                let js = inst.couple(s);
                (0..n)
                    .map(|i| {
                        let m2 = c[i] * c[i] + s[i] * s[i];
                        0.25 * p.k_kerr * m2 * m2
                            + 0.5 * gamma[0] * (s[i] * s[i] - c[i] * c[i])
                            + 0.5 * p.xi0 * (c[i] * jc[i] + s[i] * js[i])
                    })
                    .sum()
            }
            SolverKind::Lagrange => {
                let pen: f64 = x.iter().map(|v| (v * v - 1.0).powi(2)).sum();
                quadratic_lagrangian(inst, 1.0, &p.alpha, gamma, x) + 0.5 * p.penalty_c * pen
            }
            SolverKind::Matmul | SolverKind::Soljacic => f64::NAN,
        }
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<(), EngineError> {
        let n = self.n();
        match self.kind {
            SolverKind::Polariton => {
                let (re, im) = x.split_at(n);
                for i in 0..n {
                    out[i] = 1.0 - (re[i] * re[i] + im[i] * im[i]);
                }
                Ok(())
            }
            k if k.supports_adaptive() => {
                for i in 0..n {
                    out[i] = 1.0 - x[i] * x[i];
                }
                Ok(())
            }
            k => Err(EngineError::Config(format!("solver '{k}' does not support adaptive gain"))),
        }
    }

    fn readout(&self, x: &[f64]) -> (SpinConfig, f64) {
        self.score(self.raw_spins(x))
    }

    fn name(&self) -> String {
        self.kind.name().to_string()
    }
}

/// Per-restart outcome; `error` is set when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub final_energy: Option<f64>,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub best: RunRecord,
    pub summaries: Vec<RunSummary>,
}

/// Runs `restarts` independent trajectories with seeds `seed + k` and returns
/// the lowest-energy record (ties broken by smaller seed).
///
/// Instances with a field are solved through an ancilla spin; reported spins
/// and energies always refer to `inst` itself.
pub fn run_solver(
    inst: &IsingInstance,
    solver: SolverKind,
    params: &OscParams,
    cfg: &IntegratorConfig,
    schedule: &GainSchedule,
    restarts: usize,
    seed: u64,
) -> Result<SolveOutcome, EngineError> {
    if restarts == 0 {
        return Err(EngineError::Config("restarts must be >= 1".into()));
    }
    cfg.validate()?;
    schedule.validate()?;
    let ancilla = inst.has_field();
    let working = if ancilla { absorb_field(inst)? } else { inst.clone() };
    let dyn_inst = if solver.negates_couplings() { working.negated_couplings() } else { working };
    let params = fit_params(params, inst.n(), ancilla);
    params.validate(dyn_inst.n())?;

    let schedule = match solver {
        SolverKind::Lagrange if !schedule.is_adaptive() => GainSchedule::adaptive(schedule.a, params.kappa_p),
        _ => *schedule,
    };
    if schedule.is_adaptive() && !solver.supports_adaptive() {
        return Err(EngineError::Config(format!("solver '{solver}' does not support adaptive gain")));
    }

    let sys = SolverSystem { kind: solver, dyn_inst: &dyn_inst, energy_inst: inst, params: &params, ancilla };
    let runs: Vec<Result<RunRecord, EngineError>> = (0..restarts as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k);
            match solver {
                SolverKind::Matmul => run_matmul(&sys, cfg, &schedule, s),
                SolverKind::Soljacic => run_soljacic(&sys, cfg, s),
                _ => integrate_seeded(&sys, &sys.initial_state(s), &schedule, cfg, s),
            }
        })
        .collect();

    let mut summaries = Vec::with_capacity(restarts);
    let mut best: Option<RunRecord> = None;
    let mut diagnostics = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        let s = seed.wrapping_add(k as u64);
        match run {
            Ok(rec) => {
                summaries.push(RunSummary { seed: s, final_energy: Some(rec.final_energy), wall_time: rec.wall_time, error: None });
                let better = match &best {
                    None => true,
                    Some(b) => (rec.final_energy, rec.seed) < (b.final_energy, b.seed),
                };
                if better {
                    best = Some(rec);
                }
            }
            Err(e) => {
                diagnostics.push(format!("seed {s}: {e}"));
                summaries.push(RunSummary { seed: s, final_energy: None, wall_time: 0.0, error: Some(e.to_string()) });
            }
        }
    }
    match best {
        Some(best) => Ok(SolveOutcome { best, summaries }),
        None => Err(EngineError::AllFailed { runs: restarts, diagnostics }),
    }
}

/// Resizes `alpha`/`gamma` for an `n`-spin instance, prepending an entry for the
/// ancilla when present.
fn fit_params(params: &OscParams, n: usize, ancilla: bool) -> OscParams {
    let mut p = params.clone();
    if ancilla {
        for v in [&mut p.alpha, &mut p.gamma] {
            if v.len() == n {
                v.insert(0, v[0]);
            }
        }
    }
    p.resized(if ancilla { n + 1 } else { n })
}

fn run_matmul(
    sys: &SolverSystem<'_>,
    cfg: &IntegratorConfig,
    schedule: &GainSchedule,
    seed: u64,
) -> Result<RunRecord, EngineError> {
    let start = Instant::now();
    let n = sys.n();
    let gamma = vec![schedule_value(schedule, 0.0); n];
    let m = build_linear_matrix(sys.dyn_inst, &gamma, cfg.dt)?;
    let zeros = vec![0.0; n];
    let mut e = sys.initial_state(seed);
    let sample = |step: usize, e: &[f64]| {
        let (_, energy) = sys.readout(e);
        Sample { t: step as f64, state: e.to_vec(), lagrangian: quadratic_lagrangian(sys.dyn_inst, 1.0, &zeros, &gamma, e), energy }
    };
    let mut samples = vec![sample(0, &e)];
    for step in 1..=cfg.steps {
        e = crate::iterators::matmul_iterate(&m, &e, 1, true)?;
        if step % cfg.record_every == 0 || step == cfg.steps {
            samples.push(sample(step, &e));
        }
    }
    let (final_spins, final_energy) = sys.readout(&e);
    Ok(RunRecord {
        schema_version: crate::SCHEMA_VERSION,
        solver: sys.kind.name().into(),
        seed,
        steps: cfg.steps,
        samples,
        final_spins,
        final_energy,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Thresholded noisy iteration; reports the best configuration visited.
fn run_soljacic(sys: &SolverSystem<'_>, cfg: &IntegratorConfig, seed: u64) -> Result<RunRecord, EngineError> {
    let start = Instant::now();
    let n = sys.n();
    let k = build_soljacic_matrix(sys.dyn_inst, default_shift(sys.dyn_inst), None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = BinaryState::new((0..n).map(|_| u8::from(rng.random::<bool>())).collect())?;
    let as_f64 = |b: &BinaryState| b.as_slice().iter().map(|&v| v as f64).collect::<Vec<f64>>();
    let sample = |step: usize, b: &BinaryState| -> Result<Sample, EngineError> {
        let (_, energy) = sys.score(binary_to_spins(b));
        Ok(Sample { t: step as f64, state: as_f64(b), lagrangian: soljacic_merit(&k, b)?, energy })
    };

    let mut best = sys.score(binary_to_spins(&bits));
    let mut samples = vec![sample(0, &bits)?];
    let mut err = None;
    let noise = NoiseSchedule { sigma: sys.params.noise_sigma, decay: sys.params.noise_decay };
    soljacic_run(&k, &bits, noise, seed, cfg.steps, |step, b| {
        let scored = sys.score(binary_to_spins(b));
        if scored.1 < best.1 {
            best = scored;
        }
        let step = step + 1;
        if step % cfg.record_every == 0 || step == cfg.steps {
            match sample(step, b) {
                Ok(s) => samples.push(s),
                Err(e) => err = Some(e),
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(RunRecord {
        schema_version: crate::SCHEMA_VERSION,
        solver: sys.kind.name().into(),
        seed,
        steps: cfg.steps,
        samples,
        final_spins: best.0,
        final_energy: best.1,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Method;
    use crate::ising::{brute_force_ground, random_instance};

    fn quick_cfg() -> IntegratorConfig {
        IntegratorConfig { method: Method::Rk4, dt: 0.02, steps: 3000, record_every: 100, ..Default::default() }
    }

    #[test]
    fn solver_tags_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        let err = "nosuch".parse::<SolverKind>().unwrap_err();
        assert!(err.contains("opo") && err.contains("lagrange"));
    }

    #[test]
    fn every_solver_runs_and_reports_consistent_energy() {
        let inst = random_instance(8, 0.5, &[1.0, -1.0], 11).unwrap();
        let params = OscParams { beta_sat: crate::dynamics::DEFAULT_BETA_SAT, beta_pol: 0.1, ..OscParams::default() };
        for k in SolverKind::ALL {
            let out = run_solver(&inst, k, &params, &quick_cfg(), &k.default_schedule(), 2, 5)
                .unwrap_or_else(|e| panic!("{k}: {e}"));
            let e = ising::energy(&inst, &out.best.final_spins).unwrap().energy;
            assert_eq!(e, out.best.final_energy, "{k}");
            assert!(out.summaries.iter().all(|s| s.final_energy.unwrap() >= out.best.final_energy));
        }
    }

    #[test]
    fn restarts_are_deterministic() {
        let inst = random_instance(8, 0.5, &[1.0, -1.0], 3).unwrap();
        let params = OscParams { beta_sat: 0.2, ..OscParams::default() };
        let a = run_solver(&inst, SolverKind::Opo, &params, &quick_cfg(), &GainSchedule::default(), 3, 9).unwrap();
        let b = run_solver(&inst, SolverKind::Opo, &params, &quick_cfg(), &GainSchedule::default(), 3, 9).unwrap();
        assert_eq!(a.best.samples, b.best.samples);
        assert_eq!(a.best.final_spins, b.best.final_spins);
    }

    #[test]
    fn field_instances_go_through_ancilla() {
        let inst = IsingInstance::from_edges("f", 3, &[(0, 1, 1.0), (1, 2, -1.0)], Some(vec![0.5, -2.0, 0.3]), 1.0).unwrap();
        let (_, ground) = brute_force_ground(&inst).unwrap();
        let params = OscParams { beta_sat: 0.2, ..OscParams::default() };
        let out = run_solver(&inst, SolverKind::Opo, &params, &quick_cfg(), &GainSchedule::default(), 8, 1).unwrap();
        assert_eq!(out.best.final_spins.len(), 3);
        assert_eq!(out.best.final_energy, ground);
    }

    #[test]
    fn adaptive_rejected_for_unsupported_solver() {
        let inst = random_instance(4, 0.5, &[1.0], 0).unwrap();
        let r = run_solver(&inst, SolverKind::Phase, &OscParams::default(), &quick_cfg(), &GainSchedule::adaptive(0.0, 0.1), 1, 0);
        assert!(matches!(r, Err(EngineError::Config(_))));
    }

    #[test]
    fn all_diverged_is_aggregated() {
        let inst = random_instance(4, 1.0, &[1.0, -1.0], 0).unwrap();
        let cfg = IntegratorConfig { steps: 5000, ..quick_cfg() };
        let r = run_solver(&inst, SolverKind::Fiber, &OscParams::default(), &cfg, &GainSchedule::constant(5.0), 3, 0);
        match r {
            Err(e @ EngineError::AllFailed { runs: 3, .. }) => assert!(e.is_divergence()),
            other => panic!("expected aggregate failure, got {other:?}"),
        }
    }

    #[test]
    fn gauge_fix_drops_ancilla() {
        let s = SpinConfig::new(vec![-1, 1, -1]).unwrap();
        assert_eq!(gauge_fix(&s).as_slice(), &[-1, 1]);
    }
}
