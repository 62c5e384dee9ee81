//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use lagrange_ising::dynamics::{OscParams, DEFAULT_BETA_SAT};
use lagrange_ising::engine::{integrate, run_solver, GainSchedule, IntegratorConfig, Method, SolverKind, SolverSystem};
use lagrange_ising::ising::{brute_force_ground, cut_value, energy, parse_gset, random_instance, SpinConfig};
use lagrange_ising::iterators::{build_linear_matrix, build_soljacic_matrix, matmul_iterate, soljacic_iterate, BinaryState};
use lagrange_ising::lagrangian::{FnObjective, LagrangeProblem, MultiplierState, DEFAULT_KAPPA, DEFAULT_KAPPA_P};
use lagrange_ising::linalg::Matrix;
use lagrange_ising::regression::{build_regression_instance, decode_weights, encode_weights, RegressionProblem};
use lagrange_ising::IsingInstance;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gradient_consistency() -> Outcome {
    let mut worst = 0.0_f64;
    let mut worst_at = String::new();
    for model in common::GRADIENT_MODELS {
        for k in 0..20 {
            let inst = common::pm1_instance(8, 100 + k);
            let mut rng = common::rng(7_000 + k);
            let params = common::random_params(&mut rng, 8);
            for _ in 0..100 {
                let e = common::gradient_error(model, &inst, &params, &mut rng);
                if e > worst || e.is_nan() {
                    worst = e;
                    worst_at = format!("{model}, instance {k}");
                }
            }
        }
    }
    outcome(worst <= 1e-5, format!("5 models x 20 instances x 100 states, max relative error {worst:.2e} ({worst_at})"))
}

fn multiplier_feasibility() -> Outcome {
    let cfg = IntegratorConfig { method: Method::Rk4, dt: 1e-3, steps: 100_000, record_every: 100_000, ..Default::default() };
    let schedule = GainSchedule::adaptive(0.0, 0.01);
    let mut ok = 0;
    let mut failures = String::new();
    for k in 0..20 {
        let inst = common::pm1_instance(8, 200 + k);
        let params = OscParams { beta_pol: 0.1, ..OscParams::uniform(8) };
        let sys = SolverSystem::new(SolverKind::Polariton, &inst, &inst, &params);
        match integrate(&sys, &sys.initial_state(k), &schedule, &cfg) {
            Ok(rec) => {
                let s = rec.final_state();
                let viol = (0..8).map(|i| (1.0 - (s[i] * s[i] + s[8 + i] * s[8 + i])).abs()).fold(0.0, f64::max);
                if viol <= 1e-2 {
                    ok += 1;
                } else {
                    let _ = write!(failures, " [instance {k}: violation {viol:.3e}]");
                }
            }
            Err(e) => {
                let _ = write!(failures, " [instance {k}: {e}]");
            }
        }
    }
    outcome(ok >= 18, format!("{ok}/20 instances feasible within 1e-2 (need 18){failures}"))
}

fn ground_state_recovery() -> Outcome {
    // γ reaches 2 > α = 1 at t = 100
    let cfg = IntegratorConfig { method: Method::Rk4, dt: 0.01, steps: 10_000, record_every: 10_000, ..Default::default() };
    let schedule = GainSchedule::linear_ramp(0.0, 0.02, 2.0);
    let params = OscParams { beta_sat: DEFAULT_BETA_SAT, ..OscParams::uniform(10) };
    let mut ok = 0;
    for k in 0..50 {
        let inst = random_instance(10, 2.0 / 3.0, &[1.0, -1.0], 300 + k).unwrap();
        let (_, ground) = brute_force_ground(&inst).unwrap();
        if let Ok(out) = run_solver(&inst, SolverKind::Opo, &params, &cfg, &schedule, 32, 1_000 * k) {
            if out.best.final_energy == ground {
                ok += 1;
            }
        }
    }
    outcome(ok >= 40, format!("{ok}/50 instances at brute-force ground energy (need 40)"))
}

fn below_threshold_decay() -> Outcome {
    let n = 4;
    let inst = IsingInstance::from_dense("zero", n, vec![0.0; n * n], None, 0.0).unwrap();
    let params = OscParams::uniform(n);
    let sys = SolverSystem::new(SolverKind::Opo, &inst, &inst, &params);
    let cfg = IntegratorConfig { method: Method::Rk4, dt: 0.01, steps: 100_000, record_every: 100_000, ..Default::default() };
    let rec = integrate(&sys, &[1.0, -0.5, 0.3, 0.9], &GainSchedule::constant(0.0), &cfg).unwrap();
    let amp = rec.final_state().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    outcome(amp <= 1e-6, format!("final max amplitude {amp:.3e} after 1e5 RK4 steps"))
}

fn kerr_conservation() -> Outcome {
    let n = 8;
    let inst = common::pm1_instance(n, 500);
    let params = OscParams { p_pump: 0.0, xi0: 0.0, ..OscParams::uniform(n) };
    let sys = SolverSystem::new(SolverKind::Kerr, &inst, &inst, &params);
    let mut rng = common::rng(501);
    let x0: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cfg = IntegratorConfig { method: Method::Rk4, dt: 1e-3, steps: 10_000, record_every: 1, ..Default::default() };
    let rec = integrate(&sys, &x0, &GainSchedule::constant(0.0), &cfg).unwrap();
    let norm = |s: &[f64], i: usize| (s[i] * s[i] + s[n + i] * s[n + i]).sqrt();
    let mut drift = 0.0_f64;
    for sample in &rec.samples {
        for i in 0..n {
            drift = drift.max((norm(&sample.state, i) - norm(&x0, i)).abs());
        }
    }
    outcome(drift <= 1e-6, format!("max | |E_i(t)| - |E_i(0)| | = {drift:.3e} over 1e4 steps"))
}

fn leleu_reduction() -> Outcome {
    let n = 8;
    let inst = common::pm1_instance(n, 600);
    let lmax = -inst.negated_couplings().min_eigenvalue();
    // neutral dominant mode keeps amplitudes bounded over the run
    let gamma = 1.0 - lmax;
    let params = OscParams { beta_leleu: 0.0, ..OscParams::uniform(n).with_gamma(gamma) };
    let leleu = SolverSystem::new(SolverKind::Leleu, &inst, &inst, &params);
    let fiber = SolverSystem::new(SolverKind::Fiber, &inst, &inst, &params);
    let x0 = fiber.initial_state(601);
    let mut l0 = x0.clone();
    l0.extend(std::iter::repeat_n(1.0, n));
    let cfg = IntegratorConfig { method: Method::Rk4, dt: 0.01, steps: 10_000, record_every: 1, ..Default::default() };
    let sched = GainSchedule::constant(gamma);
    let a = integrate(&leleu, &l0, &sched, &cfg).unwrap();
    let b = integrate(&fiber, &x0, &sched, &cfg).unwrap();
    let mut diff = 0.0_f64;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        for i in 0..n {
            diff = diff.max((sa.state[i] - sb.state[i]).abs());
        }
    }
    let same_len = a.samples.len() == b.samples.len() && a.samples.len() == 10_001;
    outcome(same_len && diff <= 1e-12, format!("max per-step component difference {diff:.3e} over 1e4 steps"))
}

fn augmented_toy() -> Outcome {
    let prob = LagrangeProblem::new(
        FnObjective::new(1, |x| x[0] * x[0], |x| vec![2.0 * x[0]]).with_constraint(|x| x[0] - 1.0, |_| vec![1.0]),
        1.0,
    );
    match prob.solve_descent_ascent(MultiplierState::new(vec![0.0], vec![0.0]), DEFAULT_KAPPA, DEFAULT_KAPPA_P, 1e-12, 100_000) {
        Ok((st, steps)) => {
            let (ex, el) = ((st.x[0] - 1.0).abs(), (st.lambda[0] + 2.0).abs());
            outcome(ex <= 1e-6 && el <= 1e-6, format!("(x, lambda) = ({:.9}, {:.9}) after {steps} steps", st.x[0], st.lambda[0]))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn regression_fidelity() -> Outcome {
    let mut energy_mismatch = 0;
    let mut optimal = 0;
    for k in 0..20 {
        let mut rng = common::rng(800 + k);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(-3..=3) as f64).collect()).collect();
        let prob = RegressionProblem::from_rows(&rows, 2).unwrap();
        let (inst, enc) = build_regression_instance(&prob).unwrap();
        let lattice = prob.lattice();
        let mut best = f64::INFINITY;
        for &a in &lattice {
            for &b in &lattice {
                let r = prob.residual(&[a, b]);
                best = best.min(r);
                let s = encode_weights(&prob, &enc, &[a, b]).unwrap();
                if energy(&inst, &s).unwrap().energy != r {
                    energy_mismatch += 1;
                }
            }
        }
        let (s, _) = brute_force_ground(&inst).unwrap();
        let w = decode_weights(&enc, &s).unwrap();
        if prob.residual(&w) == best {
            optimal += 1;
        }
    }
    outcome(
        energy_mismatch == 0 && optimal == 20,
        format!("{energy_mismatch} energy mismatches over 20 x 16 weights; {optimal}/20 ground states lattice-optimal"),
    )
}

fn gset_text(n: usize, m: usize, seed: u64) -> (String, Vec<(usize, usize, f64)>) {
    let mut rng = common::rng(seed);
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push((u, v, if rng.random::<bool>() { 1.0 } else { -1.0 }));
        }
    }
    let mut text = format!("{n} {m}\n");
    for &(u, v, w) in &edges {
        let _ = writeln!(text, "{} {} {}", u + 1, v + 1, w);
    }
    (text, edges)
}

fn gset_plumbing() -> Outcome {
    let (text, edges) = gset_text(800, 19_176, 900);
    let t = Instant::now();
    let inst = match parse_gset(&text) {
        Ok(i) => i,
        Err(e) => return outcome(false, e.to_string()),
    };
    let parse = t.elapsed();
    let w_total: f64 = edges.iter().map(|e| e.2).sum();
    let mut rng = common::rng(901);
    let mut bad = 0;
    for _ in 0..100 {
        let s = SpinConfig::random(800, &mut rng);
        let v = s.as_slice();
        let edge_sum: f64 = edges.iter().map(|&(a, b, w)| w * (v[a] * v[b]) as f64).sum();
        let direct: f64 = edges.iter().filter(|&&(a, b, _)| v[a] != v[b]).map(|e| e.2).sum();
        let report = energy(&inst, &s).unwrap();
        let cut = cut_value(&inst, &s).unwrap();
        if cut != (w_total - edge_sum) / 2.0 || cut != direct || report.edge_sum != edge_sum {
            bad += 1;
        }
    }
    let ok = inst.n() == 800 && inst.edges().len() == 19_176 && parse < Duration::from_secs(1) && bad == 0;
    outcome(ok, format!("parsed n={} with {} edges in {parse:.2?}; {bad}/100 cut identity failures", inst.n(), inst.edges().len()))
}

fn discrete_iterators() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let inst = common::pm1_instance(8, 1_000);
    let k = build_soljacic_matrix(&inst, lagrange_ising::iterators::default_shift(&inst), None).unwrap();
    let start = BinaryState::new(vec![1, 0, 0, 1, 1, 0, 1, 0]).unwrap();
    let a = soljacic_iterate(&k, &start, 0.0, 1, 1_000).unwrap();
    let b = soljacic_iterate(&k, &start, 0.0, 99, 1_000).unwrap();
    if a != b {
        pass = false;
        notes.push("zero-noise iteration not reproducible".to_string());
    }

    let mut worst_cos = 1.0_f64;
    let mut worst_sq = 0.0_f64;
    for s in 0..20 {
        let inst = common::pm1_instance(8, 1_100 + s);
        let m = build_linear_matrix(&inst, &[0.5; 8], 0.05).unwrap();
        let e0: Vec<f64> = {
            let mut rng = common::rng(s);
            (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let e = matmul_iterate(&m, &e0, 1_000, true).unwrap();
        let dm = nalgebra::DMatrix::from_row_slice(8, 8, m.a.as_slice());
        let eig = dm.symmetric_eigen();
        let top = (0..8).max_by(|&i, &j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs())).unwrap();
        let v = eig.eigenvectors.column(top);
        let dotp: f64 = (0..8).map(|i| v[i] * e[i]).sum();
        let norm: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst_cos = worst_cos.min(dotp.abs() / norm);

        let alpha = lagrange_ising::iterators::default_shift(&inst);
        let k = build_soljacic_matrix(&inst, alpha, None).unwrap();
        let mut target = Matrix::from_row_major(8, 8, inst.couplings().to_vec());
        for i in 0..8 {
            target[(i, i)] += alpha;
        }
        worst_sq = worst_sq.max(k.a.matmul(&k.a).max_abs_diff(&target));
    }
    if worst_cos < 1.0 - 1e-6 {
        pass = false;
    }
    if worst_sq > 1e-8 {
        pass = false;
    }
    notes.push(format!("min dominant-eigenvector cosine {worst_cos:.12}"));
    notes.push(format!("max |K K - (J + alpha I)| {worst_sq:.2e}"));
    outcome(pass, notes.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient consistency", gradient_consistency, Duration::from_secs(10)),
        ("multiplier-ascent feasibility", multiplier_feasibility, Duration::from_secs(60)),
        ("ground-state recovery", ground_state_recovery, Duration::from_secs(60)),
        ("below-threshold decay", below_threshold_decay, Duration::from_secs(5)),
        ("Kerr conservation", kerr_conservation, Duration::from_secs(5)),
        ("Leleu reduction", leleu_reduction, Duration::from_secs(5)),
        ("augmented Lagrangian toy", augmented_toy, Duration::from_secs(1)),
        ("regression fidelity", regression_fidelity, Duration::from_secs(10)),
        ("Gset plumbing", gset_plumbing, Duration::from_secs(10)),
        ("discrete iterators", discrete_iterators, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let elapsed = t.elapsed();
        let in_time = elapsed <= *budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time { String::new() } else { format!(" (over the {budget:?} budget)") };
        println!(
            "criterion {:>2} {:<30} {}  {} [{elapsed:.2?}]{timing}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
