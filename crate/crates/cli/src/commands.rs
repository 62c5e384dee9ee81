use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use lagrange_ising::engine::{run_solver, EngineError, RunRecord, RunSummary};
use lagrange_ising::ising::{brute_force_ground, energy, IsingError};
use lagrange_ising::regression::{build_regression_instance, decode_weights, least_squares_oracle, RegressionProblem};
use lagrange_ising::{IsingInstance, SolverKind, SpinConfig, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::Serialize;

use crate::input::{load_instance, load_regression_csv};
use crate::options::{load_config, parse_solver, FileConfig, SolverFlags};
use crate::{RuntimeError, UsageError};

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn engine_error(e: EngineError) -> anyhow::Error {
    match e {
        EngineError::Config(msg) => UsageError(msg).into(),
        other => RuntimeError(other.to_string()).into(),
    }
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, UsageError> {
    flag.or(file).ok_or_else(|| UsageError(format!("missing required --{name}")))
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Gset file, `.json` instance, or `random:N:DENSITY:SEED`.
    #[arg(long)]
    pub instance: Option<String>,
    /// One of opo, radio, fiber, phase, polariton, leleu, kerr, matmul, soljacic, lagrange.
    #[arg(long)]
    pub solver: Option<String>,
    /// Independent runs; the lowest energy is reported [default: 1].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Base seed; run k uses seed + k [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory CSV path (t, L, energy, max_amp of the best run).
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    instance: &'a str,
    n: usize,
    restarts: usize,
    final_cut: f64,
    #[serde(flatten)]
    record: &'a RunRecord,
    runs: &'a [RunSummary],
}

pub fn solve(args: SolveArgs) -> anyhow::Result<()> {
    let file = load_config(args.flags.config.as_deref())?;
    let solver = parse_solver(&required(args.solver, file.solver.clone(), "solver")?)?;
    let spec = required(args.instance, file.instance.clone(), "instance")?;
    let restarts = args.restarts.or(file.restarts).unwrap_or(1);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let params = args.flags.params(&file)?;
    let schedule = args.flags.schedule(solver, &file);
    let cfg = args.flags.integrator(&file)?;
    let inst = load_instance(&spec)?;

    let out = run_solver(&inst, solver, &params, &cfg, &schedule, restarts, seed).map_err(engine_error)?;
    for s in out.summaries.iter().filter(|s| s.error.is_some()) {
        eprintln!("warning: seed {} failed: {}", s.seed, s.error.as_deref().unwrap_or_default());
    }
    let report = energy(&inst, &out.best.final_spins)?;
    println!("instance {} n {} solver {solver}", inst.name(), inst.n());
    println!("final_energy {} cut {}", out.best.final_energy, report.cut);

    if let Some(path) = &args.out {
        let doc = SolveOutput {
            instance: inst.name(),
            n: inst.n(),
            restarts,
            final_cut: report.cut,
            record: &out.best,
            runs: &out.summaries,
        };
        write_json(path, &doc)?;
    }
    if let Some(path) = &args.trajectory {
        std::fs::write(path, out.best.trajectory_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BruteforceArgs {
    /// Gset file, `.json` instance, or `random:N:DENSITY:SEED` (n <= 24).
    #[arg(long)]
    pub instance: String,
    /// Result JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BruteforceOutput<'a> {
    schema_version: u32,
    instance: &'a str,
    n: usize,
    ground_energy: f64,
    cut: f64,
    spins: &'a SpinConfig,
}

pub fn bruteforce(args: BruteforceArgs) -> anyhow::Result<()> {
    let inst = load_instance(&args.instance)?;
    let (spins, e) = brute_force_ground(&inst).map_err(|err| match err {
        IsingError::TooLarge { n, max } => {
            RuntimeError(format!("size guard: {n} spins exceeds the brute-force limit of {max}")).into()
        }
        other => anyhow::Error::from(other),
    })?;
    let cut = energy(&inst, &spins)?.cut;
    let line: Vec<String> = spins.as_slice().iter().map(|s| s.to_string()).collect();
    println!("ground_energy {e} cut {cut}");
    println!("spins {}", line.join(" "));
    if let Some(path) = &args.out {
        let doc = BruteforceOutput {
            schema_version: SCHEMA_VERSION,
            instance: inst.name(),
            n: inst.n(),
            ground_energy: e,
            cut,
            spins: &spins,
        };
        write_json(path, &doc)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// CSV of feature columns followed by the target column; an optional header row is skipped.
    #[arg(long)]
    pub data: PathBuf,
    /// Bits per weight.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=52))]
    pub bits: Option<u32>,
    /// Power of two carried by the leading bit [default: bits - 1].
    #[arg(long, allow_hyphen_values = true)]
    pub msb_power: Option<i32>,
    /// Solver tag, or `exact` for exhaustive search [default: opo].
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Serialize)]
struct RegressOutput {
    schema_version: u32,
    solver: String,
    seed: u64,
    restarts: usize,
    bits: usize,
    msb_power: i32,
    d: usize,
    w: Vec<f64>,
    residual: f64,
    oracle_w: Vec<f64>,
    oracle_residual: f64,
    /// `residual - oracle_residual`.
    excess: f64,
}

/// Same ground states, couplings scaled to unit max magnitude.
fn normalized(inst: &IsingInstance) -> IsingInstance {
    let scale = inst.couplings().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || inst.has_field() {
        return inst.clone();
    }
    let j = inst.couplings().iter().map(|v| v / scale).collect();
    IsingInstance::from_dense(inst.name(), inst.n(), j, None, inst.offset() / scale).expect("scaled copy is valid")
}

pub fn regress(args: RegressArgs) -> anyhow::Result<()> {
    let file = load_config(args.flags.config.as_deref())?;
    let bits = match args.bits.map(|b| b as usize).or(file.bits) {
        Some(0) => return Err(UsageError("--bits must be >= 1".into()).into()),
        Some(b) => b,
        None => return Err(UsageError("missing required --bits".into()).into()),
    };
    let tag = args.solver.or(file.solver.clone()).unwrap_or_else(|| "opo".into());
    let restarts = args.restarts.or(file.restarts).unwrap_or(8);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let rows = load_regression_csv(&args.data)?;
    let prob = match args.msb_power.or(file.msb_power) {
        Some(m) => {
            let x: Vec<Vec<f64>> = rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect();
            let y = rows.iter().map(|r| r[r.len() - 1]).collect();
            RegressionProblem::with_msb(lagrange_ising::linalg::Matrix::from_rows(&x), y, bits, m)
        }
        None => RegressionProblem::from_rows(&rows, bits),
    }
    .map_err(|e| UsageError(e.to_string()))?;
    let (inst, enc) = build_regression_instance(&prob)?;

    let spins = if tag == "exact" {
        brute_force_ground(&inst).map_err(|e| RuntimeError(e.to_string()))?.0
    } else {
        let solver = parse_solver(&tag)?;
        let params = args.flags.params(&file)?;
        let schedule = args.flags.schedule(solver, &file);
        let cfg = args.flags.integrator(&file)?;
        let out = run_solver(&normalized(&inst), solver, &params, &cfg, &schedule, restarts, seed).map_err(engine_error)?;
        out.best.final_spins
    };
    let w = decode_weights(&enc, &spins)?;
    let residual = prob.residual(&w);
    let (oracle_w, oracle_residual) = least_squares_oracle(&prob);
    println!("w {w:?} residual {residual}");
    println!("oracle_w {oracle_w:?} oracle_residual {oracle_residual}");
    let doc = RegressOutput {
        schema_version: SCHEMA_VERSION,
        solver: tag,
        seed,
        restarts,
        bits,
        msb_power: prob.msb_power,
        d: prob.d(),
        w,
        residual,
        oracle_w,
        oracle_residual,
        excess: residual - oracle_residual,
    };
    if let Some(path) = &args.out {
        write_json(path, &doc)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated solver tags.
    #[arg(long, value_delimiter = ',')]
    pub solvers: Vec<String>,
    /// Comma-separated instances (paths or `random:N:DENSITY:SEED`).
    #[arg(long, value_delimiter = ',')]
    pub instances: Vec<String>,
    /// Comma-separated base seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Restarts per row [default: 1].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Output path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub flags: SolverFlags,
}

/// One CSV row. Aggregate rows have instance `mean` and no seed.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub schema_version: u32,
    pub instance: String,
    pub solver: String,
    pub seed: Option<u64>,
    pub restarts: usize,
    pub best_energy: Option<f64>,
    pub best_cut: Option<f64>,
    pub wall_time: f64,
    pub status: String,
}

#[derive(Serialize)]
struct BenchJson<'a> {
    schema_version: u32,
    rows: &'a [BenchRow],
    aggregates: &'a [BenchRow],
}

fn pick_list<T: Clone>(flag: &[T], file: &[T]) -> Vec<T> {
    if flag.is_empty() { file.to_vec() } else { flag.to_vec() }
}

fn aggregate(solver: &str, restarts: usize, rows: &[&BenchRow]) -> BenchRow {
    let ok: Vec<&&BenchRow> = rows.iter().filter(|r| r.best_energy.is_some()).collect();
    let mean = |f: fn(&BenchRow) -> Option<f64>| {
        (!ok.is_empty()).then(|| ok.iter().filter_map(|r| f(r)).sum::<f64>() / ok.len() as f64)
    };
    BenchRow {
        schema_version: SCHEMA_VERSION,
        instance: "mean".into(),
        solver: solver.into(),
        seed: None,
        restarts,
        best_energy: mean(|r| r.best_energy),
        best_cut: mean(|r| r.best_cut),
        wall_time: rows.iter().map(|r| r.wall_time).sum(),
        status: format!("ok {}/{}", ok.len(), rows.len()),
    }
}

pub fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let file: FileConfig = load_config(args.flags.config.as_deref())?;
    let mut tags = pick_list(&args.solvers, &file.solvers);
    if tags.is_empty() {
        tags.extend(file.solver.clone());
    }
    let mut specs = pick_list(&args.instances, &file.instances);
    if specs.is_empty() {
        specs.extend(file.instance.clone());
    }
    let mut seeds = pick_list(&args.seeds, &file.seeds);
    if seeds.is_empty() {
        seeds.extend(file.seed);
    }
    if tags.is_empty() || specs.is_empty() || seeds.is_empty() {
        return Err(UsageError("empty sweep: need at least one solver, instance, and seed".into()).into());
    }
    let solvers: Vec<SolverKind> = tags.iter().map(|t| parse_solver(t)).collect::<Result<_, _>>()?;
    let restarts = args.restarts.or(file.restarts).unwrap_or(1);
    let params = args.flags.params(&file)?;
    let cfg = args.flags.integrator(&file)?;
    let instances: Vec<IsingInstance> = specs.iter().map(|s| load_instance(s)).collect::<Result<_, _>>()?;

    let jobs: Vec<(SolverKind, usize, u64)> = solvers
        .iter()
        .flat_map(|&s| (0..instances.len()).flat_map(|i| seeds.iter().map(move |&seed| (s, i, seed))).collect::<Vec<_>>())
        .collect();
    let rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(solver, i, seed)| {
            let inst = &instances[i];
            let schedule = args.flags.schedule(solver, &file);
            let start = Instant::now();
            let result = run_solver(inst, solver, &params, &cfg, &schedule, restarts, seed);
            let wall_time = start.elapsed().as_secs_f64();
            let (best_energy, best_cut, status) = match result {
                Ok(out) => {
                    let cut = energy(inst, &out.best.final_spins).map(|r| r.cut).ok();
                    (Some(out.best.final_energy), cut, "ok".to_string())
                }
                Err(e) => (None, None, format!("error: {e}")),
            };
            BenchRow {
                schema_version: SCHEMA_VERSION,
                instance: inst.name().to_string(),
                solver: solver.name().to_string(),
                seed: Some(seed),
                restarts,
                best_energy,
                best_cut,
                wall_time,
                status,
            }
        })
        .collect();
    let aggregates: Vec<BenchRow> = solvers
        .iter()
        .map(|s| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.solver == s.name()).collect();
            aggregate(s.name(), restarts, &mine)
        })
        .collect();

    let mut sink: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            for r in rows.iter().chain(&aggregates) {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = BenchJson { schema_version: SCHEMA_VERSION, rows: &rows, aggregates: &aggregates };
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
    }
    for r in rows.iter().filter(|r| r.best_energy.is_none()) {
        eprintln!("warning: {} {} seed {}: {}", r.instance, r.solver, r.seed.unwrap_or_default(), r.status);
    }
    if rows.iter().all(|r| r.best_energy.is_none()) {
        return Err(RuntimeError(format!("all {} rows failed", rows.len())).into());
    }
    Ok(())
}
