use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lagrange_ising::engine::{run_solver, OdeSystem, SolverSystem};
use lagrange_ising::ising::{brute_force_ground, energy, SpinConfig};
use lagrange_ising::iterators::{build_linear_matrix, build_soljacic_matrix, default_shift, matmul_iterate, soljacic_iterate, BinaryState};
use lagrange_ising::linalg::{jacobi_eigen, Matrix};
use lagrange_ising::{IntegratorConfig, OscParams, SolverKind};
use lagrange_ising_bench::bench_instance;

fn bench_energy(c: &mut Criterion) {
    let inst = bench_instance(800, 1);
    let s = SpinConfig::from_index(800, 0x5555_5555);
    c.bench_function("energy_n800", |b| b.iter(|| energy(black_box(&inst), black_box(&s)).unwrap()));
}

fn bench_brute_force(c: &mut Criterion) {
    let mut g = c.benchmark_group("brute_force");
    g.sample_size(10);
    for n in [12, 16] {
        let inst = bench_instance(n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| b.iter(|| brute_force_ground(inst).unwrap()));
    }
    g.finish();
}

fn bench_rhs(c: &mut Criterion) {
    let mut g = c.benchmark_group("rhs_n100");
    let inst = bench_instance(100, 3);
    let params = OscParams { beta_sat: 0.2, ..OscParams::uniform(100) };
    for kind in [SolverKind::Opo, SolverKind::Phase, SolverKind::Polariton, SolverKind::Kerr] {
        let sys = SolverSystem::new(kind, &inst, &inst, &params);
        let x = sys.initial_state(0);
        let gamma = vec![0.5; sys.gains()];
        let mut out = vec![0.0; x.len()];
        g.bench_function(kind.name(), |b| b.iter(|| sys.derivative(black_box(&gamma), black_box(&x), &mut out)));
    }
    g.finish();
}

fn bench_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_n50_1000_steps");
    g.sample_size(10);
    let inst = bench_instance(50, 4);
    let params = OscParams { beta_sat: 0.2, ..OscParams::uniform(50) };
    let cfg = IntegratorConfig { steps: 1000, record_every: 1000, ..Default::default() };
    for kind in SolverKind::ALL {
        let schedule = kind.default_schedule();
        g.bench_function(kind.name(), |b| {
            b.iter(|| run_solver(&inst, kind, &params, &cfg, &schedule, 1, 0).map(|o| o.best.final_energy))
        });
    }
    g.finish();
}

fn bench_iterators(c: &mut Criterion) {
    let inst = bench_instance(100, 5);
    let m = build_linear_matrix(&inst, &[0.5; 100], 0.01).unwrap();
    let e = vec![0.1; 100];
    c.bench_function("matmul_iterate_n100_1000", |b| b.iter(|| matmul_iterate(&m, black_box(&e), 1000, true).unwrap()));
    let k = build_soljacic_matrix(&inst, default_shift(&inst), None).unwrap();
    let start = BinaryState::new((0..100).map(|i| (i % 2) as u8).collect()).unwrap();
    c.bench_function("soljacic_iterate_n100_1000", |b| b.iter(|| soljacic_iterate(&k, &start, 0.5, 7, 1000).unwrap()));
}

fn bench_jacobi(c: &mut Criterion) {
    let mut g = c.benchmark_group("jacobi_eigen");
    g.sample_size(10);
    for n in [16, 64] {
        let inst = bench_instance(n, 6);
        let a = Matrix::from_row_major(n, n, inst.couplings().to_vec());
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| jacobi_eigen(a)));
    }
    g.finish();
}

criterion_group!(benches, bench_energy, bench_brute_force, bench_rhs, bench_solvers, bench_iterators, bench_jacobi);
criterion_main!(benches);
