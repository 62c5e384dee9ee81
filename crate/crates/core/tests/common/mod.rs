#![allow(dead_code)]

use lagrange_ising::dynamics::{
    fiber_lagrangian, fiber_rhs, opo_lagrangian, opo_rhs, phase_lagrangian, phase_rhs, polariton_lagrangian,
    polariton_rhs, radio_lagrangian, radio_rhs, OscParams,
};
use lagrange_ising::ising::random_instance;
use lagrange_ising::lagrangian::{fd_gradient, DEFAULT_FD_STEP};
use lagrange_ising::{Complex64, ComplexState, IsingInstance, RealState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRADIENT_MODELS: [&str; 5] = ["opo", "radio", "fiber", "phase", "polariton"];

pub fn pm1_instance(n: usize, seed: u64) -> IsingInstance {
    random_instance(n, 0.5, &[1.0, -1.0], seed).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize) -> OscParams {
    OscParams {
        alpha: (0..n).map(|_| rng.random_range(0.5..1.5)).collect(),
        gamma: (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
        coupling_scale: rng.random_range(0.2..1.0),
        beta_pol: rng.random_range(0.05..0.5),
        ..OscParams::default()
    }
}

fn rel_err(rhs: &[f64], reference: &[f64]) -> f64 {
    let diff = rhs.iter().zip(reference).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = reference.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    diff / scale.max(1e-12)
}

/// Relative max-norm error between a model RHS and `-½ ∇L` by central
/// differences, at one random state.
pub fn gradient_error(model: &str, inst: &IsingInstance, params: &OscParams, rng: &mut ChaCha8Rng) -> f64 {
    let n = inst.n();
    let h = DEFAULT_FD_STEP;
    if model == "polariton" {
        let e: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))).collect();
        let rhs = polariton_rhs(inst, params, &ComplexState::new(e.clone())).unwrap();
        let flat: Vec<f64> = e.iter().map(|v| v.re).chain(e.iter().map(|v| v.im)).collect();
        let l = |v: &[f64]| {
            let e: Vec<Complex64> = (0..n).map(|i| Complex64::new(v[i], v[n + i])).collect();
            polariton_lagrangian(inst, params, &ComplexState::new(e))
        };
        let g = fd_gradient(l, &flat, h).unwrap();
        let reference: Vec<f64> = g.iter().map(|v| -0.5 * v).collect();
        let got: Vec<f64> = rhs.iter().map(|v| v.re).chain(rhs.iter().map(|v| v.im)).collect();
        return rel_err(&got, &reference);
    }
    let x: Vec<f64> = if model == "phase" {
        (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
    } else {
        (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()
    };
    type Rhs = fn(&IsingInstance, &OscParams, &RealState) -> Result<Vec<f64>, lagrange_ising::dynamics::DynamicsError>;
    type Lag = fn(&IsingInstance, &OscParams, &RealState) -> f64;
    let (rhs, lag): (Rhs, Lag) = match model {
        "opo" => (opo_rhs, opo_lagrangian),
        "radio" => (radio_rhs, radio_lagrangian),
        "fiber" => (fiber_rhs, fiber_lagrangian),
        "phase" => (phase_rhs, phase_lagrangian),
        other => panic!("unknown model {other}"),
    };
    let got = rhs(inst, params, &RealState::new(x.clone())).unwrap();
    let g = fd_gradient(|v| lag(inst, params, &RealState::new(v.to_vec())), &x, h).unwrap();
    let reference: Vec<f64> = g.iter().map(|v| -0.5 * v).collect();
    rel_err(&got, &reference)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
