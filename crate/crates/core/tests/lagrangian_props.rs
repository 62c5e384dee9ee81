mod common;

use lagrange_ising::ising::random_instance;
use lagrange_ising::lagrangian::{fd_gradient, ising_lagrange, DEFAULT_FD_STEP};
use lagrange_ising::{IsingInstance, MultiplierState};
use proptest::prelude::*;

fn setup() -> impl Strategy<Value = (IsingInstance, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (any::<u64>(), prop::collection::vec(-1.5f64..1.5, 6), prop::collection::vec(-2.0f64..2.0, 6),
        prop::collection::vec(0.0f64..2.0, 6), prop::collection::vec(-1.0f64..1.0, 6), 0.0f64..3.0)
        .prop_map(|(seed, x, lambda, alpha, h, c)| {
            let base = random_instance(6, 0.5, &[1.0, -1.0], seed).unwrap();
            let inst = IsingInstance::from_dense("h", 6, base.couplings().to_vec(), Some(h), 0.0).unwrap();
            (inst, x, lambda, alpha, c)
        })
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    d / b.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // -∇L_c = 2(λx + cx - cx³ - Jx - αx) - h
    #[test]
    fn cubic_penalty_expansion((inst, x, lambda, alpha, c) in setup()) {
        let p = ising_lagrange(&inst, &alpha).unwrap().with_penalty(c);
        let st = MultiplierState::new(x.clone(), lambda.clone());
        let jx = inst.couple(&x);
        let h = inst.field().map_or(vec![0.0; 6], <[f64]>::to_vec);
        let closed: Vec<f64> = (0..6)
            .map(|i| 2.0 * (lambda[i] * x[i] + c * x[i] - c * x[i].powi(3) - jx[i] - alpha[i] * x[i]) - h[i])
            .collect();
        let grad = p.augmented_gradient(&st).unwrap();
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        prop_assert!(max_rel(&neg, &closed) < 1e-12);
        let fd = fd_gradient(|v| p.augmented_lagrange_value(&MultiplierState::new(v.to_vec(), lambda.clone())).unwrap(), &x, DEFAULT_FD_STEP).unwrap();
        prop_assert!(max_rel(&grad, &fd) < 1e-6);
    }

    #[test]
    fn augmentation_adds_half_c_squared_violation((inst, x, lambda, alpha, c) in setup()) {
        let p = ising_lagrange(&inst, &alpha).unwrap().with_penalty(c);
        let st = MultiplierState::new(x.clone(), lambda);
        let g2: f64 = p.constraint_values(&x).iter().map(|g| g * g).sum();
        let diff = p.augmented_lagrange_value(&st).unwrap() - p.lagrange_value(&st).unwrap();
        prop_assert!((diff - 0.5 * c * g2).abs() < 1e-9);
    }

    #[test]
    fn multipliers_ascend_along_constraints((inst, x, lambda, alpha, c) in setup()) {
        let p = ising_lagrange(&inst, &alpha).unwrap().with_penalty(c);
        let st = MultiplierState::new(x.clone(), lambda.clone());
        let next = p.descent_ascent_step(&st, 1e-3, 0.1).unwrap();
        let g = p.constraint_values(&x);
        for i in 0..6 {
            prop_assert!((next.lambda[i] - lambda[i] - 0.1 * g[i]).abs() < 1e-12);
        }
        // with λ fixed, L rises along the multiplier step: ∂L/∂λ_i = g_i
        let raised = MultiplierState::new(x.clone(), next.lambda.clone());
        let before = p.lagrange_value(&st).unwrap();
        let after = p.lagrange_value(&raised).unwrap();
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn small_descent_step_lowers_augmented_lagrangian((inst, x, lambda, alpha, c) in setup()) {
        let p = ising_lagrange(&inst, &alpha).unwrap().with_penalty(c);
        let st = MultiplierState::new(x, lambda.clone());
        let grad = p.augmented_gradient(&st).unwrap();
        prop_assume!(grad.iter().any(|g| g.abs() > 1e-6));
        let next = p.descent_ascent_step(&st, 1e-5, 1e-9).unwrap();
        let moved = MultiplierState::new(next.x, lambda);
        prop_assert!(p.augmented_lagrange_value(&moved).unwrap() < p.augmented_lagrange_value(&st).unwrap());
    }

    // every spin configuration is a KKT point for λ_i = α_i + (2Jx + h)_i / (2x_i)
    #[test]
    fn spin_configurations_are_kkt_points((inst, _x, _l, alpha, _c) in setup(), bits in 0u64..64) {
        let s = lagrange_ising::SpinConfig::from_index(6, bits).to_f64();
        let jx = inst.couple(&s);
        let h = inst.field().map_or(vec![0.0; 6], <[f64]>::to_vec);
        let lambda: Vec<f64> = (0..6).map(|i| alpha[i] + (2.0 * jx[i] + h[i]) / (2.0 * s[i])).collect();
        let p = ising_lagrange(&inst, &alpha).unwrap();
        let r = p.kkt_check(&MultiplierState::new(s, lambda), 1e-9).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}
