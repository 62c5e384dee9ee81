//! Lagrange and augmented-Lagrange functions for equality-constrained problems,
//! the descent/ascent iteration that solves them, and a finite-difference
//! gradient oracle.
//!
//! Convention: `L(x, λ) = f(x) + Σ λ_i g_i(x)` and
//! `L_c(x, λ) = L(x, λ) + (c/2) Σ g_i(x)²`. For the Ising problem
//! `g_i(x) = 1 - x_i²`, so the multipliers play the role of oscillator gains.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::IsingInstance;

/// Any `|x_i|` beyond this aborts an iteration.
pub const DIVERGENCE_BOUND: f64 = 1e6;
pub const DEFAULT_PENALTY: f64 = 1.0;
pub const DEFAULT_KAPPA: f64 = 0.05;
pub const DEFAULT_KAPPA_P: f64 = 0.005;
pub const DEFAULT_FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagrangeError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("diverged at index {index}: value {value}")]
    Diverged { index: usize, value: f64 },
    #[error("non-finite function value at component {0}")]
    NonFinite(usize),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// A smooth merit function together with its equality constraints.
pub trait ConstrainedObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn merit(&self, x: &[f64]) -> f64;
    fn merit_gradient(&self, x: &[f64], out: &mut [f64]);
    fn constraints(&self, x: &[f64], out: &mut [f64]);
    /// Adds `Σ_i w_i ∇g_i(x)` to `out`.
    fn accumulate_constraint_gradients(&self, x: &[f64], weights: &[f64], out: &mut [f64]);
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Closure-backed objective for small hand-written problems.
#[derive(Clone)]
pub struct FnObjective {
    dim: usize,
    f: ScalarFn,
    grad_f: GradFn,
    g: Vec<(ScalarFn, GradFn)>,
}

impl FnObjective {
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, f: Arc::new(f), grad_f: Arc::new(grad_f), g: Vec::new() }
    }

    pub fn with_constraint(
        mut self,
        g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.g.push((Arc::new(g), Arc::new(grad_g)));
        self
    }
}

impl ConstrainedObjective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn num_constraints(&self) -> usize {
        self.g.len()
    }
    fn merit(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn merit_gradient(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&(self.grad_f)(x));
    }
    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        for (o, (g, _)) in out.iter_mut().zip(&self.g) {
            *o = g(x);
        }
    }
    fn accumulate_constraint_gradients(&self, x: &[f64], weights: &[f64], out: &mut [f64]) {
        for (&w, (_, grad)) in weights.iter().zip(&self.g) {
            if w != 0.0 {
                for (o, d) in out.iter_mut().zip(grad(x)) {
                    *o += w * d;
                }
            }
        }
    }
}

/// `f(x) = Σ_{i,j} J_ij x_i x_j + Σ_i h_i x_i + offset + Σ_i α_i x_i²`, `g_i = 1 - x_i²`.
///
/// On spin configurations `f` equals the Ising energy plus `Σ α_i`.
#[derive(Debug, Clone)]
pub struct IsingObjective {
    inst: IsingInstance,
    alpha: Vec<f64>,
}

impl IsingObjective {
    pub fn instance(&self) -> &IsingInstance {
        &self.inst
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

impl ConstrainedObjective for IsingObjective {
    fn dim(&self) -> usize {
        self.inst.n()
    }
    fn num_constraints(&self) -> usize {
        self.inst.n()
    }
    fn merit(&self, x: &[f64]) -> f64 {
        let jx = self.inst.couple(x);
        let mut v = self.inst.offset();
        for i in 0..x.len() {
            v += x[i] * jx[i] + self.alpha[i] * x[i] * x[i];
        }
        if let Some(h) = self.inst.field() {
            v += crate::ising::dot(h, x);
        }
        v
    }
    fn merit_gradient(&self, x: &[f64], out: &mut [f64]) {
        self.inst.couple_into(x, out);
        for i in 0..x.len() {
            out[i] = 2.0 * out[i] + 2.0 * self.alpha[i] * x[i];
        }
        if let Some(h) = self.inst.field() {
            for (o, hi) in out.iter_mut().zip(h) {
                *o += hi;
            }
        }
    }
    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = 1.0 - xi * xi;
        }
    }
    fn accumulate_constraint_gradients(&self, x: &[f64], weights: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] += -2.0 * x[i] * weights[i];
        }
    }
}

/// Variables and multipliers at one point of a descent/ascent trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierState {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl MultiplierState {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self { x, lambda }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub feasibility: f64,
    pub pass: bool,
}

pub struct LagrangeProblem {
    objective: Box<dyn ConstrainedObjective>,
    pub penalty_c: f64,
}

impl std::fmt::Debug for LagrangeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangeProblem")
            .field("dim", &self.dim())
            .field("constraints", &self.num_constraints())
            .field("penalty_c", &self.penalty_c)
            .finish()
    }
}

/// The Ising Lagrange problem for `inst` with per-variable loss `alpha`.
pub fn ising_lagrange(inst: &IsingInstance, alpha: &[f64]) -> Result<LagrangeProblem, LagrangeError> {
    if alpha.len() != inst.n() {
        return Err(LagrangeError::Dimension { what: "alpha", expected: inst.n(), got: alpha.len() });
    }
    if let Some(a) = alpha.iter().find(|a| !(**a >= 0.0)) {
        return Err(LagrangeError::Argument(format!("alpha entries must be >= 0, got {a}")));
    }
    Ok(LagrangeProblem::new(
        IsingObjective { inst: inst.clone(), alpha: alpha.to_vec() },
        DEFAULT_PENALTY,
    ))
}

impl LagrangeProblem {
    pub fn new(objective: impl ConstrainedObjective + 'static, penalty_c: f64) -> Self {
        Self { objective: Box::new(objective), penalty_c }
    }

    pub fn with_penalty(mut self, c: f64) -> Self {
        self.penalty_c = c;
        self
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.objective.num_constraints()
    }

    pub fn merit(&self, x: &[f64]) -> f64 {
        self.objective.merit(x)
    }

    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_constraints()];
        self.objective.constraints(x, &mut g);
        g
    }

    fn check(&self, st: &MultiplierState) -> Result<(), LagrangeError> {
        if st.x.len() != self.dim() {
            return Err(LagrangeError::Dimension { what: "x", expected: self.dim(), got: st.x.len() });
        }
        if st.lambda.len() != self.num_constraints() {
            return Err(LagrangeError::Dimension {
                what: "lambda",
                expected: self.num_constraints(),
                got: st.lambda.len(),
            });
        }
        Ok(())
    }

    pub fn lagrange_value(&self, st: &MultiplierState) -> Result<f64, LagrangeError> {
        self.check(st)?;
        let g = self.constraint_values(&st.x);
        Ok(self.merit(&st.x) + crate::ising::dot(&st.lambda, &g))
    }

    pub fn augmented_lagrange_value(&self, st: &MultiplierState) -> Result<f64, LagrangeError> {
        self.check(st)?;
        let g = self.constraint_values(&st.x);
        let penalty: f64 = g.iter().map(|v| v * v).sum();
        Ok(self.merit(&st.x) + crate::ising::dot(&st.lambda, &g) + 0.5 * self.penalty_c * penalty)
    }

    /// `∇_x L_c(x, λ) = ∇f + Σ (λ_i + c g_i) ∇g_i`.
    pub fn augmented_gradient(&self, st: &MultiplierState) -> Result<Vec<f64>, LagrangeError> {
        self.check(st)?;
        Ok(self.gradient_with_penalty(st, self.penalty_c))
    }

    /// `∇_x L(x, λ)`, the unaugmented gradient used for stationarity.
    pub fn lagrange_gradient(&self, st: &MultiplierState) -> Result<Vec<f64>, LagrangeError> {
        self.check(st)?;
        Ok(self.gradient_with_penalty(st, 0.0))
    }

    fn gradient_with_penalty(&self, st: &MultiplierState, c: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim()];
        self.objective.merit_gradient(&st.x, &mut grad);
        let mut weights = self.constraint_values(&st.x);
        for (w, &l) in weights.iter_mut().zip(&st.lambda) {
            *w = l + c * *w;
        }
        self.objective.accumulate_constraint_gradients(&st.x, &weights, &mut grad);
        grad
    }

    /// One simultaneous step: `x ← x - κ ∇_x L_c`, `λ ← λ + κ' g(x)`, both
    /// evaluated at the incoming state.
    pub fn descent_ascent_step(
        &self,
        st: &MultiplierState,
        kappa: f64,
        kappa_p: f64,
    ) -> Result<MultiplierState, LagrangeError> {
        if !(kappa > 0.0 && kappa_p > 0.0) {
            return Err(LagrangeError::Argument(format!(
                "step sizes must be positive, got kappa={kappa}, kappa_p={kappa_p}"
            )));
        }
        let grad = self.augmented_gradient(st)?;
        if let Some(i) = grad.iter().position(|v| !v.is_finite()) {
            return Err(LagrangeError::Diverged { index: i, value: grad[i] });
        }
        let g = self.constraint_values(&st.x);
        let x: Vec<f64> = st.x.iter().zip(&grad).map(|(x, d)| x - kappa * d).collect();
        if let Some(i) = x.iter().position(|v| !(v.abs() <= DIVERGENCE_BOUND)) {
            return Err(LagrangeError::Diverged { index: i, value: x[i] });
        }
        let lambda = st.lambda.iter().zip(&g).map(|(l, gi)| l + kappa_p * gi).collect();
        Ok(MultiplierState { x, lambda })
    }

    /// Iterates [`Self::descent_ascent_step`] until both the step in `x` and
    /// the step in `λ` fall below `tol` (max-norm) or `max_steps` is reached.
    /// Returns the final state and the number of steps taken.
    pub fn solve_descent_ascent(
        &self,
        mut st: MultiplierState,
        kappa: f64,
        kappa_p: f64,
        tol: f64,
        max_steps: usize,
    ) -> Result<(MultiplierState, usize), LagrangeError> {
        for step in 0..max_steps {
            let next = self.descent_ascent_step(&st, kappa, kappa_p)?;
            let dx = max_abs_diff(&next.x, &st.x);
            let dl = max_abs_diff(&next.lambda, &st.lambda);
            st = next;
            if dx <= tol && dl <= tol {
                return Ok((st, step + 1));
            }
        }
        Ok((st, max_steps))
    }

    /// First-order stationarity and primal feasibility of an equality-constrained point.
    pub fn kkt_check(&self, st: &MultiplierState, tol: f64) -> Result<KktReport, LagrangeError> {
        let grad = self.lagrange_gradient(st)?;
        let stationarity = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let feasibility = self.constraint_values(&st.x).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(KktReport { stationarity, feasibility, pass: stationarity <= tol && feasibility <= tol })
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Central-difference gradient: `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Result<Vec<f64>, LagrangeError> {
    if !(step > 0.0) {
        return Err(LagrangeError::Argument(format!("finite-difference step must be positive, got {step}")));
    }
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = probe[i];
        probe[i] = xi + step;
        let up = f(&probe);
        probe[i] = xi - step;
        let down = f(&probe);
        probe[i] = xi;
        if !up.is_finite() || !down.is_finite() {
            return Err(LagrangeError::NonFinite(i));
        }
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}
