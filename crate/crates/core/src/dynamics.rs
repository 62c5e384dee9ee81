//! Right-hand sides of the continuous-time oscillator solvers and the
//! dissipation (Lagrange) functions they descend.
//!
//! For every gradient-type solver the pairing is `dx/dt = -½ ∇_x L(x, γ)`,
//! with the coupling sign of each machine carried into its own `L`:
//!
//! | solver    | coupling in RHS        | coupling in `L`            |
//! |-----------|------------------------|----------------------------|
//! | opo       | `-Σ J c`               | `+Σ J c c`                 |
//! | radio     | `+s Σ J c`             | `-s Σ J c c`               |
//! | fiber     | `+Σ J μ`               | `-Σ J μ μ`                 |
//! | phase     | `-s Σ J sin(φi - φj)`  | `-s Σ J cos(φi - φj)`      |
//! | polariton | `-Σ J E`               | `+Σ J Re(Ei* Ej)`          |
//!
//! When a state carries its own gain vector (adaptive gain), that vector is
//! used in place of `OscParams::gamma`.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::IsingInstance;
use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite state component at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("state is missing its auxiliary vector")]
    MissingAux,
    #[error("invalid parameter: {0}")]
    Param(String),
}

/// Physical parameters shared by the oscillator models. Unused fields are ignored
/// by models that do not reference them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscParams {
    /// Per-oscillator loss.
    pub alpha: Vec<f64>,
    /// Per-oscillator gain (phase model: injection-locking strength λ_i).
    pub gamma: Vec<f64>,
    /// Prefactor on `J` for the radio (`1/(4 R_c C_0)`) and phase (`1/R_c`) models.
    pub coupling_scale: f64,
    /// Cubic saturation coefficient for the opo model.
    pub beta_sat: f64,
    /// Nonlinear attenuation β of the polariton model.
    pub beta_pol: f64,
    /// Nonlinear rotation U of the polariton model.
    pub u_rot: f64,
    pub k_kerr: f64,
    pub p_pump: f64,
    pub xi0: f64,
    pub beta_leleu: f64,
    /// Multiplier ascent rate κ'.
    pub kappa_p: f64,
    /// Augmentation strength c of the `lagrange` solver.
    pub penalty_c: f64,
    /// Standard deviation of the per-step Gaussian noise (thresholded iterator).
    pub noise_sigma: f64,
    /// Decay the noise linearly to zero over the run.
    pub noise_decay: bool,
}

pub const DEFAULT_BETA_SAT: f64 = 0.2;

impl Default for OscParams {
    fn default() -> Self {
        Self {
            alpha: Vec::new(),
            gamma: Vec::new(),
            coupling_scale: 1.0,
            beta_sat: 0.0,
            beta_pol: 0.0,
            u_rot: 0.0,
            k_kerr: 1.0,
            p_pump: 0.0,
            xi0: 1.0,
            beta_leleu: 0.1,
            kappa_p: 0.01,
            penalty_c: 1.0,
            noise_sigma: 0.5,
            noise_decay: false,
        }
    }
}

impl OscParams {
    /// Unit loss, zero gain, defaults elsewhere.
    pub fn uniform(n: usize) -> Self {
        Self { alpha: vec![1.0; n], gamma: vec![0.0; n], ..Self::default() }
    }

    /// Resizes scalar-like `alpha`/`gamma` (length 0 or 1) to `n` entries.
    pub fn resized(mut self, n: usize) -> Self {
        fn fill(v: &mut Vec<f64>, n: usize, default: f64) {
            match v.len() {
                0 => *v = vec![default; n],
                1 => *v = vec![v[0]; n],
                _ => {}
            }
        }
        fill(&mut self.alpha, n, 1.0);
        fill(&mut self.gamma, n, 0.0);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma.iter_mut().for_each(|g| *g = gamma);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha.iter_mut().for_each(|a| *a = alpha);
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), DynamicsError> {
        if self.alpha.len() != n {
            return Err(DynamicsError::Dimension { what: "alpha", expected: n, got: self.alpha.len() });
        }
        if self.gamma.len() != n {
            return Err(DynamicsError::Dimension { what: "gamma", expected: n, got: self.gamma.len() });
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a >= 0.0)) {
            return Err(DynamicsError::Param(format!("alpha must be >= 0, got {a}")));
        }
        if !(self.beta_sat >= 0.0) || !(self.beta_leleu >= 0.0) || !(self.beta_pol >= 0.0) {
            return Err(DynamicsError::Param("saturation coefficients must be >= 0".into()));
        }
        if !self.coupling_scale.is_finite() || self.coupling_scale == 0.0 {
            return Err(DynamicsError::Param("coupling_scale must be finite and nonzero".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(DynamicsError::Param("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Real-valued solver state: amplitudes, polarizations, phases, or Leleu `x`.
/// `aux` holds Leleu's error variables or an adaptive gain vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealState {
    pub x: Vec<f64>,
    pub aux: Option<Vec<f64>>,
}

impl RealState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, aux: None }
    }

    pub fn with_aux(x: Vec<f64>, aux: Vec<f64>) -> Self {
        Self { x, aux: Some(aux) }
    }
}

/// Complex solver state; `gamma` is present under adaptive gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexState {
    pub e: Vec<Complex64>,
    pub gamma: Option<Vec<f64>>,
}

impl ComplexState {
    pub fn new(e: Vec<Complex64>) -> Self {
        Self { e, gamma: None }
    }
}

fn check_real(x: &[f64], n: usize) -> Result<(), DynamicsError> {
    if x.len() != n {
        return Err(DynamicsError::Dimension { what: "state", expected: n, got: x.len() });
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DynamicsError::NonFinite(i)),
        None => Ok(()),
    }
}

fn check_complex(e: &[Complex64], n: usize) -> Result<(), DynamicsError> {
    if e.len() != n {
        return Err(DynamicsError::Dimension { what: "state", expected: n, got: e.len() });
    }
    match e.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DynamicsError::NonFinite(i)),
        None => Ok(()),
    }
}

fn gains<'a>(params: &'a OscParams, own: Option<&'a Vec<f64>>, n: usize) -> Result<&'a [f64], DynamicsError> {
    let g = own.unwrap_or(&params.gamma);
    if g.len() != n {
        return Err(DynamicsError::Dimension { what: "gamma", expected: n, got: g.len() });
    }
    Ok(g)
}

fn check_params(params: &OscParams, n: usize) -> Result<(), DynamicsError> {
    if params.alpha.len() != n {
        return Err(DynamicsError::Dimension { what: "alpha", expected: n, got: params.alpha.len() });
    }
    Ok(())
}

// Kernels: unchecked slice versions used by the integrator.

pub(crate) fn opo_kernel(
    inst: &IsingInstance,
    alpha: &[f64],
    gamma: &[f64],
    beta_sat: f64,
    c: &[f64],
    out: &mut [f64],
) {
    inst.couple_into(c, out);
    for i in 0..c.len() {
        out[i] = (-alpha[i] + gamma[i]) * c[i] - out[i] - beta_sat * c[i] * c[i] * c[i];
    }
}

pub(crate) fn radio_kernel(inst: &IsingInstance, scale: f64, alpha: &[f64], gamma: &[f64], c: &[f64], out: &mut [f64]) {
    inst.couple_into(c, out);
    for i in 0..c.len() {
        out[i] = scale * out[i] - alpha[i] * c[i] + gamma[i] * c[i];
    }
}

pub(crate) fn fiber_kernel(inst: &IsingInstance, alpha: &[f64], gamma: &[f64], mu: &[f64], out: &mut [f64]) {
    inst.couple_into(mu, out);
    for i in 0..mu.len() {
        out[i] += (-alpha[i] + gamma[i]) * mu[i];
    }
}

pub(crate) fn phase_kernel(inst: &IsingInstance, scale: f64, lambda: &[f64], phi: &[f64], out: &mut [f64]) {
    let n = phi.len();
    for i in 0..n {
        let row = inst.row(i);
        let mut s = 0.0;
        for j in 0..n {
            if row[j] != 0.0 {
                s += row[j] * (phi[i] - phi[j]).sin();
            }
        }
        out[i] = -scale * s - lambda[i] * (2.0 * phi[i]).sin();
    }
}

/// Real and imaginary parts are stored in separate halves: `state = [re; im]`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn polariton_kernel(
    inst: &IsingInstance,
    gamma: &[f64],
    beta: f64,
    u: f64,
    re: &[f64],
    im: &[f64],
    d_re: &mut [f64],
    d_im: &mut [f64],
) {
    inst.couple_into(re, d_re);
    inst.couple_into(im, d_im);
    for i in 0..re.len() {
        let m2 = re[i] * re[i] + im[i] * im[i];
        let g = gamma[i] - beta * m2;
        // -iU|E|²E = U|E|² (im, -re)
        d_re[i] = g * re[i] + u * m2 * im[i] - d_re[i];
        d_im[i] = g * im[i] - u * m2 * re[i] - d_im[i];
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn leleu_kernel(
    inst: &IsingInstance,
    alpha: &[f64],
    gamma: &[f64],
    beta: f64,
    x: &[f64],
    e: &[f64],
    dx: &mut [f64],
    de: &mut [f64],
) {
    inst.couple_into(x, dx);
    for i in 0..x.len() {
        dx[i] = (-alpha[i] + gamma[i]) * x[i] + e[i] * dx[i];
        de[i] = beta * (1.0 - x[i] * x[i]) * e[i];
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn kerr_kernel(
    inst: &IsingInstance,
    k: f64,
    p: f64,
    xi0: f64,
    c: &[f64],
    s: &[f64],
    dc: &mut [f64],
    ds: &mut [f64],
) {
    inst.couple_into(s, dc);
    inst.couple_into(c, ds);
    for i in 0..c.len() {
        let m2 = c[i] * c[i] + s[i] * s[i];
        dc[i] = k * m2 * s[i] + p * s[i] + xi0 * dc[i];
        ds[i] = -k * m2 * c[i] + p * c[i] - xi0 * ds[i];
    }
}

pub(crate) fn split_complex(e: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (e.iter().map(|v| v.re).collect(), e.iter().map(|v| v.im).collect())
}

fn join_complex(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
}

/// Parametric oscillator: `dc_i/dt = (-α_i + γ_i) c_i - Σ_j J_ij c_j - β_sat c_i³`.
pub fn opo_rhs(inst: &IsingInstance, params: &OscParams, state: &RealState) -> Result<Vec<f64>, DynamicsError> {
    let n = inst.n();
    check_real(&state.x, n)?;
    check_params(params, n)?;
    if !(params.beta_sat >= 0.0) {
        return Err(DynamicsError::Param(format!("beta_sat must be >= 0, got {}", params.beta_sat)));
    }
    let gamma = gains(params, state.aux.as_ref(), n)?;
    let mut out = vec![0.0; n];
    opo_kernel(inst, &params.alpha, gamma, params.beta_sat, &state.x, &mut out);
    Ok(out)
}

/// Resistively coupled LC oscillators:
/// `dc_i/dt = s Σ_j J_ij c_j - α_i c_i + γ_i c_i` with `s = params.coupling_scale`.
pub fn radio_rhs(inst: &IsingInstance, params: &OscParams, state: &RealState) -> Result<Vec<f64>, DynamicsError> {
    let n = inst.n();
    check_real(&state.x, n)?;
    check_params(params, n)?;
    let gamma = gains(params, state.aux.as_ref(), n)?;
    let mut out = vec![0.0; n];
    radio_kernel(inst, params.coupling_scale, &params.alpha, gamma, &state.x, &mut out);
    Ok(out)
}

/// Loss `α = (n - 1) s` of the radio model for coupling scale `s = 1/(4 R_c C_0)`.
pub fn radio_loss(n: usize, coupling_scale: f64) -> f64 {
    (n as f64 - 1.0) * coupling_scale
}

/// Multicore fiber polarization: `dμ_i/dt = (-α_i + γ_i) μ_i + Σ_j J_ij μ_j`.
pub fn fiber_rhs(inst: &IsingInstance, params: &OscParams, state: &RealState) -> Result<Vec<f64>, DynamicsError> {
    let n = inst.n();
    check_real(&state.x, n)?;
    check_params(params, n)?;
    let gamma = gains(params, state.aux.as_ref(), n)?;
    let mut out = vec![0.0; n];
    fiber_kernel(inst, &params.alpha, gamma, &state.x, &mut out);
    Ok(out)
}

/// Injection-locked phase oscillators:
/// `dφ_i/dt = -s Σ_j J_ij sin(φ_i - φ_j) - λ_i sin(2 φ_i)`, `λ = params.gamma`.
pub fn phase_rhs(inst: &IsingInstance, params: &OscParams, state: &RealState) -> Result<Vec<f64>, DynamicsError> {
    let n = inst.n();
    check_real(&state.x, n)?;
    let lambda = gains(params, state.aux.as_ref(), n)?;
    let mut out = vec![0.0; n];
    phase_kernel(inst, params.coupling_scale, lambda, &state.x, &mut out);
    Ok(out)
}

/// Polariton condensates:
/// `dE_i/dt = (γ_i - β|E_i|²) E_i - iU|E_i|² E_i - Σ_j J_ij E_j`.
pub fn polariton_rhs(
    inst: &IsingInstance,
    params: &OscParams,
    state: &ComplexState,
) -> Result<Vec<Complex64>, DynamicsError> {
    let n = inst.n();
    check_complex(&state.e, n)?;
    let gamma = gains(params, state.gamma.as_ref(), n)?;
    let (re, im) = split_complex(&state.e);
    let (mut dre, mut dim) = (vec![0.0; n], vec![0.0; n]);
    polariton_kernel(inst, gamma, params.beta_pol, params.u_rot, &re, &im, &mut dre, &mut dim);
    Ok(join_complex(&dre, &dim))
}

/// Multiplier ascent for real amplitudes: `dγ_i/dt = κ' (1 - x_i²)`.
pub fn multiplier_feedback_rhs(x: &[f64], kappa_p: f64) -> Vec<f64> {
    x.iter().map(|&v| kappa_p * (1.0 - v * v)).collect()
}

/// Multiplier ascent for complex amplitudes: `dγ_i/dt = κ' (1 - |E_i|²)`.
pub fn multiplier_feedback_rhs_complex(e: &[Complex64], kappa_p: f64) -> Vec<f64> {
    e.iter().map(|v| kappa_p * (1.0 - v.norm_sqr())).collect()
}

/// Leleu's amplitude/error system (cubic terms omitted):
/// `dx_i/dt = (-α_i + γ_i) x_i + e_i Σ_j J_ij x_j`, `de_i/dt = β (1 - x_i²) e_i`.
pub fn leleu_rhs(
    inst: &IsingInstance,
    params: &OscParams,
    state: &RealState,
) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
    let n = inst.n();
    check_real(&state.x, n)?;
    check_params(params, n)?;
    let e = state.aux.as_ref().ok_or(DynamicsError::MissingAux)?;
    check_real(e, n)?;
    if params.gamma.len() != n {
        return Err(DynamicsError::Dimension { what: "gamma", expected: n, got: params.gamma.len() });
    }
    let (mut dx, mut de) = (vec![0.0; n], vec![0.0; n]);
    leleu_kernel(inst, &params.alpha, &params.gamma, params.beta_leleu, &state.x, e, &mut dx, &mut de);
    Ok((dx, de))
}

/// Splits Leleu's effective coupling `A_ij = e_i J_ij` into its symmetric and
/// antisymmetric parts `(S, K)` with `A = S + K`.
pub fn leleu_split(inst: &IsingInstance, e: &[f64]) -> (Matrix, Matrix, Matrix) {
    let n = inst.n();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = e[i] * inst.coupling(i, j);
        }
    }
    let at = a.transpose();
    let mut s = Matrix::zeros(n, n);
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = (a[(i, j)] + at[(i, j)]) / 2.0;
            k[(i, j)] = (a[(i, j)] - at[(i, j)]) / 2.0;
        }
    }
    (a, s, k)
}

/// Kerr parametric oscillators in quadratures; the state stores `E_i = c_i + i s_i`
/// and the result is `dc_i/dt + i ds_i/dt`:
///
/// `dc/dt = K(c² + s²) s + p s + ξ₀ Σ J s`, `ds/dt = -K(c² + s²) c + p c - ξ₀ Σ J c`.
pub fn kerr_rhs(inst: &IsingInstance, params: &OscParams, state: &ComplexState) -> Result<Vec<Complex64>, DynamicsError> {
    let n = inst.n();
    check_complex(&state.e, n)?;
    let (c, s) = split_complex(&state.e);
    let (mut dc, mut ds) = (vec![0.0; n], vec![0.0; n]);
    kerr_kernel(inst, params.k_kerr, params.p_pump, params.xi0, &c, &s, &mut dc, &mut ds);
    Ok(join_complex(&dc, &ds))
}

/// Phasor form of the Kerr model with unit rate:
/// `dG/dt = p G* + iK|G|² G + i ξ₀ Σ_j J_ij G_j`.
pub fn kerr_phasor_rhs(inst: &IsingInstance, params: &OscParams, g: &[Complex64]) -> Vec<Complex64> {
    let (re, im) = split_complex(g);
    let jre = inst.couple(&re);
    let jim = inst.couple(&im);
    let i = Complex64::i();
    g.iter()
        .enumerate()
        .map(|(k, &gk)| {
            let coupled = Complex64::new(jre[k], jim[k]);
            params.p_pump * gk.conj() + i * params.k_kerr * gk.norm_sqr() * gk + i * params.xi0 * coupled
        })
        .collect()
}

/// Maps quadratures to the phasor variable of [`kerr_phasor_rhs`]:
/// `G = e^{iπ/4} (c - i s)`.
pub fn kerr_to_phasor(e: Complex64) -> Complex64 {
    Complex64::from_polar(1.0, FRAC_PI_4) * e.conj()
}

/// Net dissipation of the parametric oscillators with fixed gain:
/// `h(c) = Σ J c c + Σ α c² - Σ γ c²`.
pub fn opo_dissipation(inst: &IsingInstance, params: &OscParams, c: &[f64]) -> f64 {
    let jc = inst.couple(c);
    (0..c.len()).map(|i| c[i] * jc[i] + (params.alpha[i] - params.gamma[i]) * c[i] * c[i]).sum()
}

/// `L(c, γ) = Σ J c c + Σ α c² - Σ γ (c² - 1)`; same gradient in `c` as [`opo_dissipation`].
pub fn opo_lagrangian(inst: &IsingInstance, params: &OscParams, state: &RealState) -> f64 {
    let gamma = state.aux.as_deref().unwrap_or(&params.gamma);
    quadratic_lagrangian(inst, 1.0, &params.alpha, gamma, &state.x)
}

/// `L(c, γ) = -s Σ J c c + Σ α c² - Σ γ (c² - 1)` with `s = params.coupling_scale`
/// (unit capacitance).
pub fn radio_lagrangian(inst: &IsingInstance, params: &OscParams, state: &RealState) -> f64 {
    let gamma = state.aux.as_deref().unwrap_or(&params.gamma);
    quadratic_lagrangian(inst, -params.coupling_scale, &params.alpha, gamma, &state.x)
}

/// `L(μ, γ) = Σ α μ² - Σ J μ μ - Σ γ (μ² - 1)`.
pub fn fiber_lagrangian(inst: &IsingInstance, params: &OscParams, state: &RealState) -> f64 {
    let gamma = state.aux.as_deref().unwrap_or(&params.gamma);
    quadratic_lagrangian(inst, -1.0, &params.alpha, gamma, &state.x)
}

pub(crate) fn quadratic_lagrangian(inst: &IsingInstance, sign: f64, alpha: &[f64], gamma: &[f64], x: &[f64]) -> f64 {
    let jx = inst.couple(x);
    (0..x.len())
        .map(|i| sign * x[i] * jx[i] + alpha[i] * x[i] * x[i] - gamma[i] * (x[i] * x[i] - 1.0))
        .sum()
}

/// `V(φ, λ) = -s Σ_{i,j} J_ij cos(φ_i - φ_j) + Σ λ_i (1 - cos 2φ_i)`.
pub fn phase_lagrangian(inst: &IsingInstance, params: &OscParams, state: &RealState) -> f64 {
    let lambda = state.aux.as_deref().unwrap_or(&params.gamma);
    phase_lagrangian_slice(inst, params.coupling_scale, lambda, &state.x)
}

pub(crate) fn phase_lagrangian_slice(inst: &IsingInstance, scale: f64, lambda: &[f64], phi: &[f64]) -> f64 {
    let n = phi.len();
    let mut v = 0.0;
    for i in 0..n {
        let row = inst.row(i);
        for j in 0..n {
            if row[j] != 0.0 {
                v -= scale * row[j] * (phi[i] - phi[j]).cos();
            }
        }
        v += lambda[i] * (1.0 - (2.0 * phi[i]).cos());
    }
    v
}

/// `L(E, γ) = Σ J_ij Re(E_i* E_j) + (β/2) Σ |E|⁴ - Σ γ (|E|² - 1)`. The rotation
/// term `U` has no potential and is not represented.
pub fn polariton_lagrangian(inst: &IsingInstance, params: &OscParams, state: &ComplexState) -> f64 {
    let gamma = state.gamma.as_deref().unwrap_or(&params.gamma);
    let (re, im) = split_complex(&state.e);
    polariton_lagrangian_slice(inst, params.beta_pol, gamma, &re, &im)
}

pub(crate) fn polariton_lagrangian_slice(inst: &IsingInstance, beta: f64, gamma: &[f64], re: &[f64], im: &[f64]) -> f64 {
    let jre = inst.couple(re);
    let jim = inst.couple(im);
    (0..re.len())
        .map(|i| {
            let m2 = re[i] * re[i] + im[i] * im[i];
            re[i] * jre[i] + im[i] * jim[i] + 0.5 * beta * m2 * m2 - gamma[i] * (m2 - 1.0)
        })
        .sum()
}
