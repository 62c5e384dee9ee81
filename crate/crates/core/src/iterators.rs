//! Discrete-time matrix-multiplier solvers: the gain-compensated linear
//! iteration and the noisy thresholded iteration with `K = sqrt(J + αM)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{IsingError, IsingInstance, SpinConfig};
use crate::linalg::{jacobi_eigen, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IterError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("J + alpha*M is not positive semidefinite: min eigenvalue {min_eigenvalue}, need alpha >= {min_alpha}")]
    NotPsd { min_eigenvalue: f64, min_alpha: f64 },
    #[error("M does not share eigenvectors with J (commutator norm {0})")]
    NotCommuting(f64),
    #[error("iteration overflowed at step {step}")]
    Diverged { step: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("binary entries must be 0 or 1, got {0} at index {1}")]
    BadBit(u8, usize),
}

/// Negative eigenvalues of `J + αM` down to this are treated as zero.
pub const PSD_TOL: f64 = 1e-10;
/// Margin added above `-λ_min(J)` by [`default_shift`].
pub const DEFAULT_SHIFT_MARGIN: f64 = 0.1;
/// Overflow threshold for the unnormalized linear iteration.
pub const OVERFLOW_BOUND: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationKind {
    Linear,
    Soljacic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMatrix {
    pub a: Matrix,
    pub kind: IterationKind,
    pub alpha_shift: f64,
    pub kappa_dt: f64,
    /// `J + αM`, kept for the thresholded iteration's merit function.
    pub shifted: Option<Matrix>,
}

impl IterationMatrix {
    pub fn n(&self) -> usize {
        self.a.rows()
    }
}

/// `A_ij = (1 + 2κΔt γ_i) δ_ij - 2κΔt J_ij`.
pub fn build_linear_matrix(inst: &IsingInstance, gamma: &[f64], kappa_dt: f64) -> Result<IterationMatrix, IterError> {
    let n = inst.n();
    if gamma.len() != n {
        return Err(IterError::Dimension { what: "gamma", expected: n, got: gamma.len() });
    }
    if !(kappa_dt >= 0.0) {
        return Err(IterError::Argument(format!("kappa_dt must be >= 0, got {kappa_dt}")));
    }
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = -2.0 * kappa_dt * inst.coupling(i, j);
        }
        a[(i, i)] += 1.0 + 2.0 * kappa_dt * gamma[i];
    }
    Ok(IterationMatrix { a, kind: IterationKind::Linear, alpha_shift: 0.0, kappa_dt, shifted: None })
}

/// Repeats `E ← A E`. With `normalize`, rescales to unit max-norm after every step.
pub fn matmul_iterate(m: &IterationMatrix, e: &[f64], steps: usize, normalize: bool) -> Result<Vec<f64>, IterError> {
    let n = m.n();
    if e.len() != n {
        return Err(IterError::Dimension { what: "state", expected: n, got: e.len() });
    }
    let mut cur = e.to_vec();
    let mut next = vec![0.0; n];
    for step in 0..steps {
        m.a.mul_vec_into(&cur, &mut next);
        let peak = next.iter().fold(0.0_f64, |p, v| p.max(v.abs()));
        if !peak.is_finite() || (!normalize && peak > OVERFLOW_BOUND) {
            return Err(IterError::Diverged { step });
        }
        if normalize && peak > 0.0 {
            next.iter_mut().for_each(|v| *v /= peak);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// `α = max(0, -λ_min(J)) + 0.1`, which makes `J + αI` positive definite.
pub fn default_shift(inst: &IsingInstance) -> f64 {
    (-inst.min_eigenvalue()).max(0.0) + DEFAULT_SHIFT_MARGIN
}

/// `K = sqrt(J + αM)` through a symmetric eigendecomposition, keeping the
/// nonnegative square roots. `m_choice = None` means `M = I`.
pub fn build_soljacic_matrix(
    inst: &IsingInstance,
    alpha: f64,
    m_choice: Option<&Matrix>,
) -> Result<IterationMatrix, IterError> {
    let n = inst.n();
    let j = Matrix::from_row_major(n, n, inst.couplings().to_vec());
    let m = match m_choice {
        Some(m) => {
            if m.rows() != n || m.cols() != n {
                return Err(IterError::Dimension { what: "M", expected: n, got: m.rows() });
            }
            let comm = j.matmul(m).max_abs_diff(&m.matmul(&j));
            if comm > 1e-8 {
                return Err(IterError::NotCommuting(comm));
            }
            m.clone()
        }
        None => Matrix::identity(n),
    };
    let mut shifted = j.clone();
    for r in 0..n {
        for c in 0..n {
            shifted[(r, c)] += alpha * m[(r, c)];
        }
    }
    let eig = jacobi_eigen(&shifted);
    let min_eigenvalue = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -PSD_TOL {
        // shared eigenvectors: λ_k(J) + α λ_k(M) >= 0 for each k with λ_k(M) > 0
        let mut min_alpha = f64::NEG_INFINITY;
        for k in 0..n {
            let v: Vec<f64> = (0..n).map(|i| eig.vectors[(i, k)]).collect();
            let jk = crate::ising::dot(&v, &j.mul_vec(&v));
            let mk = crate::ising::dot(&v, &m.mul_vec(&v));
            if mk > 0.0 {
                min_alpha = min_alpha.max(-jk / mk);
            }
        }
        return Err(IterError::NotPsd { min_eigenvalue, min_alpha });
    }
    let a = eig.reconstruct_with(|l| l.max(0.0).sqrt());
    Ok(IterationMatrix { a, kind: IterationKind::Soljacic, alpha_shift: alpha, kappa_dt: 0.0, shifted: Some(shifted) })
}

/// Binary amplitudes of the thresholded iteration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryState(Vec<u8>);

impl BinaryState {
    pub fn new(bits: Vec<u8>) -> Result<Self, IterError> {
        if let Some((i, &b)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(IterError::BadBit(b, i));
        }
        Ok(Self(bits))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| b as f64).collect()
    }
}

/// `s_i = 2 e_i - 1`.
pub fn binary_to_spins(state: &BinaryState) -> SpinConfig {
    SpinConfig::new(state.0.iter().map(|&b| 2 * b as i8 - 1).collect()).expect("bits map to ±1")
}

/// `e_i = (s_i + 1) / 2`.
pub fn spins_to_binary(s: &SpinConfig) -> BinaryState {
    BinaryState(s.as_slice().iter().map(|&v| ((v + 1) / 2) as u8).collect())
}

/// `H = -(β/2) Σ_ij (J + αM)_ij E_i E_j` with `β = 1`.
pub fn soljacic_merit(k: &IterationMatrix, state: &BinaryState) -> Result<f64, IterError> {
    let shifted = k
        .shifted
        .as_ref()
        .ok_or_else(|| IterError::Argument("merit needs a thresholded-iteration matrix".into()))?;
    let e = state.as_f64();
    Ok(-0.5 * crate::ising::dot(&e, &shifted.mul_vec(&e)))
}

/// Noise level at each step of a thresholded run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSchedule {
    pub sigma: f64,
    /// Linear decay from `sigma` at step 0 to zero at the last step.
    pub decay: bool,
}

impl NoiseSchedule {
    pub fn constant(sigma: f64) -> Self {
        Self { sigma, decay: false }
    }

    fn at(&self, step: usize, steps: usize) -> f64 {
        if self.decay && steps > 1 {
            self.sigma * (1.0 - step as f64 / (steps - 1) as f64)
        } else {
            self.sigma
        }
    }
}

/// Runs `E(t+1) = u(2 K E(t) + N(t))` for `steps` steps, calling `visit` with
/// every new state. `u(x) = 1` only for `x > 0`.
pub fn soljacic_run(
    k: &IterationMatrix,
    state: &BinaryState,
    noise: NoiseSchedule,
    seed: u64,
    steps: usize,
    mut visit: impl FnMut(usize, &BinaryState),
) -> Result<BinaryState, IterError> {
    let n = k.n();
    if state.len() != n {
        return Err(IterError::Dimension { what: "state", expected: n, got: state.len() });
    }
    if !(noise.sigma >= 0.0) {
        return Err(IterError::Argument(format!("noise_sigma must be >= 0, got {}", noise.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut cur = state.clone();
    let mut field = vec![0.0; n];
    for step in 0..steps {
        k.a.mul_vec_into(&cur.as_f64(), &mut field);
        let sigma = noise.at(step, steps);
        for (i, f) in field.iter().enumerate() {
            let z = if sigma > 0.0 { sigma * std_normal.sample(&mut rng) } else { 0.0 };
            cur.0[i] = u8::from(2.0 * f + z > 0.0);
        }
        visit(step, &cur);
    }
    Ok(cur)
}

pub fn soljacic_iterate(
    k: &IterationMatrix,
    state: &BinaryState,
    noise_sigma: f64,
    seed: u64,
    steps: usize,
) -> Result<BinaryState, IterError> {
    soljacic_run(k, state, NoiseSchedule::constant(noise_sigma), seed, steps, |_, _| {})
}

impl From<IsingError> for IterError {
    fn from(e: IsingError) -> Self {
        IterError::Argument(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(v: &[u8]) -> BinaryState {
        BinaryState::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_examples() {
        let inst = crate::ising::random_instance(4, 0.5, &[1.0, -1.0], 1).unwrap();
        let m = build_linear_matrix(&inst, &[0.3; 4], 0.0).unwrap();
        assert_eq!(m.a, Matrix::identity(4));

        let one = IsingInstance::from_dense("one", 1, vec![0.0], None, 0.0).unwrap();
        let m = build_linear_matrix(&one, &[1.0], 0.05).unwrap();
        assert!((m.a[(0, 0)] - 1.1).abs() < 1e-15);

        let inst = crate::ising::random_instance(7, 0.6, &[1.0, -2.0], 2).unwrap();
        let m = build_linear_matrix(&inst, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7], 0.05).unwrap();
        assert!(m.a.is_symmetric(0.0));
    }

    #[test]
    fn matmul_examples() {
        let inst = crate::ising::random_instance(3, 1.0, &[1.0], 0).unwrap();
        let m = build_linear_matrix(&inst, &[0.0; 3], 0.1).unwrap();
        let e = vec![0.2, -0.4, 1.0];
        assert_eq!(matmul_iterate(&m, &e, 0, false).unwrap(), e);
        let id = build_linear_matrix(&inst, &[0.0; 3], 0.0).unwrap();
        assert_eq!(matmul_iterate(&id, &e, 10, false).unwrap(), e);
    }

    #[test]
    fn matmul_overflow_without_normalization() {
        let one = IsingInstance::from_dense("one", 1, vec![0.0], None, 0.0).unwrap();
        let m = build_linear_matrix(&one, &[100.0], 0.5).unwrap(); // A = [101]
        assert!(matches!(matmul_iterate(&m, &[1.0], 1000, false), Err(IterError::Diverged { .. })));
        assert_eq!(matmul_iterate(&m, &[1.0], 1000, true).unwrap(), vec![1.0]);
    }

    #[test]
    fn soljacic_matrix_examples() {
        let zero = IsingInstance::from_dense("z", 3, vec![0.0; 9], None, 0.0).unwrap();
        let k = build_soljacic_matrix(&zero, 4.0, None).unwrap();
        assert!(k.a.max_abs_diff(&Matrix::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 2.0]
        ])) < 1e-12);

        let inst = crate::ising::random_instance(8, 0.5, &[1.0, -1.0], 3).unwrap();
        let alpha = default_shift(&inst);
        let k = build_soljacic_matrix(&inst, alpha, None).unwrap();
        let sq = k.a.matmul(&k.a);
        assert!(sq.max_abs_diff(k.shifted.as_ref().unwrap()) <= 1e-8);
        assert!(k.a.is_symmetric(1e-10));
    }

    #[test]
    fn soljacic_not_psd_reports_threshold() {
        let inst = crate::ising::random_instance(6, 0.7, &[1.0, -1.0], 8).unwrap();
        let lmin = inst.min_eigenvalue();
        match build_soljacic_matrix(&inst, -lmin - 0.5, None) {
            Err(IterError::NotPsd { min_eigenvalue, min_alpha }) => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-9);
                assert!((min_alpha + lmin).abs() < 1e-9);
            }
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn soljacic_rejects_noncommuting_m() {
        let inst = crate::ising::random_instance(3, 1.0, &[1.0, -1.0], 8).unwrap();
        let m = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]]);
        assert!(matches!(build_soljacic_matrix(&inst, 5.0, Some(&m)), Err(IterError::NotCommuting(_))));
    }

    #[test]
    fn soljacic_iterate_examples() {
        let zero = IsingInstance::from_dense("z", 2, vec![0.0; 4], None, 0.0).unwrap();
        let k = build_soljacic_matrix(&zero, 1.0, None).unwrap(); // K = I
        assert_eq!(soljacic_iterate(&k, &bits(&[1, 0]), 0.0, 0, 1).unwrap(), bits(&[1, 0]));

        let inst = crate::ising::random_instance(8, 0.5, &[1.0, -1.0], 4).unwrap();
        let k = build_soljacic_matrix(&inst, default_shift(&inst), None).unwrap();
        let start = bits(&[1, 0, 1, 1, 0, 0, 1, 0]);
        let a = soljacic_iterate(&k, &start, 0.0, 1, 50).unwrap();
        let b = soljacic_iterate(&k, &start, 0.0, 2, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binary_spin_maps() {
        assert_eq!(binary_to_spins(&bits(&[1, 0])).as_slice(), &[1, -1]);
        assert_eq!(binary_to_spins(&bits(&[1, 1, 1])).as_slice(), &[1, 1, 1]);
        let s = SpinConfig::new(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(binary_to_spins(&spins_to_binary(&s)), s);
        assert_eq!(BinaryState::new(vec![0, 2]), Err(IterError::BadBit(2, 1)));
    }

    #[test]
    fn noise_decay_reaches_zero() {
        let s = NoiseSchedule { sigma: 2.0, decay: true };
        assert_eq!(s.at(0, 11), 2.0);
        assert!((s.at(5, 11) - 1.0).abs() < 1e-15);
        assert_eq!(s.at(10, 11), 0.0);
    }
}
