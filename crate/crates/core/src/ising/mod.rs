//! Ising problem representation and the exhaustive oracles built on it.
//!
//! Energies use the full double sum over ordered pairs,
//! `E(s) = Σ_{i,j} J_ij s_i s_j + Σ_i h_i s_i + offset`, so every edge is counted
//! twice. Edge-based quantities (`edge_sum`, cut values) use `Σ_{i<j}`.

mod gset;

pub use gset::{parse_gset, parse_instance_json, to_gset, to_instance_json};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest instance the brute-force oracle will enumerate.
pub const BRUTE_FORCE_MAX_SPINS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coupling matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("instance must have at least one spin")]
    Empty,
    #[error("non-finite value in instance: {0}")]
    NonFinite(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("instance has no field to absorb")]
    NoField,
    #[error("brute force limited to {max} spins, instance has {n}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("spin entries must be -1 or +1, got {0} at index {1}")]
    BadSpin(i8, usize),
}

/// A field-optional Ising instance with a dense, symmetric, zero-diagonal coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    name: String,
    n: usize,
    couplings: Vec<f64>,
    field: Option<Vec<f64>>,
    offset: f64,
}

impl IsingInstance {
    /// Builds an instance from a dense row-major `n×n` matrix.
    ///
    /// The matrix must be symmetric. Diagonal entries contribute `J_ii s_i² = J_ii`
    /// to every energy, so they are moved into the offset and the stored diagonal is zero.
    pub fn from_dense(
        name: impl Into<String>,
        n: usize,
        mut couplings: Vec<f64>,
        field: Option<Vec<f64>>,
        offset: f64,
    ) -> Result<Self, IsingError> {
        if n == 0 {
            return Err(IsingError::Empty);
        }
        if couplings.len() != n * n {
            return Err(IsingError::Dimension { expected: n * n, got: couplings.len() });
        }
        if let Some(h) = &field {
            if h.len() != n {
                return Err(IsingError::Dimension { expected: n, got: h.len() });
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(IsingError::NonFinite("field".into()));
            }
        }
        if !offset.is_finite() {
            return Err(IsingError::NonFinite("offset".into()));
        }
        let mut offset = offset;
        for i in 0..n {
            for j in 0..n {
                let a = couplings[i * n + j];
                if !a.is_finite() {
                    return Err(IsingError::NonFinite(format!("J[{i}][{j}]")));
                }
                if j > i {
                    let b = couplings[j * n + i];
                    if a != b {
                        return Err(IsingError::Asymmetric { i, j, a, b });
                    }
                }
            }
            offset += couplings[i * n + i];
            couplings[i * n + i] = 0.0;
        }
        Ok(Self { name: name.into(), n, couplings, field, offset })
    }

    /// Builds an instance from an edge list with 0-based endpoints. Each pair may
    /// appear once; the matrix is symmetrized automatically.
    pub fn from_edges(
        name: impl Into<String>,
        n: usize,
        edges: &[(usize, usize, f64)],
        field: Option<Vec<f64>>,
        offset: f64,
    ) -> Result<Self, IsingError> {
        if n == 0 {
            return Err(IsingError::Empty);
        }
        let mut couplings = vec![0.0; n * n];
        let mut seen = vec![false; n * n];
        for (k, &(i, j, w)) in edges.iter().enumerate() {
            if i >= n || j >= n {
                return Err(IsingError::Argument(format!("edge {k} ({i}, {j}) out of range for n={n}")));
            }
            if i == j {
                return Err(IsingError::Argument(format!("edge {k} is a self-loop on {i}")));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if seen[a * n + b] {
                return Err(IsingError::Argument(format!("duplicate edge ({a}, {b})")));
            }
            seen[a * n + b] = true;
            couplings[a * n + b] = w;
            couplings[b * n + a] = w;
        }
        Self::from_dense(name, n, couplings, field, offset)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    /// Row `i` of the coupling matrix.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn field(&self) -> Option<&[f64]> {
        self.field.as_deref()
    }

    /// True when a field is present with at least one nonzero entry.
    pub fn has_field(&self) -> bool {
        self.field.as_ref().is_some_and(|h| h.iter().any(|&v| v != 0.0))
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Nonzero couplings as `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.couplings[i * n + j];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// `W = Σ_{i<j} J_ij`.
    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|e| e.2).sum()
    }

    /// Writes `J·x` into `out`.
    pub fn couple_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn couple(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.couple_into(x, &mut out);
        out
    }

    /// The same instance with every coupling negated (field and offset untouched).
    pub fn negated_couplings(&self) -> Self {
        Self {
            name: self.name.clone(),
            n: self.n,
            couplings: self.couplings.iter().map(|&v| if v == 0.0 { 0.0 } else { -v }).collect(),
            field: self.field.clone(),
            offset: self.offset,
        }
    }

    /// Smallest eigenvalue of `J`.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = crate::linalg::jacobi_eigen(&crate::linalg::Matrix::from_row_major(
            self.n,
            self.n,
            self.couplings.clone(),
        ));
        eig.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A configuration of ±1 spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self, IsingError> {
        if let Some((i, &v)) = spins.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(IsingError::BadSpin(v, i));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Spin `i` is `+1` when bit `n-1-i` of `index` is set, so the numeric order
    /// of `index` is the lexicographic order of configurations with `-1 < +1`.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| if index >> (n - 1 - i) & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = IsingError;
    fn try_from(v: Vec<i8>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(s: SpinConfig) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Full double-sum energy, field and offset included.
    pub energy: f64,
    /// `Σ_{i<j} J_ij s_i s_j`.
    pub edge_sum: f64,
    /// `(W - edge_sum) / 2`; the Max-Cut value when the instance is field-free.
    pub cut: f64,
    pub offset_included: bool,
}

pub fn energy(inst: &IsingInstance, s: &SpinConfig) -> Result<EnergyReport, IsingError> {
    let n = inst.n();
    if s.len() != n {
        return Err(IsingError::Dimension { expected: n, got: s.len() });
    }
    let sp = s.as_slice();
    let mut edge_sum = 0.0;
    let mut weight = 0.0;
    for i in 0..n {
        let row = inst.row(i);
        let si = sp[i] as f64;
        for j in (i + 1)..n {
            let w = row[j];
            if w != 0.0 {
                weight += w;
                edge_sum += w * si * sp[j] as f64;
            }
        }
    }
    let field_term = inst
        .field()
        .map(|h| h.iter().zip(sp).map(|(&hi, &si)| hi * si as f64).sum::<f64>())
        .unwrap_or(0.0);
    Ok(EnergyReport {
        energy: 2.0 * edge_sum + field_term + inst.offset(),
        edge_sum,
        cut: (weight - edge_sum) / 2.0,
        offset_included: true,
    })
}

/// Max-Cut value `Σ_{i<j} J_ij (1 - s_i s_j) / 2` of a field-free instance.
pub fn cut_value(inst: &IsingInstance, s: &SpinConfig) -> Result<f64, IsingError> {
    if inst.has_field() {
        return Err(IsingError::Unsupported("cut value of an instance with a field"));
    }
    let n = inst.n();
    if s.len() != n {
        return Err(IsingError::Dimension { expected: n, got: s.len() });
    }
    let sp = s.as_slice();
    let mut cut = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = inst.coupling(i, j);
            if w != 0.0 && sp[i] != sp[j] {
                cut += w;
            }
        }
    }
    Ok(cut)
}

/// Replaces the linear field with an ancilla spin at index 0 coupled by `h_i / 2`.
///
/// For every configuration with the ancilla at `+1` the new energy equals the old
/// one; the result is field-free and hence invariant under a global flip.
pub fn absorb_field(inst: &IsingInstance) -> Result<IsingInstance, IsingError> {
    if !inst.has_field() {
        return Err(IsingError::NoField);
    }
    let h = inst.field().expect("checked above");
    let n = inst.n();
    let m = n + 1;
    let mut couplings = vec![0.0; m * m];
    for i in 0..n {
        couplings[i + 1] = h[i] / 2.0;
        couplings[(i + 1) * m] = h[i] / 2.0;
        for j in 0..n {
            couplings[(i + 1) * m + j + 1] = inst.coupling(i, j);
        }
    }
    IsingInstance::from_dense(format!("{}+ancilla", inst.name()), m, couplings, None, inst.offset())
}

/// Exhaustive ground-state search.
///
/// Walks all `2^n` configurations in Gray-code order with incremental local
/// fields. Ties (within a relative `1e-12` of the energy scale) go to the
/// lexicographically smallest configuration with `-1 < +1`.
pub fn brute_force_ground(inst: &IsingInstance) -> Result<(SpinConfig, f64), IsingError> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_SPINS {
        return Err(IsingError::TooLarge { n, max: BRUTE_FORCE_MAX_SPINS });
    }
    let scale: f64 = inst.couplings().iter().map(|v| v.abs()).sum::<f64>()
        + inst.field().map(|h| h.iter().map(|v| v.abs()).sum()).unwrap_or(0.0)
        + 1.0;
    let tie_tol = 1e-12 * scale;
    let h = inst.field().map(|h| h.to_vec()).unwrap_or_else(|| vec![0.0; n]);

    // start at index 0: all spins -1
    let mut s = vec![-1.0_f64; n];
    let mut local: Vec<f64> = inst.couple(&s);
    let start = energy(inst, &SpinConfig::from_index(n, 0))?.energy;
    let mut current = start;
    let mut index: u64 = 0;
    let mut best = (start, 0u64);

    let total: u64 = 1u64 << n;
    for k in 1..total {
        // Gray code g(k) = k ^ (k >> 1) differs from g(k-1) in bit trailing_zeros(k)
        let bit = k.trailing_zeros() as usize;
        let i = n - 1 - bit;
        let si = s[i];
        current += -4.0 * si * local[i] - 2.0 * h[i] * si;
        s[i] = -si;
        let delta = -2.0 * si;
        let row = inst.row(i);
        for (l, &w) in local.iter_mut().zip(row) {
            *l += w * delta;
        }
        index ^= 1u64 << bit;
        if current < best.0 - tie_tol || ((current - best.0).abs() <= tie_tol && index < best.1) {
            best = (current, index);
        }
    }
    let config = SpinConfig::from_index(n, best.1);
    let e = energy(inst, &config)?.energy;
    Ok((config, e))
}

/// Rounds real amplitudes by sign; exact zero (of either sign) maps to `+1`.
pub fn round_to_spins(x: &[f64]) -> SpinConfig {
    SpinConfig(x.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
}

/// Rounds complex amplitudes by the sign of the real part.
pub fn round_complex_to_spins(e: &[Complex64]) -> SpinConfig {
    SpinConfig(e.iter().map(|v| if v.re < 0.0 { -1 } else { 1 }).collect())
}

/// Rounds oscillator phases by the sign of `cos φ`.
pub fn round_phases_to_spins(phi: &[f64]) -> SpinConfig {
    SpinConfig(phi.iter().map(|&p| if p.cos() < 0.0 { -1 } else { 1 }).collect())
}

/// Random sparse instance: every unordered pair is independently nonzero with
/// probability `density`, its weight drawn uniformly from `weights`.
pub fn random_instance(
    n: usize,
    density: f64,
    weights: &[f64],
    seed: u64,
) -> Result<IsingInstance, IsingError> {
    if weights.is_empty() {
        return Err(IsingError::Argument("weight set is empty".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(IsingError::Argument(format!("density {density} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut couplings = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                let w = weights[rng.random_range(0..weights.len())];
                couplings[i * n + j] = w;
                couplings[j * n + i] = w;
            }
        }
    }
    IsingInstance::from_dense(format!("random-n{n}-d{density}-s{seed}"), n, couplings, None, 0.0)
}
