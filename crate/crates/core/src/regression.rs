//! Least squares `min_w ‖Xw - y‖²` compiled to an Ising instance with
//! signed-digit weights `w_j = Σ_m s_{j,m} 2^m`.
//!
//! Spin `j·B + b` carries power `msb_power - b` of weight `j`. When the
//! instance has a nonzero field it is absorbed by an ancilla at index 0, and
//! every weight spin shifts up by one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{absorb_field, IsingError, IsingInstance, SpinConfig};
use crate::linalg::{cholesky_solve, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("weight {value} is not representable with {bits} digits at msb power {msb_power}")]
    NotRepresentable { value: f64, bits: usize, msb_power: i32 },
    #[error(transparent)]
    Ising(#[from] IsingError),
}

/// Diagonal regularization used when `XᵀX` is singular.
pub const TIKHONOV: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionProblem {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub bits: usize,
    pub msb_power: i32,
}

impl RegressionProblem {
    /// `msb_power` defaults to `bits - 1`, giving integer weights.
    pub fn new(x: Matrix, y: Vec<f64>, bits: usize) -> Result<Self, RegressionError> {
        let msb = bits as i32 - 1;
        Self::with_msb(x, y, bits, msb)
    }

    pub fn with_msb(x: Matrix, y: Vec<f64>, bits: usize, msb_power: i32) -> Result<Self, RegressionError> {
        if bits == 0 {
            return Err(RegressionError::Argument("bits must be >= 1".into()));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(RegressionError::Argument("design matrix must be non-empty".into()));
        }
        if y.len() != x.rows() {
            return Err(RegressionError::Dimension { what: "y", expected: x.rows(), got: y.len() });
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(RegressionError::Argument("data must be finite".into()));
        }
        Ok(Self { x, y, bits, msb_power })
    }

    /// Rows of `[x_1 .. x_d, y]`: the last column is the observation.
    pub fn from_rows(rows: &[Vec<f64>], bits: usize) -> Result<Self, RegressionError> {
        let width = rows.first().map_or(0, Vec::len);
        if width < 2 {
            return Err(RegressionError::Argument("each row needs at least one feature and an observation".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(RegressionError::Dimension { what: "row", expected: width, got: r.len() });
        }
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r[..width - 1].to_vec()).collect();
        let y = rows.iter().map(|r| r[width - 1]).collect();
        Self::new(Matrix::from_rows(&x), y, bits)
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// `‖Xw - y‖²`.
    pub fn residual(&self, w: &[f64]) -> f64 {
        let xw = self.x.mul_vec(w);
        xw.iter().zip(&self.y).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// `(XᵀX, -2Xᵀy, Σy²)`.
    pub fn quadratic_form(&self) -> (Matrix, Vec<f64>, f64) {
        let xt = self.x.transpose();
        let q = xt.matmul(&self.x);
        let lin = xt.mul_vec(&self.y).into_iter().map(|v| -2.0 * v).collect();
        let c = self.y.iter().map(|v| v * v).sum();
        (q, lin, c)
    }

    /// Values one weight can take: odd multiples of `2^(msb - B + 1)`.
    pub fn lattice(&self) -> Vec<f64> {
        let n = 1usize << self.bits;
        let mut vals: Vec<f64> = (0..n)
            .map(|idx| {
                (0..self.bits)
                    .map(|b| {
                        let s = if idx >> (self.bits - 1 - b) & 1 == 1 { 1.0 } else { -1.0 };
                        s * pow2(self.msb_power - b as i32)
                    })
                    .sum()
            })
            .collect();
        vals.sort_by(f64::total_cmp);
        vals
    }
}

fn pow2(m: i32) -> f64 {
    2f64.powi(m)
}

/// Spin layout of an encoded problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitEncoding {
    /// `(weight index, power)` per weight spin, in spin order.
    pub spins: Vec<(usize, i32)>,
    pub d: usize,
    pub ancilla: bool,
}

impl BitEncoding {
    fn new(d: usize, bits: usize, msb_power: i32, ancilla: bool) -> Self {
        let spins = (0..d).flat_map(|j| (0..bits).map(move |b| (j, msb_power - b as i32))).collect();
        Self { spins, d, ancilla }
    }

    pub fn num_spins(&self) -> usize {
        self.spins.len() + usize::from(self.ancilla)
    }
}

/// Builds the Ising instance whose energy (offset included) equals `‖Xw - y‖²`
/// for the decoded weights of every gauge-fixed configuration.
pub fn build_regression_instance(prob: &RegressionProblem) -> Result<(IsingInstance, BitEncoding), RegressionError> {
    let (q, lin, c) = prob.quadratic_form();
    let enc = BitEncoding::new(prob.d(), prob.bits, prob.msb_power, false);
    let n = enc.spins.len();
    let mut j = vec![0.0; n * n];
    let mut offset = c;
    let mut h = vec![0.0; n];
    for (a, &(ja, ma)) in enc.spins.iter().enumerate() {
        h[a] = lin[ja] * pow2(ma);
        for (b, &(jb, mb)) in enc.spins.iter().enumerate() {
            let v = q[(ja, jb)] * pow2(ma + mb);
            if a == b {
                offset += v;
            } else {
                j[a * n + b] = v;
            }
        }
    }
    let inst = IsingInstance::from_dense("regression", n, j, Some(h), offset)?;
    if inst.has_field() {
        Ok((absorb_field(&inst)?, BitEncoding { ancilla: true, ..enc }))
    } else {
        Ok((inst, enc))
    }
}

/// `w_j = Σ_m s_{j,m} 2^m`, after flipping all spins if the ancilla reads `-1`.
pub fn decode_weights(enc: &BitEncoding, s: &SpinConfig) -> Result<Vec<f64>, RegressionError> {
    if s.len() != enc.num_spins() {
        return Err(RegressionError::Dimension { what: "spins", expected: enc.num_spins(), got: s.len() });
    }
    let v = s.as_slice();
    let (gauge, body) = if enc.ancilla { (v[0] as f64, &v[1..]) } else { (1.0, v) };
    let mut w = vec![0.0; enc.d];
    for (&(j, m), &sv) in enc.spins.iter().zip(body) {
        w[j] += gauge * sv as f64 * pow2(m);
    }
    Ok(w)
}

/// Inverse of [`decode_weights`] with the ancilla at `+1`.
pub fn encode_weights(prob: &RegressionProblem, enc: &BitEncoding, w: &[f64]) -> Result<SpinConfig, RegressionError> {
    if w.len() != enc.d {
        return Err(RegressionError::Dimension { what: "weights", expected: enc.d, got: w.len() });
    }
    let mut out = Vec::with_capacity(enc.num_spins());
    if enc.ancilla {
        out.push(1);
    }
    for &wj in w {
        let mut rest = wj;
        for b in 0..prob.bits {
            let p = pow2(prob.msb_power - b as i32);
            let s: i8 = if rest >= 0.0 { 1 } else { -1 };
            rest -= s as f64 * p;
            out.push(s);
        }
        if rest.abs() > 1e-9 * wj.abs().max(1.0) {
            return Err(RegressionError::NotRepresentable { value: wj, bits: prob.bits, msb_power: prob.msb_power });
        }
    }
    Ok(SpinConfig::new(out)?)
}

/// Normal-equations solution `w*` and its residual `‖Xw* - y‖²`.
pub fn least_squares_oracle(prob: &RegressionProblem) -> (Vec<f64>, f64) {
    let (q, lin, _) = prob.quadratic_form();
    let rhs: Vec<f64> = lin.iter().map(|v| -0.5 * v).collect();
    let w = cholesky_solve(&q, &rhs).unwrap_or_else(|| {
        let mut reg = q.clone();
        let scale = (0..q.rows()).map(|i| q[(i, i)].abs()).fold(1.0, f64::max);
        for i in 0..q.rows() {
            reg[(i, i)] += TIKHONOV * scale;
        }
        cholesky_solve(&reg, &rhs).unwrap_or_else(|| vec![0.0; q.rows()])
    });
    let r = prob.residual(&w);
    (w, r)
}
