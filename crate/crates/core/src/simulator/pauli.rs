//! Pauli-transfer-matrix representation of states and channels.
//!
//! A k-qubit state is stored as the 4^k real coefficients `c_P = Tr(P rho)`
//! over Pauli strings P. Base-4 digit q of an index is the Pauli acting on
//! qubit q (0 = I, 1 = X, 2 = Y, 3 = Z). A channel is the matrix
//! `R_ij = Tr(P_i L(P_j)) / 2^k` acting on that vector.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Single-qubit Pauli matrix by index.
pub fn pauli(i: usize) -> CMatrix {
    let entries = match i {
        0 => [C1, C0, C0, C1],
        1 => [C0, C1, C1, C0],
        2 => [C0, -CI, CI, C0],
        3 => [C1, C0, C0, -C1],
        _ => panic!("Pauli index {i} out of range"),
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

/// Matrix of the k-qubit Pauli string with index `idx`. Computational basis
/// index bit q is qubit q, so qubit k-1 is the leftmost tensor factor.
pub fn pauli_string(k: usize, idx: usize) -> CMatrix {
    let mut m = CMatrix::identity(1, 1);
    for q in (0..k).rev() {
        m = m.kronecker(&pauli(idx / 4usize.pow(q as u32) % 4));
    }
    m
}

/// Dense PTM of a channel on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    pub n_qubits: usize,
    pub ptm: DMatrix<f64>,
}

impl Superoperator {
    pub fn identity(n_qubits: usize) -> Self {
        let d = 4usize.pow(n_qubits as u32);
        Superoperator {
            n_qubits,
            ptm: DMatrix::identity(d, d),
        }
    }

    /// Conjugation by a unitary `u` of dimension 2^k.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let dim = u.nrows();
        if dim != u.ncols() || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "unitary of shape {}x{}",
                dim,
                u.ncols()
            )));
        }
        let k = dim.trailing_zeros() as usize;
        let d = 4usize.pow(k as u32);
        let paulis: Vec<CMatrix> = (0..d).map(|i| pauli_string(k, i)).collect();
        let ud = u.adjoint();
        let mut ptm = DMatrix::zeros(d, d);
        for j in 0..d {
            let image = u * &paulis[j] * &ud;
            for i in 0..d {
                ptm[(i, j)] = (&paulis[i] * &image).trace().re / dim as f64;
            }
        }
        Ok(Superoperator { n_qubits: k, ptm })
    }

    /// Single-qubit depolarization at rate p: the Bloch vector shrinks by 1-p.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!(
                "depolarization rate {p} outside [0, 1]"
            )));
        }
        Ok(Superoperator {
            n_qubits: 1,
            ptm: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                1.0,
                1.0 - p,
                1.0 - p,
                1.0 - p,
            ])),
        })
    }

    /// `then` applied after `self`.
    pub fn then(&self, then: &Superoperator) -> Result<Self> {
        if self.n_qubits != then.n_qubits {
            return Err(Error::Dimension(format!(
                "{} vs {} qubits",
                self.n_qubits, then.n_qubits
            )));
        }
        Ok(Superoperator {
            n_qubits: self.n_qubits,
            ptm: &then.ptm * &self.ptm,
        })
    }

    /// `self` on the low qubits, `high` on the qubits above them.
    pub fn tensor(&self, high: &Superoperator) -> Self {
        Superoperator {
            n_qubits: self.n_qubits + high.n_qubits,
            ptm: high.ptm.kronecker(&self.ptm),
        }
    }

    /// Largest deviation of the identity row from `(1, 0, ..., 0)`.
    pub fn tp_residual(&self) -> f64 {
        (0..self.ptm.ncols())
            .map(|j| (self.ptm[(0, j)] - if j == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Choi matrix `sum_ab |a><b| (x) L(|a><b|)`.
    pub fn choi_matrix(&self) -> CMatrix {
        let k = self.n_qubits;
        let dim = 1usize << k;
        let d = self.ptm.nrows();
        let paulis: Vec<CMatrix> = (0..d).map(|i| pauli_string(k, i)).collect();
        let mut choi = CMatrix::zeros(dim * dim, dim * dim);
        for j in 0..d {
            let mut image = CMatrix::zeros(dim, dim);
            for (i, p) in paulis.iter().enumerate() {
                let r = self.ptm[(i, j)];
                if r != 0.0 {
                    image += p * Complex64::new(r, 0.0);
                }
            }
            choi += paulis[j].transpose().kronecker(&image);
        }
        choi / Complex64::new(dim as f64, 0.0)
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.choi_matrix())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn apply(&self, state: &[f64]) -> Vec<f64> {
        (&self.ptm * nalgebra::DVector::from_column_slice(state))
            .as_slice()
            .to_vec()
    }

    /// Distance to another channel, max absolute entry difference.
    pub fn distance(&self, other: &Superoperator) -> f64 {
        (&self.ptm - &other.ptm).abs().max()
    }
}

/// Apply a 4x4 row-major PTM to qubit `q` of an n-qubit state in place.
pub fn apply_1q(state: &mut [f64], q: usize, m: &[f64; 16]) {
    let stride = 4usize.pow(q as u32);
    let block = 4 * stride;
    for hi in (0..state.len()).step_by(block) {
        for base in hi..hi + stride {
            let v = [
                state[base],
                state[base + stride],
                state[base + 2 * stride],
                state[base + 3 * stride],
            ];
            for (i, row) in m.chunks_exact(4).enumerate() {
                state[base + i * stride] =
                    row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }
}

/// Apply a 16x16 row-major PTM to qubits `(q0, q1)` in place. Local index
/// `a + 4 b` has Pauli `a` on `q0` and `b` on `q1`.
pub fn apply_2q(state: &mut [f64], q0: usize, q1: usize, m: &[f64; 256]) {
    let s0 = 4usize.pow(q0 as u32);
    let s1 = 4usize.pow(q1 as u32);
    let offsets: [usize; 16] = std::array::from_fn(|l| (l % 4) * s0 + (l / 4) * s1);
    let mut v = [0.0; 16];
    for base in 0..state.len() {
        if !(base / s0).is_multiple_of(4) || !(base / s1).is_multiple_of(4) {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            v[l] = state[base + off];
        }
        for (i, row) in m.chunks_exact(16).enumerate() {
            state[base + offsets[i]] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
    }
}

pub fn to_array16(m: &DMatrix<f64>) -> [f64; 16] {
    std::array::from_fn(|k| m[(k / 4, k % 4)])
}

pub fn to_array256(m: &DMatrix<f64>) -> Box<[f64; 256]> {
    Box::new(std::array::from_fn(|k| m[(k / 16, k % 16)]))
}

/// Product state from per-qubit Bloch vectors.
pub fn product_state(bloch: &[[f64; 3]]) -> Vec<f64> {
    let n = bloch.len();
    let mut state = vec![1.0; 4usize.pow(n as u32)];
    for (idx, c) in state.iter_mut().enumerate() {
        let mut rest = idx;
        for r in bloch {
            let d = rest % 4;
            rest /= 4;
            if d > 0 {
                *c *= r[d - 1];
            }
        }
    }
    state
}

/// Diagonal `<s|rho|s>` of the density matrix over all 2^n computational
/// basis states, by a Walsh-Hadamard transform of the Z-type coefficients.
pub fn z_diagonal(state: &[f64], n: usize) -> Vec<f64> {
    let dim = 1usize << n;
    let mut d: Vec<f64> = (0..dim)
        .map(|mask| {
            let idx: usize = (0..n)
                .filter(|q| mask >> q & 1 == 1)
                .map(|q| 3 * 4usize.pow(q as u32))
                .sum();
            state[idx]
        })
        .collect();
    let mut h = 1;
    while h < dim {
        for i in (0..dim).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (d[j], d[j + h]);
                d[j] = a + b;
                d[j + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / dim as f64;
    d.iter_mut().for_each(|x| *x *= scale);
    d
}
