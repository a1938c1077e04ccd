//! Pfaffians of complex skew-symmetric matrices and fermionic Gaussian
//! state amplitudes `<x|psi> = N Pf(G|_x)`.

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::format::F64;
use crate::simulate::{SimError, StateVector};

/// Antisymmetry tolerance on construction.
pub const SKEW_TOL: f64 = 1e-12;

/// Largest mode count for brute-force normalization.
pub const MAX_NORMALIZE_MODES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfaffianError {
    #[error("matrix is not skew-symmetric at ({i}, {j})")]
    NotSkew { i: usize, j: usize },
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("entry ({i}, {j}) is not strictly upper triangular in a {dim}x{dim} matrix")]
    BadUpperEntry { i: usize, j: usize, dim: usize },
    #[error("bitstring has length {got}, matrix has dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{n} modes exceeds the enumeration limit of {MAX_NORMALIZE_MODES}")]
    TooLarge { n: usize },
    #[error("normalization sum {0:e} underflows")]
    DegenerateState(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl SkewMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    /// Row-major `dim x dim` entries. The diagonal is zeroed.
    pub fn from_dense(dim: usize, mut entries: Vec<Complex64>) -> Result<Self, PfaffianError> {
        if entries.len() != dim * dim {
            return Err(PfaffianError::Shape { expected: dim * dim, got: entries.len() });
        }
        for i in 0..dim {
            for j in i..dim {
                if (entries[i * dim + j] + entries[j * dim + i]).norm() > SKEW_TOL {
                    return Err(PfaffianError::NotSkew { i, j });
                }
            }
            entries[i * dim + i] = Complex64::new(0.0, 0.0);
        }
        Ok(Self { dim, entries })
    }

    /// Builds the matrix from strictly-upper entries `(i, j, value)`, `i < j`.
    pub fn from_upper(
        dim: usize,
        upper: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self, PfaffianError> {
        let mut m = Self::zeros(dim);
        for (i, j, v) in upper {
            if i >= j || j >= dim {
                return Err(PfaffianError::BadUpperEntry { i, j, dim });
            }
            m.set(i, j, v);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    /// Sets `A[i][j] = v` and `A[j][i] = -v`.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        assert_ne!(i, j, "diagonal of a skew matrix is fixed at zero");
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = -v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |i| ((i + 1)..self.dim).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(&SkewJson {
            dim: self.dim,
            upper: self
                .upper_entries()
                .filter(|(_, _, v)| *v != Complex64::new(0.0, 0.0))
                .map(|(i, j, v)| UpperEntry(i, j, F64(v.re), F64(v.im)))
                .collect(),
        })
    }

    pub fn from_json(s: &str) -> Result<Self, SkewJsonError> {
        let raw: SkewJson = serde_json::from_str(s)?;
        Ok(Self::from_upper(
            raw.dim,
            raw.upper.into_iter().map(|UpperEntry(i, j, re, im)| (i, j, Complex64::new(re.0, im.0))),
        )?)
    }
}

#[derive(Debug, Error)]
pub enum SkewJsonError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matrix(#[from] PfaffianError),
}

#[derive(Serialize, Deserialize)]
struct SkewJson {
    dim: usize,
    upper: Vec<UpperEntry>,
}

#[derive(Deserialize)]
struct UpperEntry(usize, usize, F64, F64);

impl Serialize for UpperEntry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        seq.serialize_element(&self.0)?;
        seq.serialize_element(&self.1)?;
        seq.serialize_element(&self.2)?;
        seq.serialize_element(&self.3)?;
        seq.end()
    }
}

/// Pfaffian by Parlett-Reid tridiagonalization with partial pivoting.
///
/// Odd dimension gives 0, the empty matrix gives 1.
pub fn pfaffian(a: &SkewMatrix) -> Complex64 {
    let n = a.dim;
    if n % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let mut m = a.entries.clone();
    let idx = |i: usize, j: usize| i * n + j;
    let mut pf = Complex64::new(1.0, 0.0);

    for k in (0..n.saturating_sub(1)).step_by(2) {
        // pivot on the largest entry of column k below the diagonal
        let kp = (k + 1..n)
            .max_by(|&i, &j| m[idx(i, k)].norm().total_cmp(&m[idx(j, k)].norm()))
            .expect("non-empty pivot range");
        if kp != k + 1 {
            for c in 0..n {
                m.swap(idx(k + 1, c), idx(kp, c));
            }
            for r in 0..n {
                m.swap(idx(r, k + 1), idx(r, kp));
            }
            pf = -pf;
        }
        let pivot = m[idx(k, k + 1)];
        if pivot == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<Complex64> = (k + 2..n).map(|j| m[idx(k, j)] / pivot).collect();
            let col: Vec<Complex64> = (k + 2..n).map(|i| m[idx(i, k + 1)]).collect();
            for (a_, i) in (k + 2..n).enumerate() {
                for (b_, j) in (k + 2..n).enumerate() {
                    m[idx(i, j)] += tau[a_] * col[b_] - col[a_] * tau[b_];
                }
            }
        }
    }
    pf
}

/// Principal submatrix on the positions where `x` has a 1, in index order.
pub fn restrict(g: &SkewMatrix, x: BitString) -> Result<SkewMatrix, PfaffianError> {
    if x.len() != g.dim {
        return Err(PfaffianError::LengthMismatch { expected: g.dim, got: x.len() });
    }
    let keep: Vec<usize> = (0..g.dim).filter(|&i| x.get(i) == 1).collect();
    let k = keep.len();
    let mut entries = Vec::with_capacity(k * k);
    for &i in &keep {
        for &j in &keep {
            entries.push(g.get(i, j));
        }
    }
    Ok(SkewMatrix { dim: k, entries })
}

/// `|psi> = N exp(sum G_ij c+_i c+_j) |0>` given by its generating matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    g: SkewMatrix,
    norm_constant: f64,
}

impl GaussianState {
    pub fn n(&self) -> usize {
        self.g.dim
    }

    pub fn generating_matrix(&self) -> &SkewMatrix {
        &self.g
    }

    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }

    /// Dense amplitude vector over all `2^n` occupations.
    pub fn to_state_vector(&self) -> Result<StateVector, SimError> {
        let amps = BitString::all(self.n())
            .map(|x| amplitude(self, x).expect("length matches"))
            .collect();
        StateVector::from_amplitudes(self.n(), amps)
    }
}

/// `N Pf(G|_x)` for even `|x|`, exactly 0 for odd `|x|`.
pub fn amplitude(psi: &GaussianState, x: BitString) -> Result<Complex64, PfaffianError> {
    if x.len() != psi.n() {
        return Err(PfaffianError::LengthMismatch { expected: psi.n(), got: x.len() });
    }
    if x.parity() == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(pfaffian(&restrict(&psi.g, x)?) * psi.norm_constant)
}

/// `N = (sum_{|x| even} |Pf(G|_x)|^2)^{-1/2}` by enumeration.
pub fn normalize(g: SkewMatrix) -> Result<GaussianState, PfaffianError> {
    let n = g.dim;
    if n > MAX_NORMALIZE_MODES {
        return Err(PfaffianError::TooLarge { n });
    }
    let total: f64 = BitString::all(n)
        .filter(|x| x.parity() == 0)
        .map(|x| pfaffian(&restrict(&g, x).expect("length matches")).norm_sqr())
        .sum();
    if !(total >= 1e-300) || !total.is_finite() {
        return Err(PfaffianError::DegenerateState(total));
    }
    Ok(GaussianState { g, norm_constant: total.sqrt().recip() })
}
