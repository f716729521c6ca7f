//! Symmetric matrix primitives.
//!
//! Square roots and inverse square roots use the spectral decomposition, so
//! the root of a positive semi-definite matrix is the unique symmetric PSD
//! root. Cholesky factors are only used where any factor will do (sampling).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues in `(-TOL_PSD * lambda_max, 0]` are treated as zero.
pub const TOL_PSD: f64 = 1e-12;

/// Relative tolerance for accepting a stored matrix as symmetric.
const TOL_SYMMETRY: f64 = 1e-10;

/// Dense symmetric matrix. Entries are exactly symmetric as stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Accepts `m` if it is square, finite and symmetric up to a relative
    /// `1e-10`; the stored matrix is the exact symmetrization `(m + m')/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let mut max_asym: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_asym > TOL_SYMMETRY * scale {
            return Err(Error::NotSymmetric { max_asym });
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// Max-abs norm.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// `D * self * D` for a diagonal `D`.
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        let n = self.dim();
        Self(DMatrix::from_fn(n, n, |i, j| d[i] * self.0[(i, j)] * d[j]))
    }

    /// Principal sub-matrix on `indices` (in the given order).
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        Self(DMatrix::from_fn(k, k, |a, b| {
            self.0[(indices[a], indices[b])]
        }))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Fails with `NotPsd` if an eigenvalue falls below `-TOL_PSD * lambda_max`.
    pub fn check_psd(&self) -> Result<()> {
        Spectral::of(self).map(|_| ())
    }

    /// Lower Cholesky factor `L` with `L L' = self`.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        match self.0.clone().cholesky() {
            Some(c) => Ok(c.l()),
            None => {
                let ev = self.eigenvalues();
                Err(Error::Singular {
                    min_eig: ev[0],
                    max_eig: *ev.last().unwrap_or(&0.0),
                })
            }
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Validated eigendecomposition with near-zero negatives clipped.
struct Spectral {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    min: f64,
    max: f64,
}

impl Spectral {
    fn of(m: &SymMatrix) -> Result<Self> {
        let eig = SymmetricEigen::new(m.0.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let floor = -TOL_PSD * max.max(0.0);
        if min < floor {
            return Err(Error::NotPsd {
                min_eig: min,
                max_eig: max,
            });
        }
        let values = eig.eigenvalues.map(|v| v.max(0.0));
        Ok(Self {
            values,
            vectors: eig.eigenvectors,
            min,
            max,
        })
    }

    fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = DMatrix::from_diagonal(&self.values.map(f));
        SymMatrix::symmetrized(&self.vectors * d * self.vectors.transpose())
    }
}

/// Symmetric PSD square root `S` with `S * S = m`.
pub fn sym_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(Spectral::of(m)?.apply(f64::sqrt))
}

fn positive_definite(m: &SymMatrix) -> Result<Spectral> {
    let sp = Spectral::of(m)?;
    if sp.min <= TOL_PSD * sp.max || sp.max <= 0.0 {
        return Err(Error::Singular {
            min_eig: sp.min,
            max_eig: sp.max,
        });
    }
    Ok(sp)
}

/// Symmetric inverse square root `S` with `S * m * S = I`.
pub fn sym_inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(positive_definite(m)?.apply(|v| 1.0 / v.sqrt()))
}

pub fn sym_inverse(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(positive_definite(m)?.apply(|v| 1.0 / v))
}

/// Correlation matrix `D^{-1/2} m D^{-1/2}`.
pub fn correlation(m: &SymMatrix) -> Result<SymMatrix> {
    let mut inv_sd = Vec::with_capacity(m.dim());
    for (index, v) in m.diagonal().into_iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::ZeroVariance { index });
        }
        inv_sd.push(1.0 / v.sqrt());
    }
    let mut r = m.congruence_diag(&inv_sd).into_inner();
    for i in 0..r.nrows() {
        r[(i, i)] = 1.0;
        for j in 0..r.ncols() {
            if i != j {
                r[(i, j)] = r[(i, j)].clamp(-1.0, 1.0);
            }
        }
    }
    Ok(SymMatrix(r))
}
