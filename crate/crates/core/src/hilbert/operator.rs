use nalgebra::SymmetricEigen;

use super::{identity_residual, max_abs_diff, CMatrix, CVector, Complex64, Ket, DEFAULT_OP_TOL};
use crate::error::{Error, Result};

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

fn ensure_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let scale = m.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let deviation = hermitian_deviation(m);
    if deviation > tol * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
/// Column `i` of the returned matrix is the eigenvector for eigenvalue `i`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m)
        .0
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Returns `(min_eigenvalue >= -tol, min_eigenvalue)` for a Hermitian matrix.
pub fn psd_check(m: &CMatrix, tol: f64) -> Result<(bool, f64)> {
    ensure_hermitian(m, DEFAULT_OP_TOL)?;
    let min = min_eigenvalue(m);
    Ok((min >= -tol, min))
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// `[-tol, 0)` are treated as zero.
pub fn hermitian_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    ensure_hermitian(m, DEFAULT_OP_TOL)?;
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&min) = values.first() {
        if min < -tol {
            return Err(Error::NegativeEigenvalue {
                min_eigenvalue: min,
            });
        }
    }
    let roots = CVector::from_iterator(
        values.len(),
        values
            .iter()
            .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * roots[j]
    });
    Ok(&scaled * vectors.adjoint())
}

/// Square complex matrix, typically a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
}

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(Error::ZeroDimension);
        }
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Operator { matrix })
    }

    /// Like [`Operator::new`] but rejects matrices with `|U†U − I| > tol`.
    pub fn unitary(matrix: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::new(matrix)?;
        let residual = op.unitarity_residual();
        if residual > tol {
            return Err(Error::NotUnitary { residual });
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// `max |(U†U − I)_ij|`
    pub fn unitarity_residual(&self) -> f64 {
        identity_residual(&(self.matrix.adjoint() * &self.matrix))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.matrix) <= tol
    }
}

/// Density operator of a (possibly reduced) state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity within `tol`.
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(Error::ZeroDimension);
        }
        ensure_hermitian(&matrix, tol)?;
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidArgument(format!(
                "density operator has trace {trace}"
            )));
        }
        let min = min_eigenvalue(&matrix);
        if min < -tol {
            return Err(Error::NegativeEigenvalue {
                min_eigenvalue: min,
            });
        }
        Ok(DensityOperator { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        DensityOperator { matrix }
    }

    /// `|ψ⟩⟨ψ|`
    pub fn pure<K: Ket>(state: &K) -> Self {
        let v = state.ket();
        DensityOperator {
            matrix: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            matrix: CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Eigenvalues in non-increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = hermitian_eigen(&self.matrix).0;
        v.reverse();
        v
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_deviation(&self, other: &DensityOperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.matrix) <= tol
    }
}

/// Matrix of pairwise inner products `G_ij = ⟨φ_i|φ_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    matrix: CMatrix,
}

impl GramMatrix {
    /// Wraps a Hermitian matrix; positivity is not checked here.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        ensure_hermitian(&matrix, DEFAULT_OP_TOL)?;
        Ok(GramMatrix { matrix })
    }

    pub fn identity(n: usize) -> Self {
        GramMatrix {
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn max_deviation(&self, other: &GramMatrix) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(self.matrix[(i, j)].norm());
                }
            }
        }
        best
    }
}

pub fn gram<K: Ket>(states: &[K]) -> Result<GramMatrix> {
    let n = states.len();
    if let Some(first) = states.first() {
        let dim = first.ket().len();
        for s in states {
            if s.ket().len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.ket().len(),
                });
            }
        }
    }
    let mut matrix = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g = states[i].ket().dotc(states[j].ket());
            matrix[(i, j)] = g;
            matrix[(j, i)] = g.conj();
        }
    }
    Ok(GramMatrix { matrix })
}

/// True iff the smallest Gram eigenvalue exceeds `rank_tol`.
pub fn linearly_independent<K: Ket>(states: &[K], rank_tol: f64) -> Result<bool> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("empty state list".into()));
    }
    Ok(gram(states)?.min_eigenvalue() > rank_tol)
}
