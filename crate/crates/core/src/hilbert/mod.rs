//! Dense complex linear algebra for finite-dimensional pure states.
//!
//! States are stored as column vectors of [`Complex64`] amplitudes. A
//! composite state over subsystems with dimensions `(d_1, …, d_m)` uses the
//! Kronecker ordering, i.e. the first subsystem is the most significant index.

mod completion;
mod operator;
pub mod sampling;
mod state;

pub use completion::{complete_orthonormal_frame, unitary_completion, unitary_completion_with};
pub use operator::{
    gram, hermitian_eigen, hermitian_sqrt, linearly_independent, psd_check, DensityOperator,
    GramMatrix, Operator,
};
pub use state::{
    partial_trace, schmidt, state_labels, tensor, Ket, MultipartiteState, SchmidtDecomposition,
    StateVector,
};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub const DEFAULT_NORM_TOL: f64 = 1e-10;
pub const DEFAULT_OP_TOL: f64 = 1e-10;
pub const DEFAULT_RECON_TOL: f64 = 1e-9;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Numerical tolerances shared by the builders and verifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a state norm from 1.
    pub norm: f64,
    /// Entrywise tolerance for operator identities (unitarity, Hermiticity, PSD).
    pub op: f64,
    /// Tolerance for reconstructed states and mapped vectors.
    pub recon: f64,
    /// Eigenvalue cutoff separating the span of a family from its null space.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm: DEFAULT_NORM_TOL,
            op: DEFAULT_OP_TOL,
            recon: DEFAULT_RECON_TOL,
            rank: DEFAULT_RANK_TOL,
        }
    }
}

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entrywise modulus of `a - b`. Matrices must have equal shape.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus of `m - I`.
pub fn identity_residual(m: &CMatrix) -> f64 {
    let id = CMatrix::identity(m.nrows(), m.ncols());
    max_abs_diff(m, &id)
}
