use super::{gram, hermitian_eigen, CMatrix, CVector, Complex64, Ket, Operator, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};

/// Extends the orthonormal columns of `frame` (`D × r`) to a `D × D` unitary.
///
/// The extra columns come from classical Gram–Schmidt with re-orthogonalization
/// over the computational basis, in index order.
pub fn complete_orthonormal_frame(frame: &CMatrix) -> CMatrix {
    let dim = frame.nrows();
    let mut columns: Vec<CVector> = frame.column_iter().map(|c| c.into_owned()).collect();
    // once a basis vector's residual falls below this it can only shrink further,
    // and some remaining candidate always has residual >= 1/sqrt(dim)
    const ACCEPT: f64 = 1e-3;
    for j in 0..dim {
        if columns.len() == dim {
            break;
        }
        let mut v = CVector::zeros(dim);
        v[j] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for q in &columns {
                let overlap = q.dotc(&v);
                v.axpy(-overlap, q, Complex64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if norm > ACCEPT {
            v.unscale_mut(norm);
            columns.push(v);
        }
    }
    debug_assert_eq!(columns.len(), dim);
    CMatrix::from_columns(&columns)
}

/// Unitary `U` with `U|input_i⟩ = |output_i⟩`, given equal Gram matrices.
///
/// See [`unitary_completion_with`]; uses the default rank cutoff.
pub fn unitary_completion<K: Ket>(inputs: &[K], outputs: &[K], gram_tol: f64) -> Result<Operator> {
    unitary_completion_with(inputs, outputs, gram_tol, DEFAULT_RANK_TOL)
}

/// Unitary `U` with `U|input_i⟩ = |output_i⟩`.
///
/// Both families are orthonormalized with the same mixing matrix `W Λ^{-1/2}`
/// built from the eigenvectors of the shared Gram matrix whose eigenvalues
/// exceed `rank_tol`. The input frame is mapped onto the output frame and the
/// two orthogonal complements are matched in computational-basis order.
pub fn unitary_completion_with<K: Ket>(
    inputs: &[K],
    outputs: &[K],
    gram_tol: f64,
    rank_tol: f64,
) -> Result<Operator> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            found: outputs.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("no states to map".into()));
    }
    let dim = inputs[0].ket().len();
    if let Some(bad) = outputs.iter().find(|o| o.ket().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.ket().len(),
        });
    }
    let g_in = gram(inputs)?;
    let g_out = gram(outputs)?;
    let max_deviation = g_in.max_deviation(&g_out);
    if max_deviation > gram_tol {
        return Err(Error::GramMismatch { max_deviation });
    }

    let (values, vectors) = hermitian_eigen(g_in.matrix());
    let kept: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > rank_tol)
        .collect();
    let n = inputs.len();
    let mixing = CMatrix::from_fn(n, kept.len(), |i, k| {
        vectors[(i, kept[k])] / values[kept[k]].sqrt()
    });

    let stack = |family: &[K]| {
        CMatrix::from_columns(&family.iter().map(|s| s.ket().clone()).collect::<Vec<_>>())
    };
    let in_frame = stack(inputs) * &mixing;
    let out_frame = stack(outputs) * &mixing;

    let in_basis = complete_orthonormal_frame(&in_frame);
    let out_basis = complete_orthonormal_frame(&out_frame);
    Operator::new(out_basis * in_basis.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{identity_residual, StateVector};

    #[test]
    fn identity_case() {
        let basis: Vec<_> = (0..3).map(|i| StateVector::basis(3, i).unwrap()).collect();
        let u = unitary_completion(&basis, &basis, 1e-10).unwrap();
        assert!(identity_residual(u.matrix()) < 1e-12);
    }

    #[test]
    fn swap_case() {
        let zero = StateVector::basis(3, 0).unwrap();
        let one = StateVector::basis(3, 1).unwrap();
        let u = unitary_completion(
            &[zero.clone(), one.clone()],
            &[one.clone(), zero.clone()],
            1e-10,
        )
        .unwrap();
        assert!(u.is_unitary(1e-12));
        assert!((u.apply(zero.amplitudes()) - one.amplitudes()).norm() < 1e-12);
        assert!((u.apply(one.amplitudes()) - zero.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn dependent_family() {
        let zero = StateVector::basis(2, 0).unwrap();
        let one = StateVector::basis(2, 1).unwrap();
        let u = unitary_completion(
            &[zero.clone(), zero.clone()],
            &[one.clone(), one.clone()],
            1e-10,
        )
        .unwrap();
        assert!(u.is_unitary(1e-12));
        assert!((u.apply(zero.amplitudes()) - one.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn mismatch_errors() {
        let zero = StateVector::basis(2, 0).unwrap();
        let one = StateVector::basis(2, 1).unwrap();
        assert!(matches!(
            unitary_completion(
                &[zero.clone(), one.clone()],
                &[zero.clone(), zero.clone()],
                1e-10
            ),
            Err(Error::GramMismatch { .. })
        ));
        let big = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            unitary_completion(&[zero], &[big], 1e-10),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
