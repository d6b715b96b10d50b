//! Haar-random states and unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, CVector, Complex64, Operator, StateVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    assert!(dim > 0, "dimension must be positive");
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    StateVector::normalized(v).expect("gaussian vector is nonzero")
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    assert!(dim > 0, "dimension must be positive");
    let z = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for x in q.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    Operator::new(q).expect("square")
}

/// `n` orthonormal vectors in dimension `dim`, `n <= dim`.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> Vec<StateVector> {
    assert!(
        n <= dim,
        "cannot fit {n} orthonormal vectors in dimension {dim}"
    );
    let u = random_unitary(rng, dim);
    (0..n)
        .map(|j| StateVector::normalized(u.matrix().column(j).into_owned()).expect("unit column"))
        .collect()
}

/// `n` generic (almost surely independent) random states.
pub fn random_states<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> Vec<StateVector> {
    (0..n).map(|_| random_state(rng, dim)).collect()
}
