use super::{CMatrix, CVector, Complex64, DensityOperator, DEFAULT_NORM_TOL};
use crate::error::{Error, Result};

/// Anything that carries a flat amplitude vector.
pub trait Ket {
    fn ket(&self) -> &CVector;
}

impl Ket for CVector {
    fn ket(&self) -> &CVector {
        self
    }
}

impl<K: Ket + ?Sized> Ket for &K {
    fn ket(&self) -> &CVector {
        (**self).ket()
    }
}

fn check_norm(amplitudes: &CVector, norm_tol: f64) -> Result<()> {
    let norm = amplitudes.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > norm_tol {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

fn renormalize(mut amplitudes: CVector) -> Result<CVector> {
    let norm = amplitudes.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NotNormalized { norm });
    }
    amplitudes.unscale_mut(norm);
    Ok(amplitudes)
}

/// Normalized pure state of a single system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        Self::with_tolerance(amplitudes, DEFAULT_NORM_TOL)
    }

    pub fn with_tolerance(amplitudes: CVector, norm_tol: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        check_norm(&amplitudes, norm_tol)?;
        Ok(StateVector { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm. Fails on the zero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(StateVector {
            amplitudes: renormalize(amplitudes)?,
        })
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    /// Computational basis state `|index⟩` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`. Panics on dimension mismatch.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Squared overlap `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

impl Ket for StateVector {
    fn ket(&self) -> &CVector {
        &self.amplitudes
    }
}

/// Normalized pure state on a composite system with labelled subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteState {
    amplitudes: CVector,
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl MultipartiteState {
    pub fn new(amplitudes: CVector, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        Self::with_tolerance(amplitudes, dims, labels, DEFAULT_NORM_TOL)
    }

    pub fn with_tolerance(
        amplitudes: CVector,
        dims: Vec<usize>,
        labels: Vec<String>,
        norm_tol: f64,
    ) -> Result<Self> {
        let state = Self::unchecked(amplitudes, dims, labels)?;
        check_norm(&state.amplitudes, norm_tol)?;
        Ok(state)
    }

    /// Rescales `amplitudes` to unit norm before validating the layout.
    pub fn normalized(amplitudes: CVector, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let mut state = Self::unchecked(amplitudes, dims, labels)?;
        state.amplitudes = renormalize(state.amplitudes)?;
        Ok(state)
    }

    /// Bipartite state on `A ⊗ B`.
    pub fn bipartite(amplitudes: CVector, d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(amplitudes, vec![d_a, d_b], state_labels(2))
    }

    /// Product state `f_1 ⊗ f_2 ⊗ …` with the given subsystem labels.
    pub fn product(factors: &[&StateVector], labels: &[&str]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if labels.len() != factors.len() {
            return Err(Error::DimensionMismatch {
                expected: factors.len(),
                found: labels.len(),
            });
        }
        let mut amplitudes = CVector::from_element(1, Complex64::new(1.0, 0.0));
        for f in factors {
            amplitudes = amplitudes.kronecker(f.amplitudes());
        }
        let dims = factors.iter().map(|f| f.dim()).collect();
        let labels = labels.iter().map(|l| l.to_string()).collect();
        // the Kronecker product of unit vectors is a unit vector; renormalize
        // only to absorb rounding in the inputs
        Self::normalized(amplitudes, dims, labels)
    }

    fn unchecked(amplitudes: CVector, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::ZeroDimension);
        }
        let total: usize = dims.iter().product();
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: amplitudes.len(),
            });
        }
        if labels.len() != dims.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels given for {} subsystems",
                labels.len(),
                dims.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate subsystem label `{l}`"
                )));
            }
        }
        Ok(MultipartiteState {
            amplitudes,
            dims,
            labels,
        })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn total_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn subsystem_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownSubsystem(label.to_string()))
    }

    /// `⟨self|other⟩` over the full composite space. Panics on size mismatch.
    pub fn inner(&self, other: &MultipartiteState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn fidelity(&self, other: &MultipartiteState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Forgets the tensor structure.
    pub fn to_state_vector(&self) -> StateVector {
        StateVector {
            amplitudes: self.amplitudes.clone(),
        }
    }
}

impl Ket for MultipartiteState {
    fn ket(&self) -> &CVector {
        &self.amplitudes
    }
}

/// Default subsystem labels `A`, `B`, `P`, then `S3`, `S4`, ….
pub fn state_labels(parts: usize) -> Vec<String> {
    const NAMES: [&str; 3] = ["A", "B", "P"];
    (0..parts)
        .map(|i| {
            NAMES
                .get(i)
                .map_or_else(|| format!("S{i}"), |s| s.to_string())
        })
        .collect()
}

/// `u ⊗ v` as a bipartite state labelled `(A, B)`.
pub fn tensor(u: &StateVector, v: &StateVector) -> Result<MultipartiteState> {
    MultipartiteState::product(&[u, v], &["A", "B"])
}

/// Reduced density operator of the subsystem named `keep`.
pub fn partial_trace(state: &MultipartiteState, keep: &str) -> Result<DensityOperator> {
    let k = state.subsystem_index(keep)?;
    let dims = state.dims();
    let pre: usize = dims[..k].iter().product();
    let mid = dims[k];
    let post: usize = dims[k + 1..].iter().product();
    let psi = state.amplitudes();

    let mut rho = CMatrix::zeros(mid, mid);
    for p in 0..pre {
        for q in 0..post {
            for i in 0..mid {
                let x = psi[(p * mid + i) * post + q];
                if x == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..mid {
                    rho[(i, j)] += x * psi[(p * mid + j) * post + q].conj();
                }
            }
        }
    }
    Ok(DensityOperator::from_matrix_unchecked(rho))
}

/// Schmidt decomposition `Σ_i √α_i |a_i⟩|b_i⟩` of a bipartite state.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// `√α_i`, non-increasing.
    pub coefficients: Vec<f64>,
    pub left_basis: Vec<StateVector>,
    pub right_basis: Vec<StateVector>,
}

impl SchmidtDecomposition {
    /// Squared coefficients `α_i`, i.e. the common spectrum of both marginals.
    pub fn alphas(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    pub fn reconstruct(&self) -> CVector {
        let d_a = self.left_basis[0].dim();
        let d_b = self.right_basis[0].dim();
        let mut out = CVector::zeros(d_a * d_b);
        for ((s, a), b) in self
            .coefficients
            .iter()
            .zip(&self.left_basis)
            .zip(&self.right_basis)
        {
            out += a.amplitudes().kronecker(b.amplitudes()) * Complex64::new(*s, 0.0);
        }
        out
    }
}

pub fn schmidt(state: &MultipartiteState) -> Result<SchmidtDecomposition> {
    let dims = state.dims();
    if dims.len() != 2 {
        return Err(Error::NotBipartite { parts: dims.len() });
    }
    let (d_a, d_b) = (dims[0], dims[1]);
    // row-major reshape: psi[a * d_b + b] -> m[(a, b)]
    let m = CMatrix::from_row_slice(d_a, d_b, state.amplitudes().as_slice());
    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut coefficients = Vec::with_capacity(order.len());
    let mut left_basis = Vec::with_capacity(order.len());
    let mut right_basis = Vec::with_capacity(order.len());
    for k in order {
        coefficients.push(svd.singular_values[k]);
        left_basis.push(StateVector::normalized(u.column(k).into_owned())?);
        right_basis.push(StateVector::normalized(v_t.row(k).transpose())?);
    }
    Ok(SchmidtDecomposition {
        coefficients,
        left_basis,
        right_basis,
    })
}
