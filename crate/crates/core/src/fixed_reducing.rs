//! Families of bipartite states with index-independent marginals.
//!
//! Every member of a fixed reducing set has the form
//! `Σ_i √α_i |i⟩_A ⊗ V^(k)|i⟩_B`, where `V^(k)` leaves each eigenspace of the
//! common marginal invariant. The constructors here cover the flat spectrum
//! (arbitrary `V^(k)`), the non-degenerate spectrum (diagonal phases), the
//! general block-diagonal case, and two target families used by the maskers.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::{
    gram, partial_trace, CMatrix, CVector, Complex64, DensityOperator, GramMatrix,
    MultipartiteState, Operator, DEFAULT_NORM_TOL, DEFAULT_OP_TOL,
};

pub const DEFAULT_MARGINAL_TOL: f64 = 1e-9;

/// Marginal deviations of one state from the first state of its family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalDeviation {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedReducingReport {
    pub passed: bool,
    pub max_deviation: f64,
    /// One entry per state; the first is always zero.
    pub deviations: Vec<MarginalDeviation>,
}

/// Checks that every A- and B-marginal equals that of the first state,
/// entrywise within `tol`.
pub fn verify_fixed_reducing(
    states: &[MultipartiteState],
    tol: f64,
) -> Result<FixedReducingReport> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty state list".into()))?;
    if first.dims().len() != 2 {
        return Err(Error::NotBipartite {
            parts: first.dims().len(),
        });
    }
    let (label_a, label_b) = (&first.labels()[0], &first.labels()[1]);
    for s in states {
        if s.dims() != first.dims() {
            return Err(Error::DimensionMismatch {
                expected: first.total_dim(),
                found: s.total_dim(),
            });
        }
    }
    let ref_a = partial_trace(first, label_a)?;
    let ref_b = partial_trace(first, label_b)?;

    let mut deviations = Vec::with_capacity(states.len());
    for s in states {
        let a = partial_trace(s, &s.labels()[0])?.max_deviation(&ref_a);
        let b = partial_trace(s, &s.labels()[1])?.max_deviation(&ref_b);
        deviations.push(MarginalDeviation { a, b });
    }
    let max_deviation = deviations.iter().map(|d| d.a.max(d.b)).fold(0.0, f64::max);
    Ok(FixedReducingReport {
        passed: max_deviation <= tol,
        max_deviation,
        deviations,
    })
}

/// A verified fixed reducing family together with its common marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedReducingSet {
    states: Vec<MultipartiteState>,
    marginal_a: DensityOperator,
    marginal_b: DensityOperator,
    alphas: Vec<f64>,
}

impl FixedReducingSet {
    /// Wraps `states` after checking the fixed reducing property within `tol`.
    pub fn from_states(states: Vec<MultipartiteState>, tol: f64) -> Result<Self> {
        let report = verify_fixed_reducing(&states, tol)?;
        if !report.passed {
            return Err(Error::NotFixedReducing {
                max_deviation: report.max_deviation,
            });
        }
        let marginal_a = partial_trace(&states[0], &states[0].labels()[0])?;
        let marginal_b = partial_trace(&states[0], &states[0].labels()[1])?;
        let alphas = marginal_a
            .eigenvalues()
            .into_iter()
            .map(|x| x.max(0.0))
            .collect();
        Ok(FixedReducingSet {
            states,
            marginal_a,
            marginal_b,
            alphas,
        })
    }

    pub fn states(&self) -> &[MultipartiteState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<MultipartiteState> {
        self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `(d_A, d_B)`
    pub fn dims(&self) -> (usize, usize) {
        let d = self.states[0].dims();
        (d[0], d[1])
    }

    pub fn marginal_a(&self) -> &DensityOperator {
        &self.marginal_a
    }

    pub fn marginal_b(&self) -> &DensityOperator {
        &self.marginal_b
    }

    /// Common marginal spectrum, non-increasing.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn gram(&self) -> GramMatrix {
        gram(&self.states).expect("members share dimensions")
    }
}

fn check_unitaries(d: usize, unitaries: &[Operator]) -> Result<()> {
    if unitaries.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one unitary is required".into(),
        ));
    }
    for v in unitaries {
        if v.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.dim(),
            });
        }
        let residual = v.unitarity_residual();
        if residual > DEFAULT_OP_TOL {
            return Err(Error::NotUnitary { residual });
        }
    }
    Ok(())
}

fn check_spectrum(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::ZeroDimension);
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::InvalidSpectrum(format!(
            "negative or non-finite value {a}"
        )));
    }
    let sum: f64 = alphas.iter().sum();
    if (sum - 1.0).abs() > DEFAULT_NORM_TOL {
        return Err(Error::InvalidSpectrum(format!(
            "values sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// `|Ψ_k⟩ = Σ_i √α_i |i⟩_A ⊗ V^(k)|i⟩_B` for each `V^(k)`, with no check that
/// the `V^(k)` respect the eigenspaces of `diag(α)`.
///
/// The result is fixed reducing only if they do; see [`build_lemma1_general`].
pub fn lemma1_states(alphas: &[f64], unitaries: &[Operator]) -> Result<Vec<MultipartiteState>> {
    check_spectrum(alphas)?;
    let d = alphas.len();
    check_unitaries(d, unitaries)?;
    unitaries
        .iter()
        .map(|v| {
            let m = v.matrix();
            let amps = CVector::from_fn(d * d, |idx, _| {
                let (i, j) = (idx / d, idx % d);
                m[(j, i)] * alphas[i].sqrt()
            });
            MultipartiteState::normalized(amps, vec![d, d], vec!["A".into(), "B".into()])
        })
        .collect()
}

/// Flat spectrum: `|Ψ_k⟩ = d^{-1/2} Σ_i |i⟩ ⊗ V^(k)|i⟩` for arbitrary unitaries.
pub fn build_case1(d: usize, unitaries: &[Operator]) -> Result<FixedReducingSet> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let alphas = vec![1.0 / d as f64; d];
    FixedReducingSet::from_states(lemma1_states(&alphas, unitaries)?, DEFAULT_MARGINAL_TOL)
}

/// Non-degenerate spectrum: `|Ψ_k⟩ = Σ_i √α_i e^{iφ_{ki}} |i⟩|i⟩`.
pub fn build_case2(alphas: &[f64], phase_rows: &[Vec<f64>]) -> Result<FixedReducingSet> {
    check_spectrum(alphas)?;
    let d = alphas.len();
    if alphas.iter().any(|&a| a <= 0.0) {
        return Err(Error::InvalidSpectrum("all values must be positive".into()));
    }
    for i in 0..d {
        for j in 0..i {
            if (alphas[i] - alphas[j]).abs() <= DEFAULT_NORM_TOL {
                return Err(Error::InvalidSpectrum(format!(
                    "values {j} and {i} coincide; use build_lemma1_general for degenerate spectra"
                )));
            }
        }
    }
    let unitaries = phase_rows
        .iter()
        .map(|phases| {
            if phases.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: phases.len(),
                });
            }
            phase_unitary(phases)
        })
        .collect::<Result<Vec<_>>>()?;
    FixedReducingSet::from_states(lemma1_states(alphas, &unitaries)?, DEFAULT_MARGINAL_TOL)
}

/// General spectrum with multiplicities. Each `V^(k)` must be block diagonal
/// with respect to the eigenspaces of `diag(α)`: entries coupling unequal
/// `α_i`, `α_j` have to vanish within `op_tol`.
pub fn build_lemma1_general(alphas: &[f64], unitaries: &[Operator]) -> Result<FixedReducingSet> {
    check_spectrum(alphas)?;
    check_unitaries(alphas.len(), unitaries)?;
    for v in unitaries {
        let m = v.matrix();
        for (row, a_r) in alphas.iter().enumerate() {
            for (col, a_c) in alphas.iter().enumerate() {
                let magnitude = m[(row, col)].norm();
                if (a_r - a_c).abs() > DEFAULT_NORM_TOL && magnitude > DEFAULT_OP_TOL {
                    return Err(Error::BlockStructure {
                        row,
                        col,
                        magnitude,
                    });
                }
            }
        }
    }
    FixedReducingSet::from_states(lemma1_states(alphas, unitaries)?, DEFAULT_MARGINAL_TOL)
}

/// Assembles a block-diagonal operator from square blocks.
pub fn block_diagonal(blocks: &[CMatrix]) -> Result<Operator> {
    let d: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = CMatrix::zeros(d, d);
    let mut offset = 0;
    for b in blocks {
        if !b.is_square() {
            return Err(Error::DimensionMismatch {
                expected: b.nrows(),
                found: b.ncols(),
            });
        }
        m.view_mut((offset, offset), b.shape()).copy_from(b);
        offset += b.nrows();
    }
    Operator::new(m)
}

/// `diag(e^{iφ_1}, …, e^{iφ_d})`
pub fn phase_unitary(phases: &[f64]) -> Result<Operator> {
    let d = phases.len();
    Operator::new(CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, phases[i])
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Cyclic shift `|i⟩ ↦ |i + shift mod d⟩`.
pub fn cyclic_shift(d: usize, shift: usize) -> Operator {
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[((i + shift) % d, i)] = Complex64::new(1.0, 0.0);
    }
    Operator::new(m).expect("square")
}

/// `n` mutually orthogonal flat-spectrum targets with `V^(k)` the `(k−1)`-th
/// power of the cyclic shift on all `d` labels.
pub fn cyclic_targets(n: usize, d: usize) -> Result<FixedReducingSet> {
    if n == 0 || d == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > d {
        return Err(Error::TooManyStates { n, d });
    }
    let shifts: Vec<_> = (0..n).map(|k| cyclic_shift(d, k)).collect();
    build_case1(d, &shifts)
}

/// Phases `φ_i` with `(1/d) Σ_i e^{iφ_i} = c`.
///
/// Even `d`: `d/2` pairs `arg c ± arccos|c|`. Odd `d`: one phase `arg c` and
/// `(d−1)/2` pairs `arg c ± arccos((d|c| − 1)/(d − 1))`.
pub fn overlap_phases(d: usize, c: Complex64) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidArgument(
            "an overlap-matched pair needs dimension at least 2".into(),
        ));
    }
    let magnitude = c.norm();
    if !magnitude.is_finite() || magnitude > 1.0 + 1e-12 {
        return Err(Error::OverlapOutOfRange { magnitude });
    }
    let magnitude = magnitude.min(1.0);
    let base = if magnitude > 0.0 { c.arg() } else { 0.0 };
    let mut phases = Vec::with_capacity(d);
    let spread = if d.is_multiple_of(2) {
        magnitude.acos()
    } else {
        phases.push(base);
        ((d as f64 * magnitude - 1.0) / (d as f64 - 1.0))
            .clamp(-1.0, 1.0)
            .acos()
    };
    while phases.len() < d {
        phases.push(base + spread);
        phases.push(base - spread);
    }
    Ok(phases.into_iter().map(|p| p.rem_euclid(2.0 * PI)).collect())
}

/// Two flat-spectrum targets with `⟨Ψ_1|Ψ_2⟩ = c`: `V^(1) = I` and `V^(2)` a
/// diagonal phase unitary with normalized trace `c`.
pub fn targets_with_overlap(d: usize, c: Complex64) -> Result<FixedReducingSet> {
    let phases = overlap_phases(d, c)?;
    build_case1(d, &[Operator::identity(d), phase_unitary(&phases)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{identity_residual, max_abs_diff};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bipartite(d: usize, entries: &[(usize, usize, Complex64)]) -> MultipartiteState {
        let mut v = CVector::zeros(d * d);
        for &(a, b, x) in entries {
            v[a * d + b] = x;
        }
        MultipartiteState::bipartite(v, d, d).unwrap()
    }

    fn phi_plus() -> MultipartiteState {
        let h = c(FRAC_1_SQRT_2, 0.0);
        bipartite(2, &[(0, 0, h), (1, 1, h)])
    }

    fn psi_plus() -> MultipartiteState {
        let h = c(FRAC_1_SQRT_2, 0.0);
        bipartite(2, &[(0, 1, h), (1, 0, h)])
    }

    #[test]
    fn verifier_accepts_bell_pair() {
        let r = verify_fixed_reducing(&[phi_plus(), psi_plus()], 1e-9).unwrap();
        assert!(r.passed);
        assert!(r.max_deviation <= 1e-12);
        assert_eq!(r.deviations.len(), 2);
    }

    #[test]
    fn verifier_rejects_product_member() {
        let product = bipartite(2, &[(0, 0, c(1.0, 0.0))]);
        let r = verify_fixed_reducing(&[phi_plus(), product], 1e-9).unwrap();
        assert!(!r.passed);
        assert!((r.max_deviation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn verifier_rejects_mixed_dims() {
        let other = bipartite(3, &[(0, 0, c(1.0, 0.0))]);
        assert!(matches!(
            verify_fixed_reducing(&[phi_plus(), other], 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn case1_with_swap_gives_bell_pair() {
        let set = build_case1(2, &[Operator::identity(2), cyclic_shift(2, 1)]).unwrap();
        assert!(set.states()[0].fidelity(&phi_plus()) > 1.0 - 1e-14);
        assert!(set.states()[1].fidelity(&psi_plus()) > 1.0 - 1e-14);
        assert!(
            max_abs_diff(
                set.marginal_a().matrix(),
                DensityOperator::maximally_mixed(2).matrix()
            ) < 1e-14
        );
    }

    #[test]
    fn case1_d3_cyclic_marginals() {
        let set = build_case1(3, &[Operator::identity(3), cyclic_shift(3, 1)]).unwrap();
        let third = DensityOperator::maximally_mixed(3);
        for s in set.states() {
            assert!(partial_trace(s, "A").unwrap().max_deviation(&third) < 1e-14);
            assert!(partial_trace(s, "B").unwrap().max_deviation(&third) < 1e-14);
        }
    }

    #[test]
    fn case1_rejects_non_unitary() {
        let m = Operator::new(CMatrix::from_element(2, 2, c(1.0, 0.0))).unwrap();
        assert!(matches!(
            build_case1(2, &[m]),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn case2_marginals_and_overlaps() {
        let set = build_case2(&[0.7, 0.3], &[vec![0.0, 0.0], vec![0.0, PI]]).unwrap();
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(0.3, 0.0)]));
        assert!(max_abs_diff(set.marginal_a().matrix(), &diag) < 1e-14);
        assert!(max_abs_diff(set.marginal_b().matrix(), &diag) < 1e-14);
        // Σ α_i e^{i(φ_2i − φ_1i)} = 0.7 − 0.3
        assert!((set.gram().get(0, 1) - c(0.4, 0.0)).norm() < 1e-14);
        assert!((set.alphas()[0] - 0.7).abs() < 1e-14);

        let same = build_case2(&[0.7, 0.3], &[vec![0.1, 0.2], vec![0.1, 0.2]]).unwrap();
        assert!(same.states()[0].fidelity(&same.states()[1]) > 1.0 - 1e-14);
    }

    #[test]
    fn case2_phase_variants_verify() {
        let set = build_case2(&[0.7, 0.3], &[vec![0.0, PI / 4.0], vec![0.0, PI / 2.0]]).unwrap();
        let r = verify_fixed_reducing(set.states(), 1e-9).unwrap();
        assert!(r.passed && r.max_deviation < 1e-14);
    }

    #[test]
    fn case2_rejects_degenerate_or_nonpositive() {
        assert!(matches!(
            build_case2(&[0.5, 0.5], &[vec![0.0, 0.0]]),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            build_case2(&[1.0, 0.0], &[vec![0.0, 0.0]]),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            build_case2(&[0.6, 0.3], &[vec![0.0, 0.0]]),
            Err(Error::InvalidSpectrum(_))
        ));
    }

    #[test]
    fn general_with_degenerate_block() {
        let theta: f64 = 0.3;
        let block = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), 0.0),
                c(-theta.sin(), 0.0),
                c(theta.sin(), 0.0),
                c(theta.cos(), 0.0),
            ],
        );
        let v = block_diagonal(&[CMatrix::identity(1, 1), block]).unwrap();
        let set = build_lemma1_general(&[0.5, 0.25, 0.25], &[Operator::identity(3), v]).unwrap();
        let r = verify_fixed_reducing(set.states(), 1e-10).unwrap();
        assert!(r.passed);
        let expect = [0.5, 0.25, 0.25];
        for (a, e) in set.alphas().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn general_rejects_block_mixing() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let mix = CMatrix::from_row_slice(2, 2, &[h, h, h, -h]);
        let v = block_diagonal(&[mix, CMatrix::identity(1, 1)]).unwrap();
        assert!(matches!(
            build_lemma1_general(&[0.5, 0.25, 0.25], &[Operator::identity(3), v]),
            Err(Error::BlockStructure { .. })
        ));
    }

    #[test]
    fn cyclic_targets_are_orthonormal() {
        let set = cyclic_targets(2, 2).unwrap();
        assert!(set.states()[0].fidelity(&phi_plus()) > 1.0 - 1e-14);
        assert!(set.states()[1].fidelity(&psi_plus()) > 1.0 - 1e-14);
        for (n, d) in [(2, 3), (3, 3), (1, 4)] {
            let set = cyclic_targets(n, d).unwrap();
            assert!(identity_residual(set.gram().matrix()) < 1e-14);
            let mixed = DensityOperator::maximally_mixed(d);
            assert!(set.marginal_b().max_deviation(&mixed) < 1e-14);
        }
        assert_eq!(
            cyclic_targets(3, 2).unwrap_err(),
            Error::TooManyStates { n: 3, d: 2 }
        );
    }

    #[test]
    fn overlap_targets() {
        let phases = overlap_phases(2, c(0.5, 0.0)).unwrap();
        assert!((phases[0] - PI / 3.0).abs() < 1e-14);
        assert!((phases[1] - (2.0 * PI - PI / 3.0)).abs() < 1e-14);

        let set = targets_with_overlap(2, c(0.5, 0.0)).unwrap();
        assert!((set.gram().get(0, 1) - c(0.5, 0.0)).norm() < 1e-14);

        let zero = targets_with_overlap(2, c(0.0, 0.0)).unwrap();
        assert!(zero.gram().get(0, 1).norm() < 1e-14);

        let one = targets_with_overlap(3, c(1.0, 0.0)).unwrap();
        assert!(one.states()[0].fidelity(&one.states()[1]) > 1.0 - 1e-14);

        assert!(matches!(
            targets_with_overlap(2, c(0.9, 0.9)),
            Err(Error::OverlapOutOfRange { .. })
        ));
    }
}
