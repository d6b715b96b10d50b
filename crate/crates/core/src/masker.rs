//! Deterministic and post-selected (probabilistic) maskers.
//!
//! A deterministic masker is a unitary on `A ⊗ B` with
//! `U |a_k⟩|b⟩ = |Ψ_k⟩` for a fixed reducing family `{|Ψ_k⟩}`.
//!
//! A probabilistic masker acts on `A ⊗ B ⊗ P`, where the probe `P` has
//! dimension `n + 1` with orthonormal basis `|P_0⟩, |P^(1)⟩, …, |P^(n)⟩`:
//!
//! ```text
//! U |a_i⟩|b⟩|P_0⟩ = √γ_i e^{iθ_i} |Ψ_i⟩|P_0⟩ + √(1 − γ_i) |Φ^(i)⟩
//! ```
//!
//! Every success branch is attached to `|P_0⟩` (up to the optional probe phase
//! `θ_i`) and every failure branch `|Φ^(i)⟩` lives on `|0⟩_A|0⟩_B ⊗
//! span{|P^(j)⟩}`. Projecting the probe onto `|P_0⟩` succeeds with
//! probability `γ_i` and leaves `A ⊗ B` in `|Ψ_i⟩`.

use crate::error::{Error, Result};
use crate::fixed_reducing::{cyclic_targets, FixedReducingSet};
use crate::hilbert::{
    gram, hermitian_sqrt, identity_residual, max_abs_diff, partial_trace, psd_check,
    unitary_completion, CMatrix, CVector, Complex64, DensityOperator, GramMatrix,
    MultipartiteState, Operator, StateVector, Tolerances,
};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MaskerOptions {
    /// Ancilla `|b⟩_B` as a computational basis index (zero-based).
    pub ancilla_index: usize,
    /// Probe phases `θ_i` giving success states `|P_i⟩ = e^{iθ_i}|P_0⟩`.
    /// `None` means all zero. Ignored by the deterministic builder.
    pub probe_phases: Option<Vec<f64>>,
    pub tolerances: Tolerances,
}

/// Common interface of both masker kinds.
pub trait Masker {
    fn inputs(&self) -> &[StateVector];
    fn ancilla(&self) -> &StateVector;
    fn targets(&self) -> &FixedReducingSet;
    fn unitary(&self) -> &Operator;
    /// Probe dimension, `None` for maskers without a probe.
    fn probe_dim(&self) -> Option<usize>;
    /// Success probability the construction promises for input `k`.
    fn expected_success(&self, k: usize) -> f64;

    fn len(&self) -> usize {
        self.inputs().len()
    }

    fn is_empty(&self) -> bool {
        self.inputs().is_empty()
    }

    /// `|a_k⟩|b⟩` (then `⊗ |P_0⟩` when a probe is present) as a flat vector.
    fn prepared_input(&self, k: usize) -> Result<CVector> {
        let a = self.inputs().get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.len(),
        })?;
        let mut v = a.amplitudes().kronecker(self.ancilla().amplitudes());
        if let Some(dp) = self.probe_dim() {
            v = v.kronecker(StateVector::basis(dp, 0)?.amplitudes());
        }
        Ok(v)
    }
}

/// Result of running a masker on one input and post-selecting.
#[derive(Debug, Clone)]
pub struct MaskingOutcome {
    pub success_probability: f64,
    pub post_selected_state: MultipartiteState,
    pub fidelity_to_target: f64,
    pub marginal_a: DensityOperator,
    pub marginal_b: DensityOperator,
}

/// Applies the masker to input `k`, projects the probe (if any) onto `|P_0⟩`,
/// and renormalizes the surviving `A ⊗ B` branch.
pub fn simulate<M: Masker + ?Sized>(masker: &M, k: usize) -> Result<MaskingOutcome> {
    let input = masker.prepared_input(k)?;
    let out = masker.unitary().apply(&input);
    let (d_a, d_b) = masker.targets().dims();
    let branch = match masker.probe_dim() {
        Some(dp) => CVector::from_fn(d_a * d_b, |x, _| out[x * dp]),
        None => out,
    };
    let success_probability = branch.norm_squared();
    if success_probability.is_nan() || success_probability <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "post-selection on input {k} never succeeds"
        )));
    }
    let post_selected_state =
        MultipartiteState::normalized(branch, vec![d_a, d_b], vec!["A".into(), "B".into()])?;
    let fidelity_to_target = post_selected_state.fidelity(&masker.targets().states()[k]);
    let marginal_a = partial_trace(&post_selected_state, "A")?;
    let marginal_b = partial_trace(&post_selected_state, "B")?;
    Ok(MaskingOutcome {
        success_probability,
        post_selected_state,
        fidelity_to_target,
        marginal_a,
        marginal_b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingReport {
    pub passed: bool,
    pub unitarity_residual: f64,
    pub success_probabilities: Vec<f64>,
    pub expected_success: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Largest entrywise deviation of any post-selected marginal (A or B)
    /// from the marginal of input 0.
    pub max_marginal_deviation: f64,
    pub failures: Vec<String>,
}

/// Simulates every input and checks unitarity, success probabilities,
/// target fidelities and index independence of the marginals within `tol`.
pub fn verify_masking<M: Masker + ?Sized>(masker: &M, tol: f64) -> MaskingReport {
    let unitarity_residual = masker.unitary().unitarity_residual();
    let mut failures = Vec::new();
    if unitarity_residual > tol {
        failures.push(format!(
            "unitarity residual {unitarity_residual:e} exceeds {tol:e}"
        ));
    }
    let n = masker.len();
    let mut success_probabilities = Vec::with_capacity(n);
    let mut expected_success = Vec::with_capacity(n);
    let mut fidelities = Vec::with_capacity(n);
    let mut reference: Option<(DensityOperator, DensityOperator)> = None;
    let mut max_marginal_deviation = 0.0f64;

    for k in 0..n {
        let expected = masker.expected_success(k);
        expected_success.push(expected);
        let outcome = match simulate(masker, k) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("input {k}: {e}"));
                success_probabilities.push(0.0);
                fidelities.push(0.0);
                continue;
            }
        };
        if (outcome.success_probability - expected).abs() > tol {
            failures.push(format!(
                "input {k}: success probability {} differs from {expected}",
                outcome.success_probability
            ));
        }
        if outcome.fidelity_to_target < 1.0 - tol {
            failures.push(format!(
                "input {k}: target fidelity {} below 1 - {tol:e}",
                outcome.fidelity_to_target
            ));
        }
        match &reference {
            None => reference = Some((outcome.marginal_a.clone(), outcome.marginal_b.clone())),
            Some((ra, rb)) => {
                let dev = outcome
                    .marginal_a
                    .max_deviation(ra)
                    .max(outcome.marginal_b.max_deviation(rb));
                max_marginal_deviation = max_marginal_deviation.max(dev);
            }
        }
        success_probabilities.push(outcome.success_probability);
        fidelities.push(outcome.fidelity_to_target);
    }
    if max_marginal_deviation > tol {
        failures.push(format!(
            "marginals depend on the input index (deviation {max_marginal_deviation:e})"
        ));
    }
    MaskingReport {
        passed: failures.is_empty(),
        unitarity_residual,
        success_probabilities,
        expected_success,
        fidelities,
        max_marginal_deviation,
        failures,
    }
}

fn check_targets_shape(n: usize, d_a: usize, targets: &FixedReducingSet) -> Result<()> {
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: targets.len(),
        });
    }
    if targets.dims().0 != d_a {
        return Err(Error::DimensionMismatch {
            expected: d_a,
            found: targets.dims().0,
        });
    }
    Ok(())
}

fn input_dim(inputs: &[StateVector]) -> Result<usize> {
    let d = inputs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no input states".into()))?
        .dim();
    if let Some(bad) = inputs.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct DeterministicMasker {
    inputs: Vec<StateVector>,
    ancilla: StateVector,
    targets: FixedReducingSet,
    unitary: Operator,
}

/// Unitary masker for an orthonormal family `{|a_k⟩}` in dimension `d`.
///
/// Targets default to [`cyclic_targets`]`(n, d)`; explicit targets must have
/// the same Gram matrix as the inputs.
pub fn build_deterministic(
    inputs: &[StateVector],
    d: usize,
    targets: Option<FixedReducingSet>,
    options: &MaskerOptions,
) -> Result<DeterministicMasker> {
    let tol = options.tolerances;
    let d_in = input_dim(inputs)?;
    if d_in != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: d_in,
        });
    }
    let n = inputs.len();
    if n > d {
        return Err(Error::TooManyStates { n, d });
    }
    let a = gram(inputs)?;
    if identity_residual(a.matrix()) > tol.op {
        return Err(Error::NotOrthonormal {
            max_offdiag: a.max_off_diagonal(),
        });
    }
    let targets = match targets {
        Some(t) => t,
        None => cyclic_targets(n, d)?,
    };
    check_targets_shape(n, d, &targets)?;
    let max_deviation = a.max_deviation(&targets.gram());
    if max_deviation > tol.op {
        return Err(Error::GramMismatch { max_deviation });
    }

    let ancilla = StateVector::basis(targets.dims().1, options.ancilla_index)?;
    let prepared: Vec<CVector> = inputs
        .iter()
        .map(|a| a.amplitudes().kronecker(ancilla.amplitudes()))
        .collect();
    let images: Vec<CVector> = targets
        .states()
        .iter()
        .map(|s| s.amplitudes().clone())
        .collect();
    let unitary = unitary_completion(&prepared, &images, tol.op)?;
    Ok(DeterministicMasker {
        inputs: inputs.to_vec(),
        ancilla,
        targets,
        unitary,
    })
}

impl DeterministicMasker {
    /// Assembles a masker from an explicit unitary without checking that it
    /// masks anything; use [`verify_masking`] for that.
    pub fn from_parts(
        inputs: Vec<StateVector>,
        ancilla: StateVector,
        targets: FixedReducingSet,
        unitary: Operator,
    ) -> Result<Self> {
        let d_a = input_dim(&inputs)?;
        check_targets_shape(inputs.len(), d_a, &targets)?;
        let (_, d_b) = targets.dims();
        if ancilla.dim() != d_b {
            return Err(Error::DimensionMismatch {
                expected: d_b,
                found: ancilla.dim(),
            });
        }
        if unitary.dim() != d_a * d_b {
            return Err(Error::DimensionMismatch {
                expected: d_a * d_b,
                found: unitary.dim(),
            });
        }
        Ok(DeterministicMasker {
            inputs,
            ancilla,
            targets,
            unitary,
        })
    }
}

impl Masker for DeterministicMasker {
    fn inputs(&self) -> &[StateVector] {
        &self.inputs
    }
    fn ancilla(&self) -> &StateVector {
        &self.ancilla
    }
    fn targets(&self) -> &FixedReducingSet {
        &self.targets
    }
    fn unitary(&self) -> &Operator {
        &self.unitary
    }
    fn probe_dim(&self) -> Option<usize> {
        None
    }
    fn expected_success(&self, _k: usize) -> f64 {
        1.0
    }
}

/// True iff the input and target Gram matrices agree within `tol`, i.e. a
/// unitary maps one family onto the other with certainty.
pub fn check_deterministic_feasible(
    inputs: &[StateVector],
    targets: &FixedReducingSet,
    tol: f64,
) -> bool {
    if inputs.len() != targets.len() {
        return false;
    }
    match gram(inputs) {
        Ok(a) => a.max_deviation(&targets.gram()) <= tol,
        Err(_) => false,
    }
}

/// `X_P[i][j] = ⟨P_i|P_j⟩⟨Ψ_i|Ψ_j⟩` with `|P_i⟩ = e^{iθ_i}|P_0⟩`.
pub fn probe_weighted_gram(targets: &GramMatrix, probe_phases: &[f64]) -> CMatrix {
    let g = targets.matrix();
    CMatrix::from_fn(g.nrows(), g.ncols(), |i, j| {
        g[(i, j)] * Complex64::from_polar(1.0, probe_phases[j] - probe_phases[i])
    })
}

/// `A − √Γ X √Γ`
pub fn remainder_matrix(a: &CMatrix, x: &CMatrix, gammas: &[f64]) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] - x[(i, j)] * (gammas[i] * gammas[j]).sqrt()
    })
}

#[derive(Debug, Clone)]
pub struct ProbabilisticMasker {
    inputs: Vec<StateVector>,
    ancilla: StateVector,
    targets: FixedReducingSet,
    gammas: Vec<f64>,
    probe_phases: Vec<f64>,
    unitary: Operator,
    failure_states: Vec<Option<MultipartiteState>>,
}

fn validate_gammas(gammas: &[f64], n: usize) -> Result<()> {
    if gammas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gammas.len(),
        });
    }
    for (index, &value) in gammas.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::InvalidEfficiency { index, value });
        }
    }
    Ok(())
}

fn resolve_phases(options: &MaskerOptions, n: usize) -> Result<Vec<f64>> {
    match &options.probe_phases {
        None => Ok(vec![0.0; n]),
        Some(p) if p.len() == n => Ok(p.clone()),
        Some(p) => Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        }),
    }
}

/// Post-selected masker for a linearly independent family with efficiencies
/// `γ_i`.
///
/// Requires `M = A − √Γ X_P √Γ ⪰ 0`. The failure branches get Gram matrix
/// `Y = (I − Γ)^{-1/2} M (I − Γ)^{-1/2}`, realized by attaching column `i` of
/// `√Y` to the orthonormal probe states `|P^(j)⟩`. An efficiency of exactly 1
/// is accepted only when the matching row of `M` vanishes.
pub fn build_probabilistic(
    inputs: &[StateVector],
    targets: &FixedReducingSet,
    gammas: &[f64],
    options: &MaskerOptions,
) -> Result<ProbabilisticMasker> {
    let tol = options.tolerances;
    let d_a = input_dim(inputs)?;
    let n = inputs.len();
    check_targets_shape(n, d_a, targets)?;
    validate_gammas(gammas, n)?;
    let phases = resolve_phases(options, n)?;

    let a = gram(inputs)?;
    let min_eigenvalue = a.min_eigenvalue();
    if min_eigenvalue <= tol.rank {
        return Err(Error::LinearlyDependent { min_eigenvalue });
    }
    let x = probe_weighted_gram(&targets.gram(), &phases);
    let m = remainder_matrix(a.matrix(), &x, gammas);
    let (feasible, min_eigenvalue) = psd_check(&m, tol.op)?;
    if !feasible {
        return Err(Error::Infeasible { min_eigenvalue });
    }

    let failing: Vec<bool> = gammas.iter().map(|&g| g < 1.0).collect();
    for index in (0..n).filter(|&i| !failing[i]) {
        let residual = (0..n)
            .map(|j| m[(index, j)].norm().max(m[(j, index)].norm()))
            .fold(0.0, f64::max);
        if residual > tol.op {
            return Err(Error::BoundaryEfficiency { index, residual });
        }
    }
    let y = CMatrix::from_fn(n, n, |i, j| {
        if failing[i] && failing[j] {
            m[(i, j)] / ((1.0 - gammas[i]) * (1.0 - gammas[j])).sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let headroom = gammas
        .iter()
        .filter(|&&g| g < 1.0)
        .map(|g| 1.0 - g)
        .fold(1.0, f64::min);
    let root = hermitian_sqrt(&y, tol.op / headroom)?;

    let (_, d_b) = targets.dims();
    let dp = n + 1;
    let ancilla = StateVector::basis(d_b, options.ancilla_index)?;
    let ab = d_a * d_b;

    let mut failure_states = Vec::with_capacity(n);
    for i in 0..n {
        if !failing[i] {
            failure_states.push(None);
            continue;
        }
        // |0⟩_A|0⟩_B ⊗ Σ_j √Y[j][i] |P^(j)⟩
        let mut v = CVector::zeros(ab * dp);
        for j in 0..n {
            v[1 + j] = root[(j, i)];
        }
        failure_states.push(Some(MultipartiteState::with_tolerance(
            v,
            vec![d_a, d_b, dp],
            vec!["A".into(), "B".into(), "P".into()],
            tol.recon,
        )?));
    }

    let prepared: Vec<CVector> = inputs
        .iter()
        .map(|s| {
            s.amplitudes()
                .kronecker(ancilla.amplitudes())
                .kronecker(StateVector::basis(dp, 0).expect("dp > 0").amplitudes())
        })
        .collect();
    let images: Vec<CVector> = (0..n)
        .map(|i| {
            success_branch(targets, i, gammas[i], phases[i], dp)
                + failure_states[i]
                    .as_ref()
                    .map(|f| f.amplitudes() * Complex64::new((1.0 - gammas[i]).sqrt(), 0.0))
                    .unwrap_or_else(|| CVector::zeros(ab * dp))
        })
        .collect();
    let unitary = unitary_completion(&prepared, &images, tol.recon)?;

    Ok(ProbabilisticMasker {
        inputs: inputs.to_vec(),
        ancilla,
        targets: targets.clone(),
        gammas: gammas.to_vec(),
        probe_phases: phases,
        unitary,
        failure_states,
    })
}

/// `√γ e^{iθ} |Ψ_i⟩ ⊗ |P_0⟩`
fn success_branch(
    targets: &FixedReducingSet,
    i: usize,
    gamma: f64,
    phase: f64,
    dp: usize,
) -> CVector {
    let psi = targets.states()[i].amplitudes();
    let mut v = CVector::zeros(psi.len() * dp);
    let w = Complex64::from_polar(gamma.sqrt(), phase);
    for (x, amp) in psi.iter().enumerate() {
        v[x * dp] = amp * w;
    }
    v
}

impl ProbabilisticMasker {
    /// Assembles a masker from an explicit unitary. Failure states are read
    /// off from the unitary's action on the prepared inputs.
    pub fn from_parts(
        inputs: Vec<StateVector>,
        ancilla: StateVector,
        targets: FixedReducingSet,
        gammas: Vec<f64>,
        probe_phases: Vec<f64>,
        unitary: Operator,
    ) -> Result<Self> {
        let d_a = input_dim(&inputs)?;
        let n = inputs.len();
        check_targets_shape(n, d_a, &targets)?;
        validate_gammas(&gammas, n)?;
        if probe_phases.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: probe_phases.len(),
            });
        }
        let (_, d_b) = targets.dims();
        if ancilla.dim() != d_b {
            return Err(Error::DimensionMismatch {
                expected: d_b,
                found: ancilla.dim(),
            });
        }
        let dp = n + 1;
        if unitary.dim() != d_a * d_b * dp {
            return Err(Error::DimensionMismatch {
                expected: d_a * d_b * dp,
                found: unitary.dim(),
            });
        }
        let mut masker = ProbabilisticMasker {
            inputs,
            ancilla,
            targets,
            gammas,
            probe_phases,
            unitary,
            failure_states: Vec::new(),
        };
        for i in 0..n {
            let residual = masker.unitary.apply(&masker.prepared_input(i)?)
                - success_branch(
                    &masker.targets,
                    i,
                    masker.gammas[i],
                    masker.probe_phases[i],
                    dp,
                );
            let state = if masker.gammas[i] < 1.0 && residual.norm() > 0.0 {
                Some(MultipartiteState::normalized(
                    residual,
                    vec![d_a, d_b, dp],
                    vec!["A".into(), "B".into(), "P".into()],
                )?)
            } else {
                None
            };
            masker.failure_states.push(state);
        }
        Ok(masker)
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn probe_phases(&self) -> &[f64] {
        &self.probe_phases
    }

    /// `|Φ^(i)⟩`, `None` where `γ_i = 1`.
    pub fn failure_states(&self) -> &[Option<MultipartiteState>] {
        &self.failure_states
    }

    pub fn success_probability(&self) -> f64 {
        self.gammas.iter().product()
    }

    /// Largest entrywise deviation of `√Γ X_P √Γ + √(I−Γ) Y √(I−Γ)` from the
    /// input Gram matrix, with `Y` the Gram matrix of the stored failure states.
    pub fn reconstruction_residual(&self) -> f64 {
        let n = self.len();
        let a = gram(&self.inputs).expect("inputs share a dimension");
        let x = probe_weighted_gram(&self.targets.gram(), &self.probe_phases);
        let rhs = CMatrix::from_fn(n, n, |i, j| {
            let (gi, gj) = (self.gammas[i], self.gammas[j]);
            let y = match (&self.failure_states[i], &self.failure_states[j]) {
                (Some(fi), Some(fj)) => fi.inner(fj),
                _ => Complex64::new(0.0, 0.0),
            };
            x[(i, j)] * (gi * gj).sqrt() + y * ((1.0 - gi) * (1.0 - gj)).sqrt()
        });
        max_abs_diff(a.matrix(), &rhs)
    }

    /// Largest modulus of a `|P_0⟩` component in any failure state.
    pub fn orthogonality_residual(&self) -> f64 {
        let dp = self.len() + 1;
        self.failure_states
            .iter()
            .flatten()
            .map(|f| {
                f.amplitudes()
                    .iter()
                    .step_by(dp)
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest norm of `U|a_i⟩|b⟩|P_0⟩` minus its prescribed image.
    pub fn mapping_residual(&self) -> f64 {
        let dp = self.len() + 1;
        (0..self.len())
            .map(|i| {
                let mut expected =
                    success_branch(&self.targets, i, self.gammas[i], self.probe_phases[i], dp);
                if let Some(f) = &self.failure_states[i] {
                    expected += f.amplitudes() * Complex64::new((1.0 - self.gammas[i]).sqrt(), 0.0);
                }
                let input = self.prepared_input(i).expect("index in range");
                (self.unitary.apply(&input) - expected).norm()
            })
            .fold(0.0, f64::max)
    }
}

impl Masker for ProbabilisticMasker {
    fn inputs(&self) -> &[StateVector] {
        &self.inputs
    }
    fn ancilla(&self) -> &StateVector {
        &self.ancilla
    }
    fn targets(&self) -> &FixedReducingSet {
        &self.targets
    }
    fn unitary(&self) -> &Operator {
        &self.unitary
    }
    fn probe_dim(&self) -> Option<usize> {
        Some(self.inputs.len() + 1)
    }
    fn expected_success(&self, k: usize) -> f64 {
        self.gammas[k]
    }
}

/// Either kind of masker, e.g. as loaded from a file.
#[derive(Debug, Clone)]
pub enum AnyMasker {
    Deterministic(DeterministicMasker),
    Probabilistic(ProbabilisticMasker),
}

impl AnyMasker {
    fn inner(&self) -> &dyn Masker {
        match self {
            AnyMasker::Deterministic(m) => m,
            AnyMasker::Probabilistic(m) => m,
        }
    }
}

impl Masker for AnyMasker {
    fn inputs(&self) -> &[StateVector] {
        self.inner().inputs()
    }
    fn ancilla(&self) -> &StateVector {
        self.inner().ancilla()
    }
    fn targets(&self) -> &FixedReducingSet {
        self.inner().targets()
    }
    fn unitary(&self) -> &Operator {
        self.inner().unitary()
    }
    fn probe_dim(&self) -> Option<usize> {
        self.inner().probe_dim()
    }
    fn expected_success(&self, k: usize) -> f64 {
        self.inner().expected_success(k)
    }
}

impl From<DeterministicMasker> for AnyMasker {
    fn from(m: DeterministicMasker) -> Self {
        AnyMasker::Deterministic(m)
    }
}

impl From<ProbabilisticMasker> for AnyMasker {
    fn from(m: ProbabilisticMasker) -> Self {
        AnyMasker::Probabilistic(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_reducing::targets_with_overlap;
    use crate::hilbert::c;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn overlapping_pair() -> Vec<StateVector> {
        vec![
            StateVector::basis(2, 0).unwrap(),
            StateVector::from_slice(&[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap(),
        ]
    }

    #[test]
    fn deterministic_basis_pair() {
        let inputs = vec![
            StateVector::basis(2, 0).unwrap(),
            StateVector::basis(2, 1).unwrap(),
        ];
        let m = build_deterministic(&inputs, 2, None, &MaskerOptions::default()).unwrap();
        assert!(m.unitary().is_unitary(1e-12));
        let half = DensityOperator::maximally_mixed(2);
        for k in 0..2 {
            let o = simulate(&m, k).unwrap();
            assert!((o.success_probability - 1.0).abs() < 1e-12);
            assert!(o.fidelity_to_target > 1.0 - 1e-12);
            assert!(o.marginal_a.max_deviation(&half) < 1e-12);
            assert!(o.marginal_b.max_deviation(&half) < 1e-12);
        }
        assert!(verify_masking(&m, 1e-9).passed);
    }

    #[test]
    fn deterministic_single_state() {
        let a = StateVector::from_slice(&[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]).unwrap();
        let m = build_deterministic(&[a], 3, None, &MaskerOptions::default()).unwrap();
        let o = simulate(&m, 0).unwrap();
        let mut max_ent = CVector::zeros(9);
        for i in 0..3 {
            max_ent[i * 3 + i] = c(1.0 / 3f64.sqrt(), 0.0);
        }
        assert!(o.post_selected_state.amplitudes().dotc(&max_ent).norm_sqr() > 1.0 - 1e-12);
    }

    #[test]
    fn deterministic_rejects_overlap_and_overflow() {
        let err = build_deterministic(&overlapping_pair(), 2, None, &MaskerOptions::default())
            .unwrap_err();
        match err {
            Error::NotOrthonormal { max_offdiag } => {
                assert!((max_offdiag - FRAC_1_SQRT_2).abs() < 1e-12)
            }
            e => panic!("unexpected {e:?}"),
        }
        let three: Vec<_> = (0..3)
            .map(|i| StateVector::basis(2, i % 2).unwrap())
            .collect();
        assert!(matches!(
            build_deterministic(&three, 2, None, &MaskerOptions::default()),
            Err(Error::TooManyStates { .. })
        ));
        let inputs = vec![
            StateVector::basis(2, 0).unwrap(),
            StateVector::basis(2, 1).unwrap(),
        ];
        let t = targets_with_overlap(2, c(0.5, 0.0)).unwrap();
        assert!(matches!(
            build_deterministic(&inputs, 2, Some(t), &MaskerOptions::default()),
            Err(Error::GramMismatch { .. })
        ));
    }

    #[test]
    fn feasibility_check_examples() {
        let basis = vec![
            StateVector::basis(2, 0).unwrap(),
            StateVector::basis(2, 1).unwrap(),
        ];
        assert!(check_deterministic_feasible(
            &basis,
            &cyclic_targets(2, 2).unwrap(),
            1e-10
        ));
        let half = vec![
            StateVector::basis(2, 0).unwrap(),
            StateVector::from_slice(&[c(0.5, 0.0), c(0.75f64.sqrt(), 0.0)]).unwrap(),
        ];
        assert!(check_deterministic_feasible(
            &half,
            &targets_with_overlap(2, c(0.5, 0.0)).unwrap(),
            1e-10
        ));
        assert!(!check_deterministic_feasible(
            &half,
            &cyclic_targets(2, 2).unwrap(),
            1e-10
        ));
    }

    #[test]
    fn probabilistic_small_gamma_feasible() {
        let targets = cyclic_targets(2, 2).unwrap();
        let m = build_probabilistic(
            &overlapping_pair(),
            &targets,
            &[0.1, 0.1],
            &MaskerOptions::default(),
        )
        .unwrap();
        assert!(m.unitary().is_unitary(1e-10));
        assert!(m.reconstruction_residual() < 1e-12);
        assert!(m.orthogonality_residual() < 1e-15);
        assert!(m.mapping_residual() < 1e-9);
        let o = simulate(&m, 0).unwrap();
        assert!((o.success_probability - 0.1).abs() < 1e-8);
        assert!(o.fidelity_to_target > 1.0 - 1e-8);
        let report = verify_masking(&m, 1e-8);
        assert!(report.passed, "{:?}", report.failures);
    }

    #[test]
    fn probabilistic_large_gamma_infeasible() {
        let targets = cyclic_targets(2, 2).unwrap();
        let err = build_probabilistic(
            &overlapping_pair(),
            &targets,
            &[0.3, 0.3],
            &MaskerOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Infeasible { min_eigenvalue } => {
                assert!((min_eigenvalue - (0.7 - FRAC_1_SQRT_2)).abs() < 1e-12)
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn probabilistic_rejects_bad_input() {
        let targets = cyclic_targets(2, 2).unwrap();
        let same = vec![StateVector::basis(2, 0).unwrap(); 2];
        assert!(matches!(
            build_probabilistic(&same, &targets, &[0.1, 0.1], &MaskerOptions::default()),
            Err(Error::LinearlyDependent { .. })
        ));
        assert!(matches!(
            build_probabilistic(
                &overlapping_pair(),
                &targets,
                &[0.0, 0.1],
                &MaskerOptions::default()
            ),
            Err(Error::InvalidEfficiency { index: 0, .. })
        ));
        // γ_1 = 1 leaves M[0][1] = 1/√2 − 0 nonzero but M[0][0] = 0: not PSD
        assert!(build_probabilistic(
            &overlapping_pair(),
            &targets,
            &[1.0, 0.1],
            &MaskerOptions::default()
        )
        .is_err());
    }

    #[test]
    fn unit_efficiency_with_matched_grams() {
        let inputs = overlapping_pair();
        let targets = targets_with_overlap(2, c(FRAC_1_SQRT_2, 0.0)).unwrap();
        let m =
            build_probabilistic(&inputs, &targets, &[1.0, 1.0], &MaskerOptions::default()).unwrap();
        assert!(m.failure_states().iter().all(Option::is_none));
        for k in 0..2 {
            let o = simulate(&m, k).unwrap();
            assert!((o.success_probability - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn probe_phases_align_complex_overlap() {
        // target overlap i·t against a real input overlap; phase θ_2 = -π/2 realigns
        let inputs = overlapping_pair();
        let targets = targets_with_overlap(2, c(0.0, FRAC_1_SQRT_2)).unwrap();
        let opts = MaskerOptions {
            probe_phases: Some(vec![0.0, -std::f64::consts::FRAC_PI_2]),
            ..Default::default()
        };
        let m = build_probabilistic(&inputs, &targets, &[1.0, 1.0], &opts).unwrap();
        let report = verify_masking(&m, 1e-8);
        assert!(report.passed, "{:?}", report.failures);
        assert!(
            build_probabilistic(&inputs, &targets, &[1.0, 1.0], &MaskerOptions::default()).is_err()
        );
    }

    #[test]
    fn simulate_index_out_of_range() {
        let inputs = vec![StateVector::basis(2, 0).unwrap()];
        let m = build_deterministic(&inputs, 2, None, &MaskerOptions::default()).unwrap();
        assert!(matches!(
            simulate(&m, 5),
            Err(Error::IndexOutOfRange { index: 5, len: 1 })
        ));
    }

    #[test]
    fn from_parts_recovers_failure_states() {
        let targets = cyclic_targets(2, 2).unwrap();
        let built = build_probabilistic(
            &overlapping_pair(),
            &targets,
            &[0.1, 0.15],
            &MaskerOptions::default(),
        )
        .unwrap();
        let rebuilt = ProbabilisticMasker::from_parts(
            built.inputs().to_vec(),
            built.ancilla().clone(),
            built.targets().clone(),
            built.gammas().to_vec(),
            built.probe_phases().to_vec(),
            built.unitary().clone(),
        )
        .unwrap();
        assert!(rebuilt.reconstruction_residual() < 1e-9);
        assert_eq!(verify_masking(&built, 1e-8), verify_masking(&rebuilt, 1e-8));
    }
}
