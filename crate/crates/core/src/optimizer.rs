//! Success-probability maximization for probabilistic maskers.
//!
//! The success probability is `Π γ_i`, subject to
//! `M(γ) = A − √Γ X_P √Γ ⪰ 0`. For two states the optimum has a closed form
//! in the overlap magnitudes `s = |⟨a_1|a_2⟩|` and `t = |⟨Ψ_1|Ψ_2⟩|`; for
//! more states [`maximize_general`] searches for a locally undominated
//! feasible point.

use crate::error::{Error, Result};
use crate::hilbert::{psd_check, CMatrix, GramMatrix};
use crate::masker::remainder_matrix;

/// Diagonal of the efficiency matrix `Γ`, each entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyMatrix(Vec<f64>);

impl EfficiencyMatrix {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        for (index, &value) in gammas.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidEfficiency { index, value });
            }
        }
        Ok(EfficiencyMatrix(gammas))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn success_probability(&self) -> f64 {
        success_probability(&self.0)
    }
}

/// `Π γ_i`
pub fn success_probability(gammas: &[f64]) -> f64 {
    gammas.iter().product()
}

/// Evaluates `M = A − √Γ X_P √Γ` and reports `(M ⪰ −tol, λ_min(M))`.
pub fn feasible(a: &GramMatrix, x_p: &CMatrix, gammas: &[f64], tol: f64) -> Result<(bool, f64)> {
    let n = a.len();
    if x_p.nrows() != n || x_p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_p.nrows(),
        });
    }
    if gammas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gammas.len(),
        });
    }
    psd_check(&remainder_matrix(a.matrix(), x_p, gammas), tol)
}

/// Overlap magnitudes of a two-state masking problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateProblem {
    /// `|⟨a_1|a_2⟩|`
    pub s: f64,
    /// `|⟨Ψ_1|Ψ_2⟩|`
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateOptimum {
    pub prob_max: f64,
    pub gammas: [f64; 2],
}

impl TwoStateProblem {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        for (name, v) in [("s", s), ("t", t)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(TwoStateProblem { s, t })
    }

    /// Optimum with equal efficiencies and phase-aligned probe overlap:
    /// `γ = min((1−s)/(1−t), (1+s)/(1+t))`, `Prob = γ²`.
    pub fn solve(&self) -> TwoStateOptimum {
        let gamma = ratio(1.0 - self.s, 1.0 - self.t)
            .min(ratio(1.0 + self.s, 1.0 + self.t))
            .min(1.0);
        TwoStateOptimum {
            prob_max: gamma * gamma,
            gammas: [gamma, gamma],
        }
    }
}

/// `num / den` with `x/0 = ∞` for `x > 0` and `0/0 = 1`.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

pub fn max_prob_two(s: f64, t: f64) -> Result<TwoStateOptimum> {
    Ok(TwoStateProblem::new(s, t)?.solve())
}

/// Brute-force maximum of `γ_1 γ_2` over the grid `{0, 1/N, …, 1}²`, keeping
/// points where `[[1−γ_1, z], [z*, 1−γ_2]] ⪰ 0` with
/// `|z| = |s − √(γ_1γ_2) t|`.
pub fn max_prob_grid_oracle(s: f64, t: f64, grid_steps: usize) -> f64 {
    let n = grid_steps.max(1);
    let step = 1.0 / n as f64;
    let mut best = 0.0f64;
    // symmetric in (γ_1, γ_2): scan γ_1 <= γ_2 only
    for i in 0..=n {
        let g1 = i as f64 * step;
        if g1 <= best {
            continue;
        }
        for j in (i..=n).rev() {
            let g2 = j as f64 * step;
            let p = g1 * g2;
            if p <= best {
                break;
            }
            let z = s - p.sqrt() * t;
            let det = (1.0 - g1) * (1.0 - g2) - z * z;
            if det >= -1e-12 {
                best = p;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Coordinate increment used for the local-optimality guarantee.
    pub step: f64,
    /// `M ⪰ −feasibility_tol` counts as feasible.
    pub feasibility_tol: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub bisection_tol: f64,
    pub max_sweeps: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            step: 1e-4,
            feasibility_tol: 1e-12,
            bisection_tol: 1e-13,
            max_sweeps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub gammas: Vec<f64>,
    pub probability: f64,
    /// `λ_min(M(γ))` at the returned point.
    pub min_eigenvalue: f64,
}

struct Search<'a> {
    a: &'a CMatrix,
    x: &'a CMatrix,
    opts: OptimizerOptions,
}

impl Search<'_> {
    fn min_eig(&self, gammas: &[f64]) -> f64 {
        psd_check(
            &remainder_matrix(self.a, self.x, gammas),
            self.opts.feasibility_tol,
        )
        .map(|(_, m)| m)
        .unwrap_or(f64::NEG_INFINITY)
    }

    fn feasible(&self, gammas: &[f64]) -> bool {
        gammas.iter().all(|g| (0.0..=1.0).contains(g))
            && self.min_eig(gammas) >= -self.opts.feasibility_tol
    }

    /// Largest `τ ∈ [0, tau_max]` found by bisection with `path(τ)` feasible,
    /// assuming `path(0)` is.
    fn bisect<F: Fn(f64) -> Vec<f64>>(&self, path: F, tau_max: f64) -> f64 {
        if self.feasible(&path(tau_max)) {
            return tau_max;
        }
        let (mut lo, mut hi) = (0.0, tau_max);
        while hi - lo > self.opts.bisection_tol {
            let mid = 0.5 * (lo + hi);
            if self.feasible(&path(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Moves along `γ_i ← γ_i e^{τ v_i}` as far as feasibility and `γ ≤ 1` allow.
    fn log_line(&self, gammas: &[f64], v: &[f64]) -> Vec<f64> {
        let tau_max = gammas
            .iter()
            .zip(v)
            .filter(|(_, &vi)| vi > 0.0)
            .map(|(g, vi)| -g.ln() / vi)
            .fold(f64::INFINITY, f64::min);
        if !(tau_max.is_finite() && tau_max > 0.0) {
            return gammas.to_vec();
        }
        let path = |tau: f64| -> Vec<f64> {
            gammas
                .iter()
                .zip(v)
                .map(|(g, vi)| (g * (tau * vi).exp()).min(1.0))
                .collect()
        };
        path(self.bisect(path, tau_max))
    }
}

fn log_objective(gammas: &[f64]) -> f64 {
    gammas.iter().map(|g| g.ln()).sum()
}

/// Maximizes `Σ log γ_i` subject to `A − √Γ X_P √Γ ⪰ 0` and `0 < γ_i ≤ 1`.
///
/// Starts from the largest feasible uniform point `γ = λ·1` (bisection on
/// `λ`), then improves by line searches in log space along coordinate
/// directions and pairwise trade directions `e_i − α e_j`, and finally
/// polishes coordinatewise until no single `γ_i` can grow by
/// `options.step`. The result is feasible and locally undominated but not
/// certified globally optimal.
pub fn maximize_general(
    a: &GramMatrix,
    x_p: &CMatrix,
    options: &OptimizerOptions,
) -> Result<Optimum> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty problem".into()));
    }
    if x_p.nrows() != n || x_p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_p.nrows(),
        });
    }
    let search = Search {
        a: a.matrix(),
        x: x_p,
        opts: *options,
    };

    let floor = 1e-12;
    if !search.feasible(&vec![floor; n]) {
        return Err(Error::Infeasible {
            min_eigenvalue: search.min_eig(&vec![floor; n]),
        });
    }
    let lambda = floor + search.bisect(|l| vec![floor + l; n], 1.0 - floor);
    let mut gammas = vec![lambda; n];

    let mut directions: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for alpha in [0.25, 0.5, 0.75, 0.9, 0.99] {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v[j] = -alpha;
                directions.push(v);
            }
        }
    }

    for _ in 0..options.max_sweeps {
        let before = log_objective(&gammas);
        for v in &directions {
            let candidate = search.log_line(&gammas, v);
            if log_objective(&candidate) > log_objective(&gammas) + 1e-15 {
                gammas = candidate;
            }
        }
        if log_objective(&gammas) - before < 1e-12 {
            break;
        }
    }

    // guarantee: no coordinate can be raised by `step`
    loop {
        let mut moved = false;
        for i in 0..n {
            let mut probe = gammas.clone();
            probe[i] += options.step;
            if probe[i] <= 1.0 && search.feasible(&probe) {
                let base = probe.clone();
                let room = 1.0 - base[i];
                let tau = search.bisect(
                    |tau| {
                        let mut g = base.clone();
                        g[i] += tau;
                        g
                    },
                    room,
                );
                gammas = base;
                gammas[i] += tau;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let min_eigenvalue = search.min_eig(&gammas);
    Ok(Optimum {
        probability: success_probability(&gammas),
        gammas,
        min_eigenvalue,
    })
}

/// One point of the two-state optimum curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure1Row {
    pub s: f64,
    pub t: f64,
    pub prob_max: f64,
}

pub const FIGURE1_S_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Optimal two-state success probability for each `s` over `t_steps`
/// uniformly spaced `t ∈ [0, 1]`; rows ordered by `s`, then `t`.
pub fn figure1_data(s_values: &[f64], t_steps: usize) -> Result<Vec<Figure1Row>> {
    if t_steps < 2 {
        return Err(Error::InvalidArgument(
            "at least two t values are required".into(),
        ));
    }
    let mut rows = Vec::with_capacity(s_values.len() * t_steps);
    for &s in s_values {
        for j in 0..t_steps {
            let t = j as f64 / (t_steps - 1) as f64;
            rows.push(Figure1Row {
                s,
                t,
                prob_max: max_prob_two(s, t)?.prob_max,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn two_by_two(off: f64) -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(off, 0.0),
                Complex64::new(off, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
    }

    #[test]
    fn product_of_efficiencies() {
        assert_eq!(success_probability(&[1.0, 1.0]), 1.0);
        assert_eq!(success_probability(&[0.5, 0.5]), 0.25);
        assert!((success_probability(&[0.2929, 0.2929]) - 0.08579041).abs() < 1e-8);
        assert!(EfficiencyMatrix::new(vec![0.5, 1.2]).is_err());
    }

    #[test]
    fn closed_form_examples() {
        for s in [0.0, 0.3, 0.8, 1.0] {
            assert_eq!(max_prob_two(s, s).unwrap().prob_max, 1.0);
        }
        assert_eq!(max_prob_two(1.0, 0.5).unwrap().prob_max, 0.0);
        assert!((max_prob_two(0.0, 0.5).unwrap().prob_max - 4.0 / 9.0).abs() < 1e-15);
        assert!((max_prob_two(0.5, 0.0).unwrap().prob_max - 0.25).abs() < 1e-15);
        let opt = max_prob_two(FRAC_1_SQRT_2, 0.0).unwrap();
        assert!((opt.gammas[0] - (1.0 - FRAC_1_SQRT_2)).abs() < 1e-15);
        assert_eq!(opt.gammas[0], opt.gammas[1]);
        assert!(max_prob_two(1.1, 0.0).is_err());
        assert!(max_prob_two(0.5, -0.1).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(max_prob_grid_oracle(0.0, 0.0, 100), 1.0);
        let p = max_prob_grid_oracle(FRAC_1_SQRT_2, 0.0, 1000);
        assert!((p - 0.0857864).abs() < 2e-3, "{p}");
    }

    #[test]
    fn feasibility_along_uniform_direction() {
        let a = GramMatrix::from_matrix(two_by_two(FRAC_1_SQRT_2)).unwrap();
        let x = CMatrix::identity(2, 2);
        let boundary = 1.0 - FRAC_1_SQRT_2;
        assert!(feasible(&a, &x, &[boundary - 1e-6; 2], 1e-10).unwrap().0);
        assert!(!feasible(&a, &x, &[boundary + 1e-6; 2], 1e-10).unwrap().0);
        assert!(feasible(&a, &x, &[1e-9; 2], 1e-10).unwrap().0);
        let (ok, min) = feasible(&a, a.matrix(), &[1.0, 1.0], 1e-10).unwrap();
        assert!(ok && min.abs() < 1e-14);
        assert!(feasible(&a, &CMatrix::identity(3, 3), &[0.1; 2], 1e-10).is_err());
    }

    #[test]
    fn general_matches_closed_form_for_pairs() {
        for s in [0.0, 0.25, 0.5, 0.75] {
            for t in [0.0, 0.25, 0.5, 0.75] {
                let a = GramMatrix::from_matrix(two_by_two(s)).unwrap();
                let opt =
                    maximize_general(&a, &two_by_two(t), &OptimizerOptions::default()).unwrap();
                let exact = max_prob_two(s, t).unwrap().prob_max;
                assert!(
                    (opt.probability - exact).abs() < 1e-3,
                    "s={s} t={t}: {} vs {exact}",
                    opt.probability
                );
                assert!(opt.min_eigenvalue >= -1e-10);
            }
        }
    }

    #[test]
    fn general_equal_grams_reach_one() {
        let a = GramMatrix::from_matrix(two_by_two(0.4)).unwrap();
        let opt = maximize_general(&a, a.matrix(), &OptimizerOptions::default()).unwrap();
        assert_eq!(opt.gammas, vec![1.0, 1.0]);
        assert_eq!(opt.probability, 1.0);
    }

    #[test]
    fn figure_rows() {
        let rows = figure1_data(&FIGURE1_S_VALUES, 5).unwrap();
        assert_eq!(rows.len(), 25);
        assert_eq!((rows[0].s, rows[0].t, rows[0].prob_max), (0.0, 0.0, 1.0));
        assert_eq!(rows[5].s, 0.25);
        assert!((rows[5].prob_max - 0.5625).abs() < 1e-15);
        assert!(figure1_data(&[0.5], 1).is_err());
    }
}
