//! JSON state-set and masker files, CSV figure output.
//!
//! Complex numbers are encoded as two-element `[re, im]` arrays. Matrices are
//! lists of rows.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::fixed_reducing::{FixedReducingSet, DEFAULT_MARGINAL_TOL};
use crate::hilbert::{
    state_labels, CMatrix, CVector, Complex64, MultipartiteState, Operator, StateVector,
    DEFAULT_NORM_TOL,
};
use crate::masker::{AnyMasker, DeterministicMasker, Masker, ProbabilisticMasker};
use crate::optimizer::Figure1Row;

pub type ComplexPair = [f64; 2];

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl FileError {
    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        FileError::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

fn encode_vector(v: &CVector) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn decode_vector(v: &[ComplexPair]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|[re, im]| Complex64::new(*re, *im)))
}

/// A list of pure states sharing one tensor structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSetFile {
    pub dims: Vec<usize>,
    pub states: Vec<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl StateSetFile {
    pub fn from_vectors(states: &[StateVector]) -> Self {
        StateSetFile {
            dims: vec![states.first().map_or(0, StateVector::dim)],
            states: states
                .iter()
                .map(|s| encode_vector(s.amplitudes()))
                .collect(),
            labels: None,
        }
    }

    pub fn from_multipartite(states: &[MultipartiteState]) -> Self {
        let first = states.first();
        StateSetFile {
            dims: first.map_or_else(Vec::new, |s| s.dims().to_vec()),
            states: states
                .iter()
                .map(|s| encode_vector(s.amplitudes()))
                .collect(),
            labels: first.map(|s| s.labels().to_vec()),
        }
    }

    /// Decodes every state with the file's tensor structure. Norms are
    /// validated within `norm_tol` unless `renormalize` is set.
    pub fn to_multipartite(
        &self,
        renormalize: bool,
        norm_tol: f64,
    ) -> Result<Vec<MultipartiteState>, FileError> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(FileError::invalid("dims", "dimensions must be positive"));
        }
        let labels = match &self.labels {
            Some(l) if l.len() != self.dims.len() => {
                return Err(FileError::invalid(
                    "labels",
                    format!("{} labels for {} subsystems", l.len(), self.dims.len()),
                ))
            }
            Some(l) => l.clone(),
            None => state_labels(self.dims.len()),
        };
        let total: usize = self.dims.iter().product();
        if self.states.is_empty() {
            return Err(FileError::invalid("states", "no states given"));
        }
        self.states
            .iter()
            .enumerate()
            .map(|(k, raw)| {
                let field = format!("states[{k}]");
                if raw.len() != total {
                    return Err(FileError::invalid(
                        field,
                        format!("expected {total} amplitudes, found {}", raw.len()),
                    ));
                }
                let v = decode_vector(raw);
                let state = if renormalize {
                    MultipartiteState::normalized(v, self.dims.clone(), labels.clone())
                } else {
                    MultipartiteState::with_tolerance(
                        v,
                        self.dims.clone(),
                        labels.clone(),
                        norm_tol,
                    )
                };
                state.map_err(|e| FileError::invalid(field, e))
            })
            .collect()
    }

    /// Decodes every state as a flat vector, ignoring the tensor structure.
    pub fn to_state_vectors(
        &self,
        renormalize: bool,
        norm_tol: f64,
    ) -> Result<Vec<StateVector>, FileError> {
        Ok(self
            .to_multipartite(renormalize, norm_tol)?
            .iter()
            .map(MultipartiteState::to_state_vector)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskerKind {
    Deterministic,
    Probabilistic,
}

/// Serialized masker: the unitary plus everything needed to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskerFile {
    pub kind: MaskerKind,
    /// `[d_A, d_B]`, plus `d_P` for probabilistic maskers.
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// Row-major.
    pub unitary: Vec<Vec<ComplexPair>>,
    pub inputs: StateSetFile,
    pub targets: StateSetFile,
    /// Computational-basis index of the ancilla `|b⟩_B`.
    pub ancilla: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_phases: Option<Vec<f64>>,
}

impl MaskerFile {
    pub fn from_masker(masker: &AnyMasker) -> Self {
        let (d_a, d_b) = masker.targets().dims();
        let mut dims = vec![d_a, d_b];
        let (kind, gammas, probe_phases) = match masker {
            AnyMasker::Deterministic(_) => (MaskerKind::Deterministic, None, None),
            AnyMasker::Probabilistic(m) => {
                dims.push(m.len() + 1);
                (
                    MaskerKind::Probabilistic,
                    Some(m.gammas().to_vec()),
                    Some(m.probe_phases().to_vec()),
                )
            }
        };
        let ancilla = masker
            .ancilla()
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map_or(0, |(i, _)| i);
        let u = masker.unitary().matrix();
        MaskerFile {
            kind,
            dims,
            gammas,
            unitary: u
                .row_iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            inputs: StateSetFile::from_vectors(masker.inputs()),
            targets: StateSetFile::from_multipartite(masker.targets().states()),
            ancilla,
            probe_dim: masker.probe_dim(),
            probe_phases,
        }
    }

    pub fn to_masker(&self) -> Result<AnyMasker, FileError> {
        let dim = self.unitary.len();
        for (r, row) in self.unitary.iter().enumerate() {
            if row.len() != dim {
                return Err(FileError::invalid(
                    format!("unitary[{r}]"),
                    format!("expected {dim} entries, found {}", row.len()),
                ));
            }
        }
        let matrix = CMatrix::from_fn(dim, dim, |r, c| {
            let [re, im] = self.unitary[r][c];
            Complex64::new(re, im)
        });
        let unitary = Operator::new(matrix).map_err(|e| FileError::invalid("unitary", e))?;
        let inputs = self
            .inputs
            .to_state_vectors(false, DEFAULT_NORM_TOL)
            .map_err(nest("inputs"))?;
        let targets = self
            .targets
            .to_multipartite(false, DEFAULT_NORM_TOL)
            .map_err(nest("targets"))?;
        let targets = FixedReducingSet::from_states(targets, DEFAULT_MARGINAL_TOL)
            .map_err(|e| FileError::invalid("targets", e))?;
        if self.dims.len() < 2 || self.dims[..2] != [targets.dims().0, targets.dims().1] {
            return Err(FileError::invalid(
                "dims",
                "does not match the target states",
            ));
        }
        let ancilla = StateVector::basis(targets.dims().1, self.ancilla)
            .map_err(|e| FileError::invalid("ancilla", e))?;

        let masker: Result<AnyMasker, Error> = match self.kind {
            MaskerKind::Deterministic => {
                DeterministicMasker::from_parts(inputs, ancilla, targets, unitary).map(Into::into)
            }
            MaskerKind::Probabilistic => {
                let n = inputs.len();
                let gammas = self.gammas.clone().ok_or_else(|| {
                    FileError::invalid("gammas", "required for probabilistic maskers")
                })?;
                if self.probe_dim != Some(n + 1) || self.dims.get(2) != Some(&(n + 1)) {
                    return Err(FileError::invalid(
                        "probe_dim",
                        format!("expected {}", n + 1),
                    ));
                }
                let phases = self.probe_phases.clone().unwrap_or_else(|| vec![0.0; n]);
                ProbabilisticMasker::from_parts(inputs, ancilla, targets, gammas, phases, unitary)
                    .map(Into::into)
            }
        };
        masker.map_err(|e| FileError::invalid("masker", e))
    }
}

fn nest(parent: &'static str) -> impl Fn(FileError) -> FileError {
    move |e| match e {
        FileError::Invalid { field, message } => FileError::Invalid {
            field: format!("{parent}.{field}"),
            message,
        },
        other => other,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| FileError::Parse {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    fs::write(path, to_json_string(value)).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `printf("%.{digits}g")` formatting.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV with header `s,t,prob_max`, values at 12 significant digits.
pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    let mut out = String::from("s,t,prob_max\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_significant(r.s, 12),
            format_significant(r.t, 12),
            format_significant(r.prob_max, 12)
        );
    }
    out
}

pub fn write_figure1_csv(path: &Path, rows: &[Figure1Row]) -> Result<(), FileError> {
    let io_err = |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(figure1_csv(rows).as_bytes()).map_err(io_err)
}
