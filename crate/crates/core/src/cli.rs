//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (hypothesis violated, infeasible,
//! verification failed), 2 malformed input or I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};

use crate::error::Error;
use crate::fixed_reducing::{
    targets_with_overlap, verify_fixed_reducing, FixedReducingSet, DEFAULT_MARGINAL_TOL,
};
use crate::hilbert::{gram, CMatrix, Complex64, DensityOperator, StateVector, DEFAULT_NORM_TOL};
use crate::io::{
    figure1_csv, format_significant, read_json, write_figure1_csv, write_json, FileError,
    MaskerFile, StateSetFile,
};
use crate::masker::{
    build_deterministic, build_probabilistic, probe_weighted_gram, remainder_matrix, simulate,
    verify_masking, AnyMasker, Masker, MaskerOptions,
};
use crate::optimizer::{
    figure1_data, maximize_general, success_probability, OptimizerOptions, FIGURE1_S_VALUES,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Tolerance used when verifying freshly built or loaded maskers.
pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "qmask",
    version,
    about = "Build, optimize and verify quantum information maskers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a set of bipartite states has index-independent marginals.
    VerifyFixedReducing {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MARGINAL_TOL)]
        tol: f64,
        #[arg(long)]
        renormalize: bool,
    },
    /// Build a unitary masker for an orthonormal input set.
    MaskDet {
        input: PathBuf,
        /// Dimension of A and B; defaults to the input dimension.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ancilla basis index (zero-based).
        #[arg(long, default_value_t = 0)]
        ancilla: usize,
        #[arg(long)]
        renormalize: bool,
    },
    /// Build a post-selected masker for a linearly independent input set.
    #[command(group(ArgGroup::new("target_source").required(true).args(["targets", "target_overlap"])))]
    #[command(group(ArgGroup::new("efficiencies").required(true).args(["gammas", "maximize"])))]
    MaskProb {
        input: PathBuf,
        /// State-set file with the fixed reducing targets.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Target overlap `re` or `re,im` for a two-state input set.
        #[arg(long, allow_hyphen_values = true)]
        target_overlap: Option<String>,
        /// Comma-separated efficiencies.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gammas: Option<Vec<f64>>,
        /// Maximize the success probability first.
        #[arg(long)]
        maximize: bool,
        /// Dimension of B for --target-overlap; defaults to the input dimension.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        ancilla: usize,
        #[arg(long)]
        renormalize: bool,
    },
    /// Run a stored masker and post-select.
    Simulate {
        masker: PathBuf,
        /// Input index, starting at 1. All inputs when omitted.
        #[arg(long)]
        state: Option<usize>,
    },
    /// Tabulate the optimal two-state success probability.
    Figure1 {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s_values: Option<Vec<f64>>,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroDimension
            | Error::NotNormalized { .. }
            | Error::DimensionMismatch { .. }
            | Error::UnknownSubsystem(_)
            | Error::NotBipartite { .. }
            | Error::IndexOutOfRange { .. }
            | Error::OverlapOutOfRange { .. }
            | Error::InvalidEfficiency { .. }
            | Error::InvalidArgument(_) => EXIT_INPUT,
            _ => EXIT_DOMAIN,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::VerifyFixedReducing {
            input,
            tol,
            renormalize,
        } => cmd_verify_fixed_reducing(&input, tol, renormalize, out),
        Command::MaskDet {
            input,
            dim,
            out: path,
            ancilla,
            renormalize,
        } => cmd_mask_det(&input, dim, path, ancilla, renormalize, out),
        Command::MaskProb {
            input,
            targets,
            target_overlap,
            gammas,
            maximize,
            dim,
            out: path,
            ancilla,
            renormalize,
        } => {
            let source = match (targets, target_overlap) {
                (Some(p), _) => TargetSource::File(p),
                (None, Some(c)) => TargetSource::Overlap(parse_complex(&c)?),
                (None, None) => unreachable!("clap enforces a target source"),
            };
            let efficiencies = if maximize { None } else { gammas };
            cmd_mask_prob(
                &input,
                source,
                efficiencies,
                dim,
                path,
                ancilla,
                renormalize,
                out,
            )
        }
        Command::Simulate { masker, state } => cmd_simulate(&masker, state, out),
        Command::Figure1 {
            s_values,
            steps,
            out: path,
        } => cmd_figure1(s_values, steps, path, out),
    }
}

fn w(out: &mut dyn Write, text: std::fmt::Arguments) -> std::result::Result<(), Failure> {
    out.write_fmt(text)
        .map_err(|e| Failure::input(format!("writing output: {e}")))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        w($out, format_args!("{}\n", format_args!($($arg)*)))?
    };
}

fn num(x: f64) -> String {
    format_significant(x, 12)
}

fn complex(z: Complex64) -> String {
    if z.im == 0.0 {
        num(z.re)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", num(z.re), num(z.im.abs()))
    }
}

fn print_matrix(out: &mut dyn Write, name: &str, m: &CMatrix) -> std::result::Result<(), Failure> {
    say!(out, "{name}:");
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|z| complex(*z)).collect();
        say!(out, "  [{}]", cells.join(", "));
    }
    Ok(())
}

fn parse_complex(text: &str) -> std::result::Result<Complex64, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parse = |s: &str| {
        s.parse::<f64>().map_err(|_| {
            Failure::input(format!("--target-overlap: cannot parse `{s}` as a number"))
        })
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
        _ => Err(Failure::input("--target-overlap expects `re` or `re,im`")),
    }
}

fn cmd_verify_fixed_reducing(
    input: &Path,
    tol: f64,
    renormalize: bool,
    out: &mut dyn Write,
) -> Outcome {
    let file: StateSetFile = read_json(input)?;
    if file.dims.len() != 2 {
        return Err(Failure::input(format!(
            "field `dims`: expected two subsystems, found {}",
            file.dims.len()
        )));
    }
    let states = file.to_multipartite(renormalize, DEFAULT_NORM_TOL)?;
    let report = verify_fixed_reducing(&states, tol)?;
    for (k, d) in report.deviations.iter().enumerate() {
        say!(
            out,
            "state {}: marginal A deviation {}, marginal B deviation {}",
            k + 1,
            num(d.a),
            num(d.b)
        );
    }
    say!(out, "max deviation: {}", num(report.max_deviation));
    if report.passed {
        say!(out, "PASS");
        Ok(EXIT_OK)
    } else {
        say!(out, "FAIL");
        Ok(EXIT_DOMAIN)
    }
}

fn report_masker(masker: &AnyMasker, path: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let report = verify_masking(masker, VERIFY_TOL);
    say!(
        out,
        "unitarity residual: {}",
        num(report.unitarity_residual)
    );
    for k in 0..masker.len() {
        say!(
            out,
            "input {}: success probability {}, target fidelity {}",
            k + 1,
            num(report.success_probabilities[k]),
            num(report.fidelities[k])
        );
    }
    say!(
        out,
        "max marginal deviation: {}",
        num(report.max_marginal_deviation)
    );
    if let Some(path) = path {
        write_json(&path, &MaskerFile::from_masker(masker))?;
        say!(out, "wrote {}", path.display());
    }
    for f in &report.failures {
        say!(out, "failure: {f}");
    }
    if report.passed {
        say!(out, "PASS");
        Ok(EXIT_OK)
    } else {
        say!(out, "FAIL");
        Ok(EXIT_DOMAIN)
    }
}

fn cmd_mask_det(
    input: &Path,
    dim: Option<usize>,
    path: Option<PathBuf>,
    ancilla: usize,
    renormalize: bool,
    out: &mut dyn Write,
) -> Outcome {
    let inputs =
        read_json::<StateSetFile>(input)?.to_state_vectors(renormalize, DEFAULT_NORM_TOL)?;
    let d = dim.unwrap_or(inputs[0].dim());
    let options = MaskerOptions {
        ancilla_index: ancilla,
        ..Default::default()
    };
    let masker = build_deterministic(&inputs, d, None, &options)?;
    say!(
        out,
        "deterministic masker: {} inputs, d = {d}",
        inputs.len()
    );
    report_masker(&masker.into(), path, out)
}

enum TargetSource {
    File(PathBuf),
    Overlap(Complex64),
}

#[allow(clippy::too_many_arguments)]
fn cmd_mask_prob(
    input: &Path,
    source: TargetSource,
    gammas: Option<Vec<f64>>,
    dim: Option<usize>,
    path: Option<PathBuf>,
    ancilla: usize,
    renormalize: bool,
    out: &mut dyn Write,
) -> Outcome {
    let inputs: Vec<StateVector> =
        read_json::<StateSetFile>(input)?.to_state_vectors(renormalize, DEFAULT_NORM_TOL)?;
    let n = inputs.len();
    let targets = match source {
        TargetSource::File(p) => {
            let states =
                read_json::<StateSetFile>(&p)?.to_multipartite(renormalize, DEFAULT_NORM_TOL)?;
            FixedReducingSet::from_states(states, DEFAULT_MARGINAL_TOL)?
        }
        TargetSource::Overlap(c) => {
            if n != 2 {
                return Err(Failure::input(format!(
                    "--target-overlap needs exactly two input states, found {n}"
                )));
            }
            targets_with_overlap(dim.unwrap_or(inputs[0].dim()), c)?
        }
    };

    let a = gram(&inputs)?;
    let min_gram = a.min_eigenvalue();
    if min_gram <= crate::hilbert::DEFAULT_RANK_TOL {
        return Err(Error::LinearlyDependent {
            min_eigenvalue: min_gram,
        }
        .into());
    }
    let x_p = probe_weighted_gram(&targets.gram(), &vec![0.0; n]);
    let gammas = match gammas {
        Some(g) => g,
        None => maximize_general(&a, &x_p, &OptimizerOptions::default())?.gammas,
    };
    if gammas.len() != n {
        return Err(Failure::input(format!(
            "--gammas: expected {n} values, found {}",
            gammas.len()
        )));
    }
    let margin = crate::hilbert::psd_check(&remainder_matrix(a.matrix(), &x_p, &gammas), 0.0)?.1;
    let gamma_text: Vec<String> = gammas.iter().map(|g| num(*g)).collect();
    say!(out, "gammas: {}", gamma_text.join(", "));
    say!(
        out,
        "success probability: {}",
        num(success_probability(&gammas))
    );
    say!(out, "feasibility margin (min eigenvalue): {}", num(margin));

    let options = MaskerOptions {
        ancilla_index: ancilla,
        ..Default::default()
    };
    let masker = build_probabilistic(&inputs, &targets, &gammas, &options)?;
    say!(
        out,
        "probabilistic masker: {n} inputs, probe dimension {}",
        n + 1
    );
    report_masker(&masker.into(), path, out)
}

fn print_outcome(
    out: &mut dyn Write,
    k: usize,
    masker: &AnyMasker,
) -> std::result::Result<(DensityOperator, DensityOperator), Failure> {
    let outcome = simulate(masker, k)?;
    say!(out, "input {}:", k + 1);
    say!(
        out,
        "  success probability: {}",
        num(outcome.success_probability)
    );
    say!(out, "  expected: {}", num(masker.expected_success(k)));
    say!(
        out,
        "  fidelity to target: {}",
        num(outcome.fidelity_to_target)
    );
    print_matrix(out, "  marginal A", outcome.marginal_a.matrix())?;
    print_matrix(out, "  marginal B", outcome.marginal_b.matrix())?;
    Ok((outcome.marginal_a, outcome.marginal_b))
}

fn cmd_simulate(path: &Path, state: Option<usize>, out: &mut dyn Write) -> Outcome {
    let masker = read_json::<MaskerFile>(path)?.to_masker()?;
    let n = masker.len();
    match state {
        Some(k) => {
            if k == 0 || k > n {
                return Err(Failure::input(format!(
                    "--state {k} is out of range 1..={n}"
                )));
            }
            print_outcome(out, k - 1, &masker)?;
            Ok(EXIT_OK)
        }
        None => {
            for k in 0..n {
                print_outcome(out, k, &masker)?;
            }
            let report = verify_masking(&masker, VERIFY_TOL);
            say!(
                out,
                "cross-input marginal deviation: {}",
                num(report.max_marginal_deviation)
            );
            for f in &report.failures {
                say!(out, "failure: {f}");
            }
            if report.passed {
                say!(out, "PASS");
                Ok(EXIT_OK)
            } else {
                say!(out, "FAIL");
                Ok(EXIT_DOMAIN)
            }
        }
    }
}

fn cmd_figure1(
    s_values: Option<Vec<f64>>,
    steps: usize,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Outcome {
    let s_values = s_values.unwrap_or_else(|| FIGURE1_S_VALUES.to_vec());
    if let Some(bad) = s_values.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Failure::input(format!(
            "--s-values: {bad} is outside [0, 1]"
        )));
    }
    if steps < 2 {
        return Err(Failure::input("--steps must be at least 2"));
    }
    let rows = figure1_data(&s_values, steps)?;
    match path {
        Some(p) => {
            write_figure1_csv(&p, &rows)?;
            say!(out, "wrote {} rows to {}", rows.len(), p.display());
        }
        None => w(out, format_args!("{}", figure1_csv(&rows)))?,
    }
    Ok(EXIT_OK)
}
