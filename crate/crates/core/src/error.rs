use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown subsystem label `{0}`")]
    UnknownSubsystem(String),

    #[error("expected a bipartite state, found {parts} subsystems")]
    NotBipartite { parts: usize },

    #[error(
        "gram matrices differ by {max_deviation:e}; no unitary maps one family onto the other"
    )]
    GramMismatch { max_deviation: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("matrix has negative eigenvalue {min_eigenvalue:e}")]
    NegativeEigenvalue { min_eigenvalue: f64 },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("unitary entry ({row}, {col}) = {magnitude:e} couples different eigenvalues of the marginal")]
    BlockStructure {
        row: usize,
        col: usize,
        magnitude: f64,
    },

    #[error("states are not fixed reducing (max marginal deviation {max_deviation:e})")]
    NotFixedReducing { max_deviation: f64 },

    #[error("{n} states cannot be handled in dimension {d}")]
    TooManyStates { n: usize, d: usize },

    #[error("overlap magnitude {magnitude} exceeds 1")]
    OverlapOutOfRange { magnitude: f64 },

    #[error("inputs are not orthonormal (max off-diagonal gram entry {max_offdiag:e})")]
    NotOrthonormal { max_offdiag: f64 },

    #[error("inputs are linearly dependent (min gram eigenvalue {min_eigenvalue:e})")]
    LinearlyDependent { min_eigenvalue: f64 },

    #[error("efficiency {index} = {value} is outside (0, 1]")]
    InvalidEfficiency { index: usize, value: f64 },

    #[error("efficiencies are infeasible (min eigenvalue of A - sqrt(G) X sqrt(G) is {min_eigenvalue:e})")]
    Infeasible { min_eigenvalue: f64 },

    #[error("efficiency {index} = 1 requires a vanishing failure branch (residual {residual:e})")]
    BoundaryEfficiency { index: usize, residual: f64 },

    #[error("index {index} out of range for {len} states")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{0}")]
    InvalidArgument(String),
}
