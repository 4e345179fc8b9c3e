use thiserror::Error;

/// Error type shared by every module in the crate.
///
/// Validation failures carry the measured defect so callers (and the CLI
/// state-file loader) can report which invariant broke and by how much.
#[derive(Error, Debug)]
pub enum Error {
    #[error("duplicate subsystem label '{0}'")]
    DuplicateLabel(String),

    #[error("unknown subsystem label '{0}'")]
    UnknownLabel(String),

    #[error("empty subsystem list")]
    EmptyLayout,

    #[error("subsystem '{label}' has dimension 0")]
    ZeroDimension { label: String },

    #[error("matrix is {rows}x{cols}, expected square of size {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },

    #[error("vector has length {len}, expected {expected}")]
    LengthMismatch { len: usize, expected: usize },

    #[error("matrix is not Hermitian: max |rho - rho^dag| entry = {defect:.3e} (tolerance 1e-8)")]
    NotHermitian { defect: f64 },

    #[error("trace deviates from 1 by {defect:.3e} (tolerance 1e-8)")]
    TraceDeviation { defect: f64 },

    #[error(
        "matrix is not positive semidefinite: min eigenvalue = {min_eigenvalue:.3e} (floor -1e-10)"
    )]
    NotPositive { min_eigenvalue: f64 },

    #[error("state vector norm deviates from 1 by {defect:.3e} (tolerance 1e-10)")]
    NormDeviation { defect: f64 },

    #[error("Kraus operators are not complete: max |sum A_k^dag A_k - I| entry = {defect:.3e} (tolerance 1e-8)")]
    IncompleteKraus { defect: f64 },

    #[error("Kraus operator {index} is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    KrausShape {
        index: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("ensemble probabilities sum to {sum}, deviating from 1 by more than 1e-10")]
    ProbabilitySum { sum: f64 },

    #[error("negative probability {value:.3e} at position {index}")]
    NegativeProbability { value: f64, index: usize },

    #[error("cannot trace out every subsystem")]
    TraceEverything,

    #[error("layouts differ: {context}")]
    LayoutMismatch { context: String },

    #[error("partition blocks overlap on label '{0}'")]
    OverlappingBlocks(String),

    #[error("partition block {index} is empty")]
    EmptyBlock { index: usize },

    #[error("partition needs at least {required} blocks, got {got}")]
    TooFewBlocks { required: usize, got: usize },

    #[error("extension does not reduce to the declared base state: max entry defect = {defect:.3e} (tolerance 1e-8)")]
    ReductionMismatch { defect: f64 },

    #[error("malformed party assignment: {0}")]
    MalformedParties(String),

    #[error("ansatz cannot embed the purifier: d_Aprime*d_Bprime*d_env = {capacity} < rank {rank}; need d_env >= {min_d_env}")]
    Embeddability {
        capacity: usize,
        rank: usize,
        min_d_env: usize,
    },

    #[error("ansatz parameter vector has length {len}, expected {expected} for generator dimension {dim}")]
    ParamLength {
        len: usize,
        expected: usize,
        dim: usize,
    },

    #[error("invalid optimizer configuration: {0}")]
    BadConfig(String),

    #[error("invalid route plan: {0}")]
    InvalidPlan(String),

    #[error("invalid argument: {0}")]
    BadArgument(String),

    #[error("state file '{path}': {reason}")]
    BadStateFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
