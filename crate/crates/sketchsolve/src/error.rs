use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid singular-value spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("half bandwidth {half_bandwidth} out of range for n = {n}")]
    BandwidthOutOfRange { half_bandwidth: usize, n: usize },
    #[error("matrix market parse error at line {line}: {message}")]
    MatrixMarketParse { line: usize, message: String },
    #[error("inconsistent system: residual norm {residual_norm:.3e} exceeds the feasibility tolerance")]
    InfeasibleSystem { residual_norm: f64 },
    #[error("row-norm sampling is undefined for an all-zero matrix")]
    DegenerateDistribution,
    #[error("row {index} of the coefficient matrix is zero")]
    DegenerateRow { index: usize },
    #[error("selector requires a nonzero residual")]
    ZeroResidual,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown strategy token `{0}`")]
    UnknownStrategy(String),
    #[error("strategy acts on the wrong side: this driver needs a {expected}-action strategy")]
    StrategySideMismatch { expected: &'static str },
    #[error("exhaustive subset enumeration is capped at {cap} vectors, got {size}; use a sampling-based bound instead")]
    EnumerationCapExceeded { size: usize, cap: usize },
    #[error("stopping-time log has no rate recorded for epoch {epoch}")]
    IncompleteLog { epoch: usize },
    #[error("node {node} emitted sketch weight on row {row} it does not own")]
    ProtocolViolation { node: usize, row: usize },
    #[error("partition requires p <= n, got p = {p} for n = {n}")]
    PartitionTooFine { p: usize, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
