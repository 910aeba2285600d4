use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("unsupported quadrature exactness {exactness} for dimension {dim} (maximum {max})")]
    UnsupportedQuadrature { dim: usize, exactness: usize, max: usize },

    #[error("index out of range: {what} {index} (length {len})")]
    OutOfRange { what: &'static str, index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerically singular matrix (pivot row {row})")]
    Singular { row: usize },

    #[error("linear solve inaccurate: relative residual {residual:.3e}")]
    InaccurateSolve { residual: f64 },

    #[error("Newton did not converge within {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("Newton line search failed to reduce the residual {residual:.3e} after {halvings} halvings at iteration {iteration}")]
    DampingFloor { iteration: usize, halvings: usize, residual: f64 },

    #[error("non-finite residual encountered at Newton iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("continuation failed at eps = {eps:e}: {source}")]
    Continuation {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("expression error in `{expr}`: {message}")]
    Expression { expr: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
