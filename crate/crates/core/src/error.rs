use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-conforming triangulation: {0}")]
    NonConforming(String),
    #[error("degenerate triangle {triangle}: area {area:e}")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("structured mesh generation failed: {0}")]
    GenerationFailed(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("nonzero flux {flux:e} on boundary edge {edge}")]
    NonzeroBoundaryFlux { edge: usize, flux: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    AsymmetricMatrix(f64),
    #[error("{solver} did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("{solver} breakdown after {iterations} iterations")]
    Breakdown {
        solver: &'static str,
        iterations: usize,
    },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("missing snapshots: {0}")]
    MissingSnapshots(String),
    #[error("identity violation in {property} (seed {seed}): {detail}")]
    IdentityViolation {
        property: String,
        seed: u64,
        detail: String,
    },
    #[error("order violation: {0}")]
    OrderViolation(String),
    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
