use thiserror::Error;

/// Every failure mode the laboratory can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),
    #[error("weight overflow guard: delta * s_max = {product:.3} exceeds {limit}")]
    OverflowGuard { product: f64, limit: f64 },
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("margin exceeded: {0}")]
    MarginExceeded(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("neck length R = {neck:.4} exceeds truncation s_max = {s_max:.4}")]
    NeckTooLong { neck: f64, s_max: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("incompatible neck: {0}")]
    IncompatibleNeck(String),
    #[error("point is not on the retract (residual {residual:.3e})")]
    NotOnRetract { residual: f64 },
    #[error("constraint not transversal (determinant {det:.3e})")]
    NotTransversal { det: f64 },
    #[error("no intersection with the constraint near the reference point: {0}")]
    NoIntersection(String),
    #[error("rank unstable: singular values cluster near the threshold ({0})")]
    RankUnstable(String),
    #[error("derivative missing for map `{0}`")]
    DerivativeMissing(String),
    #[error("no contraction: measured rate {rate:.4} >= 1")]
    NoContraction { rate: f64 },
    #[error("maximum iterations ({0}) exceeded")]
    MaxIterExceeded(usize),
    #[error("splitting invalid: {0}")]
    SplittingInvalid(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("linearization ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("surface combinatorics not stable: {0}")]
    NotStable(String),
    #[error("schema error at `{path}`: {message}")]
    SchemaError { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoContraction { .. }
                | Error::MaxIterExceeded(_)
                | Error::NewtonDiverged(_)
                | Error::IllConditioned(_)
                | Error::RankUnstable(_)
                | Error::NoIntersection(_)
        )
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
