use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A mode or system violates a domain requirement (e.g. `Re lambda >= 0`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode is outside Lambda_tau: {0}")]
    OutsideRegion(String),

    #[error("infeasible delta {delta}: feasible interval is (0, {upper})")]
    InfeasibleDelta { delta: f64, upper: f64 },

    #[error("s = {s} is a characteristic root (|P(s)| = {residual:e})")]
    Pole { s: num_complex::Complex64, residual: f64 },

    #[error("Lambert W branch {branch} did not converge: {detail}")]
    BranchNotConverged { branch: i64, detail: String },

    #[error("argument principle failed: {0}")]
    ArgumentPrinciple(String),

    #[error("quadrature did not reach tolerance (best estimate {estimate}, error {error:e})")]
    QuadratureBudget { estimate: f64, error: f64 },

    #[error("no decay within horizon {horizon}: {detail}")]
    NoDecay { horizon: f64, detail: String },

    #[error("mode {index}: {source}")]
    Mode {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("spec error at {path}: {message}")]
    Spec { path: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_mode(self, index: usize) -> Self {
        Error::Mode { index, source: Box::new(self) }
    }
}
