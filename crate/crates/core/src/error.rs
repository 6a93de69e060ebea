use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the analytic and Monte Carlo routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The weights of a shifted-kernel sum add up to (almost) zero, so the
    /// collapsed centre is undefined.
    #[error("weight sum {magnitude:.3e} is below the degeneracy threshold {threshold:.3e}")]
    DegenerateWeightSum { magnitude: f64, threshold: f64 },

    #[error("final state {index} is unreachable: P = {probability:.3e} < {threshold:.3e}")]
    UnreachableFinalState {
        index: usize,
        probability: f64,
        threshold: f64,
    },

    /// Post-selection onto a state (nearly) orthogonal to the evolved initial
    /// state; the weak value diverges.
    #[error(
        "post-selection on final state {index} is ill-conditioned: |<f|U|I>|^2 = {probability:.3e} < {threshold:.3e}"
    )]
    IllConditionedPostselection {
        index: usize,
        probability: f64,
        threshold: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// A sampler was asked to draw with a negative probability.
    #[error("negative sampling weight {value:.6e} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("rejection envelope violated: ratio {ratio:.6e} > 1 at x = {x:.6e}")]
    EnvelopeFailure { ratio: f64, x: f64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),

    /// Malformed scenario file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid {path}: {message}")]
    Validation { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors caused by the input rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Validation { .. })
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
