use thiserror::Error;

/// Errors raised by the numerics and experiment pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation (NaN, ±∞, negative σ, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A derivative was requested where the function is not differentiable.
    #[error("derivative undefined: {0}")]
    UndefinedDerivative(String),

    /// A numerical procedure did not reach its accuracy target.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Caller violated an API contract (shape mismatch, bad parameter, wrong call order).
    #[error("usage error: {0}")]
    Usage(String),

    /// Timing could not be measured reliably.
    #[error("measurement error: {0}")]
    Measurement(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {reason}")]
    TrainingFailure { epoch: usize, reason: String },

    /// Malformed or missing input data.
    #[error("data error: {0}")]
    Data(String),

    /// A tabulated constant is not available for the requested arguments.
    #[error("range error: {0}")]
    Range(String),

    /// Too many non-finite cells to summarize a loss surface.
    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {x}")))
    }
}
