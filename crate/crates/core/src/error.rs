use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cover does not reach point {point:?}")]
    Coverage { point: Vec<f64> },
    #[error("amplitude calibration failed: {0}")]
    Calibration(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("training diverged at step {step} (loss {loss:e})")]
    Training { step: usize, loss: f64, trace: Vec<f64> },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric overflow in {0}")]
    Overflow(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
