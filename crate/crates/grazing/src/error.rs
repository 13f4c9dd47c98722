use thiserror::Error;

/// Errors raised by the simulators, verifiers and configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("quadrature did not converge on [{a}, {b}]: estimate {value}, error {error} after {intervals} intervals")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        intervals: usize,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("rate overflow: {expected:.1} expected events per particle in one step exceeds the cap {cap}; reduce dt or raise v_floor")]
    Stability { expected: f64, cap: f64 },
    #[error("non-finite velocity after step {step} at particles {indices:?}")]
    Instability { step: u64, indices: Vec<usize> },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
