use thiserror::Error;

/// Errors raised by model construction, inference and decoding.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid observations: {0}")]
    InvalidObservations(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid label map: {0}")]
    InvalidLabels(String),

    #[error("direct-likelihood emissions cannot generate observations")]
    DirectLikelihoodNotGenerative,

    #[error("observation sequence has zero probability under the model")]
    ZeroEvidence,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("block length k={k} out of range for horizon T={horizon}")]
    KOutOfRange { k: usize, horizon: usize },

    #[error("every path has infinite risk under the requested objective")]
    NoFinitePath,

    #[error("instance too large for enumeration: {states}^{horizon} paths")]
    InstanceTooLarge { states: usize, horizon: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code, used for CLI diagnostics and exit status.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "E_INVALID_MODEL",
            Error::InvalidObservations(_) => "E_INVALID_OBS",
            Error::InvalidWeights(_) => "E_INVALID_WEIGHTS",
            Error::InvalidLabels(_) => "E_INVALID_LABELS",
            Error::DirectLikelihoodNotGenerative => "E_NOT_GENERATIVE",
            Error::ZeroEvidence => "E_ZERO_EVIDENCE",
            Error::IndexOutOfRange(_) => "E_INDEX_RANGE",
            Error::KOutOfRange { .. } => "E_K_RANGE",
            Error::NoFinitePath => "E_NO_FINITE_PATH",
            Error::InstanceTooLarge { .. } => "E_TOO_LARGE",
            Error::Parse(_) => "E_PARSE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
