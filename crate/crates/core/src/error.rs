use thiserror::Error;

/// Errors raised by the library. The CLI maps them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("near-resonant mass: |divisor| = {divisor:e} on cluster tuple {clusters:?} (ell = {ell}){}", step_suffix(*.step))]
    NearResonant {
        clusters: Vec<u32>,
        ell: usize,
        divisor: f64,
        step: Option<usize>,
    },

    #[error("unsupported manifold: {0}")]
    UnsupportedManifold(String),

    #[error("trajectory diverged at t = {time} (last valid time {last_valid_time}){}", eps_suffix(*.eps))]
    Divergence {
        time: f64,
        last_valid_time: f64,
        eps: Option<f64>,
    },

    #[error("generator flow failed: {0}")]
    FlowFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(s) => format!(" at normal-form step {s}"),
        None => String::new(),
    }
}

fn eps_suffix(eps: Option<f64>) -> String {
    match eps {
        Some(e) => format!(" for eps = {e}"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NearResonant { .. } | Error::Divergence { .. } | Error::FlowFailure(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Range(_) => "range",
            Error::NearResonant { .. } => "near-resonant-mass",
            Error::UnsupportedManifold(_) => "unsupported-manifold",
            Error::Divergence { .. } => "divergence",
            Error::FlowFailure(_) => "flow-failure",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
