use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("strain out of domain: {what} = {value:e}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at {location}: {detail}")]
    NonFinite { location: String, detail: String },

    #[error("no sign change on [{lo:e}, {hi:e}] (f = {f_lo:e}, {f_hi:e})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("root finder did not converge after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("solution not representable in floating point: {0}")]
    Resolution(String),

    #[error("shooting failed for cavity guess {cavity:e}: {source}")]
    Shooting {
        cavity: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn non_finite(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NonFinite {
            location: location.into(),
            detail: detail.into(),
        }
    }

    /// True for failures of a numerical solver, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Bracket { .. }
                | Error::NoConvergence { .. }
                | Error::StepUnderflow { .. }
                | Error::TooManySteps(_)
                | Error::Shooting { .. }
                | Error::Resolution(_)
                | Error::Domain { .. }
        )
    }
}
