use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires {required}, got {actual}")]
    UnsupportedScenario {
        required: &'static str,
        actual: String,
    },

    #[error("degenerate closure: {0}")]
    DegenerateClosure(&'static str),

    #[error("invalid edge list: {0}")]
    InvalidEdgeList(String),

    #[error("absorbing state: total event rate is zero")]
    AbsorbedState,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("no admissible root of the steady-state quartic")]
    NoAdmissibleRoot,

    #[error("steady-state coordinate {name} is negative ({value:e})")]
    NegativeCoordinate { name: &'static str, value: f64 },

    #[error("no transcritical threshold: denominator {0:e} is not positive")]
    NoThreshold(f64),

    #[error("state space for N = {n} exceeds the cap N <= {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("zero eigenvalue is not simple; stationary vector is not unique")]
    MultiplicityWarning,

    #[error("lumping is not exact: rate deviation {0:e}")]
    ExactnessViolation(f64),

    #[error("eigensolver did not converge on a {0}x{0} matrix")]
    EigenConvergence(usize),

    #[error("series too short: need {needed} samples, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("final segment is not pseudo-stationary: {0}")]
    NoStationaryTail(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// True for errors that come from malformed input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidParams(_)
                | Error::UnsupportedScenario { .. }
                | Error::InvalidEdgeList(_)
                | Error::CapExceeded { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
