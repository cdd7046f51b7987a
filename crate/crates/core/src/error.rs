use thiserror::Error;

/// Errors raised by the estimators, simulators and the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bandwidth {0}: must be finite and positive")]
    InvalidBandwidth(f64),

    #[error("invalid bandwidth {h}: expected a value in (0, 1/2)")]
    BandwidthOutOfRange { h: f64 },

    #[error("moment order {0} is not supported (max 4)")]
    UnsupportedMoment(usize),

    #[error("evaluation point {0} lies outside [0, 1]")]
    PointOutOfRange(f64),

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("singular design at x = {x}: det(S) = {det:e} (bandwidth too small for T?)")]
    SingularDesign { x: f64, det: f64 },

    #[error("degenerate denominator at x = {x}: {value:e} (residuals vanish in the window)")]
    DegenerateDenominator { x: f64, value: f64 },

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("bandwidth {h} infeasible: {skipped} of {total} validation centres lost their kernel window")]
    InfeasibleBandwidth { h: f64, skipped: usize, total: usize },

    #[error("no candidate bandwidth is feasible")]
    NoFeasibleBandwidth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid rate parameters: {0}")]
    InvalidParams(String),

    #[error("bandwidth rule violates the admissibility condition: {0}")]
    InvalidBandwidthRule(String),

    #[error("regression is degenerate: {0}")]
    DegenerateRegression(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("simplex search did not converge after {iterations} iterations (best objective {best_value})")]
    ConvergenceFailure {
        iterations: usize,
        best_value: f64,
        best_params: Vec<f64>,
    },

    #[error("{0}")]
    Data(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

/// Coarse classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Invalid parameters or configuration.
    Usage,
    /// Malformed, missing or unusable input data.
    Data,
    /// A numerical procedure failed on valid input.
    Numerical,
}

impl Error {
    /// Wraps the error with the name of the stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error beneath any stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self.root() {
            Error::InvalidBandwidth(_)
            | Error::BandwidthOutOfRange { .. }
            | Error::UnsupportedMoment(_)
            | Error::PointOutOfRange(_)
            | Error::InvalidConfig(_)
            | Error::InvalidParams(_)
            | Error::InvalidBandwidthRule(_) => ErrorCategory::Usage,
            Error::SeriesTooShort { .. } | Error::DegenerateSeries | Error::Data(_) | Error::Io(_) => {
                ErrorCategory::Data
            }
            _ => ErrorCategory::Numerical,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
