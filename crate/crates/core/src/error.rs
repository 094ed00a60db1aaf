use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid coupling configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("collective mode {mode} out of range 1..={n_modes}")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("basis of {count} elements exceeds the configured limit of {limit}")]
    BasisLimit { count: usize, limit: usize },
    #[error("no closed-form expansion for the {0} family")]
    NoClosedForm(&'static str),
    #[error("intensity split is undefined for a single oscillator")]
    SplitUndefined,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("truncation tail mass {tail:.3e} exceeds threshold {threshold:.3e}")]
    Truncation { tail: f64, threshold: f64 },
    #[error("truncation leak: population {mass:.3e} near the cutoff at t = {time}")]
    TruncationLeak { mass: f64, time: f64 },
    #[error("integrator did not converge after {refinements} step halvings (max channel change {change:.3e})")]
    StepSize { refinements: usize, change: f64 },
    #[error("numerical contract violated: {0}")]
    Contract(String),
}

impl Error {
    /// True for failures of a numerical contract (truncation, convergence,
    /// tolerance), false for invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::TruncationLeak { .. }
                | Error::StepSize { .. }
                | Error::Contract(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
