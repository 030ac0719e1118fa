use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants are grouped so that the CLI can map them onto exit codes:
/// configuration problems exit with 2, numerical budget problems with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("closed form requires a symmetric law (c_plus = c_minus), got c_plus = {c_plus}, c_minus = {c_minus}")]
    AsymmetricLaw { c_plus: f64, c_minus: f64 },

    #[error("density is singular at barrier endpoint z = {0}")]
    SingularPoint(f64),

    #[error("moment of order beta = {beta} is infinite for alpha = {alpha}")]
    InfiniteMoment { beta: f64, alpha: f64 },

    #[error("path {path_index} exceeded the step budget of {budget} steps")]
    BudgetExceeded { path_index: u64, budget: u64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("discretization rule produced a non-positive barrier ({value}) at t = {time}")]
    RuleViolation { time: f64, value: f64 },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("budget {budget} is outside the sampled cost range [{min}, {max}]")]
    BudgetOutOfRange { budget: f64, min: f64, max: f64 },

    #[error("minimum is not bracketed inside the search box [{lo}, {hi}] for {variable}: objective is monotone (best at {best})")]
    SearchBox {
        variable: &'static str,
        lo: f64,
        hi: f64,
        best: f64,
    },

    #[error("quadrature failed to reach tolerance {tol:e} (estimated error {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("log-log fit needs at least {needed} usable points, got {got}")]
    FitDegenerate { needed: usize, got: usize },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Whether this error stems from a numerical budget (step caps, search boxes,
    /// quadrature tolerance) rather than from bad input.
    pub fn is_numerical_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::SearchBox { .. }
                | Error::Quadrature { .. }
                | Error::FitDegenerate { .. }
                | Error::BudgetOutOfRange { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {v}")))
    }
}

pub(crate) fn ensure_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}
