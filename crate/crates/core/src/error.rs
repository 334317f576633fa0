use core::fmt;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// A tradeoff function failed validation (asymmetric, non-convex, ...).
    InvalidTradeoff(&'static str),
    /// The tradeoff function is `1 - x` up to tolerance, so no noise can be canonical for it.
    TrivialTradeoff,
    /// The quantile recursion did not reach the linear core within the cap.
    RecursionCapExceeded { u: f64, cap: usize },
    /// A monotone size map could not be bracketed around the target.
    BracketFailure { target: f64, limit: f64 },
    /// Oscillatory quadrature could not meet its tolerance.
    QuadratureNonconvergence {
        estimated_error: f64,
        tolerance: f64,
        upper_limit: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            expected,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                expected,
            } => write!(f, "invalid parameter {name} = {value}: expected {expected}"),
            Error::InvalidTradeoff(why) => write!(f, "invalid tradeoff function: {why}"),
            Error::TrivialTradeoff => write!(f, "tradeoff function is trivial (f(x) = 1 - x)"),
            Error::RecursionCapExceeded { u, cap } => {
                write!(f, "quantile recursion exceeded {cap} steps at u = {u}")
            }
            Error::BracketFailure { target, limit } => write!(
                f,
                "could not bracket target size {target} within |shift| <= {limit}"
            ),
            Error::QuadratureNonconvergence {
                estimated_error,
                tolerance,
                upper_limit,
            } => write!(
                f,
                "quadrature did not converge: estimated error {estimated_error:e} > tolerance {tolerance:e} (upper limit {upper_limit})"
            ),
        }
    }
}

impl core::error::Error for Error {}
