use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not converge on [{lower}, {upper}]: estimate {value:e}, error {abs_error:e}")]
    QuadratureNonConvergence {
        lower: f64,
        upper: f64,
        value: f64,
        abs_error: f64,
    },

    #[error("{func} did not converge after {iterations} iterations")]
    IterationLimit { func: &'static str, iterations: usize },

    #[error("threshold bracket expansion failed; last bracket mu0 in [{lower:e}, {upper:e}]")]
    BracketExpansion { lower: f64, upper: f64 },

    #[error("Lambert-W argument {arg:e} lies outside the lower-branch domain [-1/e, 0) at SNR {snr:e}")]
    AsymptoticDomain { arg: f64, snr: f64 },

    #[error("on-off policy degenerate: activation probability {p_activation:e} at lambda0 = {lambda0:e}, SNR = {snr:e}")]
    DegeneratePolicy {
        lambda0: f64,
        snr: f64,
        p_activation: f64,
    },

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidMcConfig(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// True for failures of an iterative or adaptive numerical scheme, as
    /// opposed to bad inputs.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergence { .. }
                | Error::IterationLimit { .. }
                | Error::BracketExpansion { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
