use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fourier quadrature did not converge at x = {x:e} (achieved error {achieved:e})")]
    Quadrature { x: f64, achieved: f64 },

    #[error("integration failed at y = {y:e}: {reason} (worst channel pair {worst:?})")]
    Integration {
        y: f64,
        reason: IntegrationFailure,
        worst: (i32, i32),
    },

    #[error("linear system is ill-conditioned (condition estimate {estimate:e})")]
    IllConditioned { estimate: f64 },

    #[error("Bessel function evaluation failed for order {order} at z = {z_re:e}{z_im:+e}i")]
    Bessel { order: i32, z_re: f64, z_im: f64 },

    #[error("eigensolver failed for a {size}x{size} matrix")]
    Eigen { size: usize },

    #[error("channel count did not converge up to N = {n_max} (last change {last_change:e})")]
    ChannelNonConvergence {
        n_max: usize,
        last_change: f64,
        /// Result at the largest N tried.
        best: Option<Box<crate::floquet::ScatteringResult>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationFailure {
    StepUnderflow,
    NonFinite,
    TooManySteps,
}

impl std::fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::StepUnderflow => "step size underflow",
            Self::NonFinite => "non-finite amplitude",
            Self::TooManySteps => "step budget exhausted",
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
