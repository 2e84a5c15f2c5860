//! Numerical checks of the Fisher-information argument for gradient
//! fingerprints.
//!
//! Setting: `X ~ N(0, sigma_x^2)`, `Z = W X + K`, output `Y = f(Z)` and
//! gradient `D = W f'(Z)`. For the parameter `W`:
//!
//! - `I_Z(W) = 2 / W^2` (normal family with variance `W^2 sigma_x^2`);
//! - `I_Y(W) <= I_Z(W)` since `f` does not depend on `W`;
//! - to first order `D ~ N(c1 W, W^4 c2^2 sigma_x^2)` with `c1 = f'(K)`,
//!   `c2 = f''(K)`, giving
//!   `I_D(W) = (2 / W^2) (c1^2 / (2 W^2 c2^2 sigma_x^2) + 4)`.
//!
//! Closed forms are evaluated directly; `I_Y` is estimated by Monte Carlo
//! with central finite differences of the log-density.

mod activation;
mod estimate;
mod theorem;

pub use activation::Activation;
pub use estimate::{default_fd_step, mc_fisher, normal_log_density, FisherEstimate, McConfig};
pub use theorem::{
    fisher_d_closed, fisher_d_closed_coeffs, fisher_d_mc, fisher_normal_closed, fisher_y_mc,
    verify_theorem, DClosed, ScalarModel, TheoremReport, DPI_TOLERANCE, MAX_REL_STDERR,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FisherError {
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("W must be non-zero and finite, got {0}")]
    InvalidWeight(f64),
    #[error("sigma_x must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("f''(K) is zero; the second-order term the bound relies on vanishes")]
    ZeroCurvature,
    #[error("{0} is not strictly monotonic; its pushforward density is not evaluable")]
    NonMonotonic(Activation),
    #[error("inverse of {activation} undefined at y = {y}")]
    InverseOutOfDomain { activation: Activation, y: f64 },
    #[error("log-density is not finite at sample {sample} (theta = {theta})")]
    NonFiniteLogDensity { sample: f64, theta: f64 },
    #[error("invalid Monte Carlo settings: {0}")]
    InvalidSettings(String),
}

pub type Result<T> = std::result::Result<T, FisherError>;
