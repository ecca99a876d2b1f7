//! Monte Carlo estimators, rate fitting, moment diagnostics and the
//! randomized inequality harness.

mod error;
mod lemmas;
mod moments;

pub use error::{fit_rate, strong_error, ErrorPair, ErrorRow, ErrorTable, RateFit};
pub use lemmas::{
    convolution_weight, diffusion_hs_bound, diffusion_lipschitz, lyapunov_drift,
    nonlinearity_orthogonality, semigroup_increment, taming_commutator, taming_hessian_trace,
    taming_jacobian, taming_norm_cap, taming_sobolev, verify_lemmas, Inequality, LemmaCheck,
    LemmaReport, Trial, SLACK_TOLERANCE,
};
pub use moments::{exp_moment_estimate, moment_estimate, Estimate, LyapunovParams, MomentTable};

use thiserror::Error;

use crate::scheme::SchemeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("error row for resolution {resolution} is not positive ({error})")]
    NonPositiveError { resolution: f64, error: f64 },
    #[error("non-finite sample {sample} for resolution {resolution} of a tamed run")]
    NonFiniteSample { resolution: f64, sample: usize },
    #[error("moment order must be positive, got {0}")]
    BadMoment(f64),
    #[error("{0}")]
    Inconsistent(String),
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Sample mean and 95% half-width of the mean.
pub(crate) fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 || !mean.is_finite() {
        return (mean, if mean.is_finite() { 0.0 } else { f64::INFINITY });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}
