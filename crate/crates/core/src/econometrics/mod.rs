//! Estimators shared by every analysis: OLS, the within (fixed-effect)
//! transformation, logit maximum likelihood, and HAC covariance estimators.
//!
//! All estimators are pure functions of their inputs.

mod fit;
mod hac;
mod logit;
mod ols;
mod within;

pub use fit::{CovarianceKind, DesignMatrix, Estimator, FitResult, FitStat, FitSummary};
pub use hac::{
    bartlett_weight, default_nw_truncation, driscoll_kraay_se, hac_meat, hc0_se, newey_west_cov,
    newey_west_se, nw_lags, RobustCovariance,
};
pub use logit::{log_likelihood, logit_fit, logit_fit_with, LogitOptions};
pub use ols::{fe_ols_fit, ols_fit, RANK_TOLERANCE};
pub use within::within_transform;
