//! Failure-prediction models (LPM and logit), expanding-window out-of-sample
//! backtests, and classification metrics.

mod backtest;
mod bins;
mod metrics;
mod spec;

pub use backtest::{
    expanding_oos, fit_failure_model, in_sample_predictions, FailureModel, Origin, Prediction,
    PredictionSet, MIN_OBS_PER_PARAM,
};
pub use bins::{binned_failure_prob, percentile, BinCell, BinTable};
pub use metrics::{confusion_at_cutoff, pr_curve, roc_and_auc, ClassificationCurve, Confusion, CurvePoint};
pub use spec::{ModelEstimator, ModelSpec, Regressor};
