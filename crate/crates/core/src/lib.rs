//! Quantitative toolkit for studying bank failures.
//!
//! The crate covers the full pipeline from call-report ingestion to
//! receivership analysis:
//!
//! - [`panel`]: loading, validation, fundamentals, growth quintiles, labels.
//! - [`econometrics`]: OLS, within transformation, logit, Driscoll-Kraay and
//!   Newey-West covariance.
//! - [`event_study`]: pre-failure dynamics in event time.
//! - [`prediction`]: failure-prediction models, expanding-window backtests and
//!   classification metrics.
//! - [`aggregate`]: aggregate predicted failure rates and their regression on
//!   realized rates.
//! - [`receivership`]: recovery rates, leverage, insolvency grids, causes of
//!   failure, depositor losses and required excess returns.
//! - [`synth`]: a seeded synthetic data generator with known ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod econometrics;
pub mod error;
pub mod event_study;
pub mod panel;
pub mod period;
pub mod prediction;
pub mod receivership;
pub mod synth;

pub use error::{Error, Result};
