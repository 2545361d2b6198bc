//! Heteroskedasticity and autocorrelation consistent covariance.
//!
//! Both estimators are sandwiches `B M B` with bread `B` taken from the fit
//! and a Bartlett-kernel meat
//!
//! ```text
//! M = sum_t h_t h_t' + sum_{j=1..L} w_j sum_{t>j} (h_t h_{t-j}' + h_{t-j} h_t'),
//! w_j = 1 - j / (L + 1),
//! ```
//!
//! where `h_t` is the score at time `t`. Newey-West uses the per-observation
//! scores of a time series; Driscoll-Kraay first sums the scores of all
//! observations sharing a date. No degrees-of-freedom correction is applied.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::fit::{CovarianceKind, DesignMatrix, FitResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RobustCovariance {
    pub vcov: DMatrix<f64>,
    pub se: DVector<f64>,
    pub kind: CovarianceKind,
}

impl RobustCovariance {
    fn new(vcov: DMatrix<f64>, kind: CovarianceKind) -> Self {
        let se = vcov.diagonal().map(|v| v.max(0.0).sqrt());
        RobustCovariance { vcov, se, kind }
    }

    /// Attach this covariance to a fit.
    pub fn apply(self, fit: FitResult) -> FitResult {
        fit.with_covariance(self.vcov, self.kind)
    }
}

pub fn bartlett_weight(lag: usize, max_lag: usize) -> f64 {
    1.0 - lag as f64 / (max_lag as f64 + 1.0)
}

/// The `S = 1.3 T^{1/2}` truncation rule.
pub fn default_nw_truncation(t: usize) -> f64 {
    1.3 * (t as f64).sqrt()
}

/// Number of lags implied by a (possibly fractional) truncation parameter.
pub fn nw_lags(truncation: f64) -> usize {
    truncation.max(0.0).floor() as usize
}

/// Bartlett HAC meat of time-ordered scores (rows = time).
pub fn hac_meat(scores: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let t = scores.nrows();
    let mut meat = scores.transpose() * scores;
    for j in 1..=lags.min(t.saturating_sub(1)) {
        let lead = scores.rows(j, t - j);
        let lag = scores.rows(0, t - j);
        let gamma = lead.transpose() * lag;
        meat += (&gamma + gamma.transpose()) * bartlett_weight(j, lags);
    }
    meat
}

fn scores(x: &DMatrix<f64>, residuals: &DVector<f64>) -> DMatrix<f64> {
    let mut s = x.clone();
    for (mut row, e) in s.row_iter_mut().zip(residuals.iter()) {
        row *= *e;
    }
    s
}

fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    let v = bread * meat * bread;
    (&v + v.transpose()) * 0.5
}

fn check_alignment(fit: &FitResult, design: &DesignMatrix) -> Result<()> {
    if design.nrows() != fit.residuals.len() || design.ncols() != fit.coefficients.len() {
        return Err(Error::Validation("design matrix does not match the fit".into()));
    }
    Ok(())
}

/// Heteroskedasticity-robust (HC0) covariance.
pub fn hc0_se(fit: &FitResult, design: &DesignMatrix) -> Result<RobustCovariance> {
    check_alignment(fit, design)?;
    let meat = hac_meat(&scores(design.x(), &fit.residuals), 0);
    Ok(RobustCovariance::new(sandwich(&fit.bread, &meat), CovarianceKind::Hc0))
}

/// Newey-West covariance from time-ordered scores and a bread matrix.
pub fn newey_west_cov(
    scores: &DMatrix<f64>,
    bread: &DMatrix<f64>,
    truncation: f64,
) -> Result<RobustCovariance> {
    if scores.nrows() < 3 {
        return Err(Error::Validation(format!(
            "Newey-West needs at least 3 time periods, got {}",
            scores.nrows()
        )));
    }
    if !(truncation >= 0.0) {
        return Err(Error::Validation(format!("truncation parameter must be >= 0, got {truncation}")));
    }
    let lags = nw_lags(truncation);
    let meat = hac_meat(scores, lags);
    Ok(RobustCovariance::new(sandwich(bread, &meat), CovarianceKind::NeweyWest { lags }))
}

/// Newey-West standard errors for a time-series fit whose rows are in time order.
pub fn newey_west_se(fit: &FitResult, design: &DesignMatrix, truncation: f64) -> Result<RobustCovariance> {
    check_alignment(fit, design)?;
    newey_west_cov(&scores(design.x(), &fit.residuals), &fit.bread, truncation)
}

/// Driscoll-Kraay standard errors: scores summed within each date, then a
/// Bartlett HAC over the ordered dates with `bandwidth` lags.
pub fn driscoll_kraay_se<D: Ord + Copy>(
    fit: &FitResult,
    design: &DesignMatrix,
    dates: &[D],
    bandwidth: usize,
) -> Result<RobustCovariance> {
    check_alignment(fit, design)?;
    if dates.len() != design.nrows() {
        return Err(Error::Validation(format!(
            "{} dates for {} rows",
            dates.len(),
            design.nrows()
        )));
    }
    let row_scores = scores(design.x(), &fit.residuals);
    let mut by_date: BTreeMap<D, DVector<f64>> = BTreeMap::new();
    for (d, row) in dates.iter().zip(row_scores.row_iter()) {
        let acc = by_date.entry(*d).or_insert_with(|| DVector::zeros(design.ncols()));
        *acc += row.transpose();
    }
    if by_date.len() < bandwidth + 2 {
        return Err(Error::Validation(format!(
            "Driscoll-Kraay with bandwidth {bandwidth} needs at least {} distinct dates, got {}",
            bandwidth + 2,
            by_date.len()
        )));
    }
    let p = design.ncols();
    let sums: Vec<DVector<f64>> = by_date.into_values().collect();
    let date_scores = DMatrix::from_fn(sums.len(), p, |i, j| sums[i][j]);
    let meat = hac_meat(&date_scores, bandwidth);
    Ok(RobustCovariance::new(
        sandwich(&fit.bread, &meat),
        CovarianceKind::DriscollKraay { bandwidth },
    ))
}
