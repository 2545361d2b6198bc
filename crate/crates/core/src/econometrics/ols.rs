use std::hash::Hash;

use nalgebra::DMatrix;

use super::fit::{CovarianceKind, DesignMatrix, Estimator, FitResult, FitStat};
use super::within::{group_count, within_transform};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn numerical_rank(r: &DMatrix<f64>, scale: f64) -> usize {
    if r.ncols() == 0 {
        return 0;
    }
    r.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > RANK_TOLERANCE * scale)
        .count()
}

/// Names of columns involved in linear dependencies, found by adding columns
/// one at a time to the triangular factor.
fn collinear_columns(r: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let scale = r.clone().svd(false, false).singular_values.max();
    let mut kept: Vec<usize> = Vec::new();
    let mut involved: Vec<usize> = Vec::new();
    for j in 0..r.ncols() {
        let mut trial = kept.clone();
        trial.push(j);
        let sub = r.select_columns(&trial);
        if numerical_rank(&sub, scale) == trial.len() {
            kept.push(j);
            continue;
        }
        involved.push(j);
        if kept.is_empty() {
            continue;
        }
        let basis = r.select_columns(&kept);
        let target = r.column(j).into_owned();
        if let Ok(c) = basis.svd(true, true).solve(&target, RANK_TOLERANCE * scale) {
            let cmax = c.amax();
            for (k, v) in kept.iter().zip(c.iter()) {
                if v.abs() > 1e-8 * cmax.max(1e-300) {
                    involved.push(*k);
                }
            }
        }
    }
    involved.sort_unstable();
    involved.dedup();
    involved.into_iter().map(|i| names[i].clone()).collect()
}

/// Least squares by Householder QR with an SVD rank check on the triangular
/// factor.
pub fn ols_fit(design: &DesignMatrix) -> Result<FitResult> {
    fit_least_squares(design, Estimator::Ols, 0)
}

/// Fixed-effects OLS: within-transform by `groups`, then OLS without intercept.
pub fn fe_ols_fit<G: Hash + Eq>(design: &DesignMatrix, groups: &[G]) -> Result<FitResult> {
    let demeaned = within_transform(design, groups)?;
    fit_least_squares(&demeaned, Estimator::FeOls, group_count(groups))
}

fn fit_least_squares(design: &DesignMatrix, estimator: Estimator, absorbed: usize) -> Result<FitResult> {
    let x = design.x();
    let y = design.y();
    let (n, p) = (x.nrows(), x.ncols());
    if p == 0 {
        return Err(Error::Validation("design matrix has no columns".into()));
    }

    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.clone().svd(false, false).singular_values.max();
    if !(scale > 0.0) || numerical_rank(&r, scale) < p {
        return Err(Error::RankDeficient { columns: collinear_columns(&r, design.names()) });
    }

    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p).into_owned();
    let beta = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::RankDeficient { columns: design.names().to_vec() })?;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::RankDeficient { columns: design.names().to_vec() })?;
    let bread = &r_inv * r_inv.transpose();
    let bread = (&bread + bread.transpose()) * 0.5;

    let fitted = x * &beta;
    let residuals = y - fitted;
    let ssr = residuals.norm_squared();
    let r_squared = {
        let tss = if design.has_intercept() {
            let mean = y.mean();
            y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        } else {
            y.norm_squared()
        };
        if tss > 0.0 {
            1.0 - ssr / tss
        } else {
            0.0
        }
    };
    let dof = n.saturating_sub(p + absorbed);
    let sigma2 = if dof > 0 { ssr / dof as f64 } else { 0.0 };
    let vcov = &bread * sigma2;
    let se = vcov.diagonal().map(|v| v.max(0.0).sqrt());

    Ok(FitResult {
        names: design.names().to_vec(),
        coefficients: beta,
        vcov,
        se,
        n_obs: n,
        stat: FitStat::RSquared(r_squared),
        estimator,
        covariance: CovarianceKind::Classical,
        bread,
        residuals,
        iterations: None,
    })
}
