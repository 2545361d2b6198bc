use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{recovery_rate, ReceivershipRecord, SolvencyVariant};
use crate::econometrics::{ols_fit, DesignMatrix, FitResult};
use crate::error::{Error, Result};
use crate::prediction::percentile;

/// No-constant OLS of the recovery rate on the good, doubtful and worthless
/// shares of assets at suspension. Categories that are zero for every record
/// are left out of the design.
pub fn asset_quality_regression(records: &[ReceivershipRecord]) -> Result<FitResult> {
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut y = Vec::new();
    for r in records {
        let (Some(g), Some(d), Some(w)) = (r.estimated_good, r.estimated_doubtful, r.estimated_worthless) else {
            continue;
        };
        if !(r.assets_at_suspension > 0.0) {
            continue;
        }
        let a = r.assets_at_suspension;
        rows.push([g / a, d / a, w / a]);
        y.push(recovery_rate(r, SolvencyVariant::Baseline)?);
    }
    if rows.len() < 3 {
        return Err(Error::Validation(format!(
            "{} records with asset-quality assessments; need at least 3",
            rows.len()
        )));
    }
    let names = ["good", "doubtful", "worthless"];
    let keep: Vec<usize> = (0..3).filter(|k| rows.iter().any(|r| r[*k] != 0.0)).collect();
    if keep.is_empty() {
        return Err(Error::Degenerate("every asset-quality share is zero".into()));
    }
    let x = DMatrix::from_fn(rows.len(), keep.len(), |i, j| rows[i][keep[j]]);
    let design = DesignMatrix::new(
        keep.iter().map(|k| names[*k].to_string()).collect(),
        x,
        DVector::from_vec(y),
    )?;
    ols_fit(&design)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepositorLosses {
    pub n: usize,
    pub share_with_losses: f64,
    /// Mean loss among records with a loss; `None` when no record lost.
    pub conditional_loss: Option<f64>,
    pub unconditional_loss: f64,
}

/// Loss per record is `max(0, 1 - dividends_paid_pct)`. Records without a
/// dividend figure are skipped; `None` if none has one.
pub fn depositor_loss_stats(records: &[ReceivershipRecord]) -> Option<DepositorLosses> {
    let losses: Vec<f64> = records
        .iter()
        .filter_map(|r| r.dividends_paid_pct)
        .map(|d| (1.0 - d).max(0.0))
        .collect();
    if losses.is_empty() {
        return None;
    }
    let n = losses.len();
    let positive: Vec<f64> = losses.iter().copied().filter(|l| *l > 0.0).collect();
    Some(DepositorLosses {
        n,
        share_with_losses: positive.len() as f64 / n as f64,
        conditional_loss: (!positive.is_empty()).then(|| positive.iter().sum::<f64>() / positive.len() as f64),
        unconditional_loss: losses.iter().sum::<f64>() / n as f64,
    })
}

/// Quantiles (percent) of receivership duration in years; `None` without dates.
pub fn duration_quantiles(records: &[ReceivershipRecord], pcts: &[f64]) -> Option<Vec<(f64, f64)>> {
    let mut d: Vec<f64> = records.iter().filter_map(|r| r.duration_years()).collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    Some(pcts.iter().map(|p| (*p, percentile(&d, *p))).collect())
}
