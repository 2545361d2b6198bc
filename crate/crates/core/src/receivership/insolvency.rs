use serde::{Deserialize, Serialize};

use super::ReceivershipRecord;
use crate::error::{Error, Result};

/// How the solvency ratio `l / R` is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvencyVariant {
    #[default]
    Baseline,
    /// Shareholder (double-liability) collections count as recovered.
    WithDoubleLiability,
    /// Leverage uses deposits at suspension in place of claims proved.
    DepositsAtSuspensionDenominator,
}

fn asset_base(r: &ReceivershipRecord) -> Result<f64> {
    let base = r.assets_at_suspension + r.additional_assets_received;
    if !(base > 0.0) {
        return Err(Error::Validation(format!("bank {}: zero asset base", r.bank_id)));
    }
    Ok(base)
}

/// Cash collected by the receiver over the book value of assets.
pub fn recovery_rate(r: &ReceivershipRecord, variant: SolvencyVariant) -> Result<f64> {
    let base = asset_base(r)?;
    let collected = match variant {
        SolvencyVariant::WithDoubleLiability => r.collected_from_assets + r.collected_from_shareholders,
        _ => r.collected_from_assets,
    };
    Ok(collected / base)
}

/// Liabilities over the book value of assets; non-deposit liabilities are
/// taken at face value.
pub fn leverage(r: &ReceivershipRecord, variant: SolvencyVariant) -> Result<f64> {
    let base = asset_base(r)?;
    let claims = match variant {
        SolvencyVariant::DepositsAtSuspensionDenominator => r.deposits_at_suspension.ok_or_else(|| {
            Error::Validation(format!("bank {}: deposits at suspension missing", r.bank_id))
        })?,
        _ => r.claims_proved,
    };
    Ok((claims + r.offsets + r.secured_preferred_paid) / base)
}

/// Fundamental insolvency: `(1 + v) / (1 - rho) < l / R`, strictly.
pub fn insolvency_flag(leverage: f64, recovery: f64, rho: f64, v: f64) -> Result<bool> {
    if !(recovery > 0.0) {
        return Err(Error::Validation(format!("recovery rate must be positive, got {recovery}")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Validation(format!("rho must lie in [0, 1), got {rho}")));
    }
    if !(v >= 0.0) {
        return Err(Error::Validation(format!("v must be nonnegative, got {v}")));
    }
    Ok((1.0 + v) / (1.0 - rho) < leverage / recovery)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunFilter {
    #[default]
    All,
    RunOnly,
    NoRunOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub filter: RunFilter,
    pub variant: SolvencyVariant,
}

/// Run-flagged failures split by the insolvency condition, per cell, over
/// records with deposit data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunPartition {
    pub n_with_deposits: usize,
    pub run_count: usize,
    pub run_insolvent: Vec<Vec<usize>>,
    pub run_solvent: Vec<Vec<usize>>,
    /// Share of failures that were run-flagged and not insolvent.
    pub run_solvent_share: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsolvencyGrid {
    pub rho_values: Vec<f64>,
    pub v_values: Vec<f64>,
    pub filter: RunFilter,
    pub variant: SolvencyVariant,
    pub n_records: usize,
    /// `insolvent[i][j]` counts records insolvent at `rho_values[i]`, `v_values[j]`.
    pub insolvent: Vec<Vec<usize>>,
    pub shares: Vec<Vec<f64>>,
    /// Present when any record carries deposit data.
    pub run_partition: Option<RunPartition>,
}

impl InsolvencyGrid {
    /// Matrix-form table: rows are rho, columns are v.
    pub fn to_table(&self, delimiter: char) -> String {
        let d = delimiter;
        let mut s = String::from("rho\\v");
        for v in &self.v_values {
            s.push_str(&format!("{d}{v}"));
        }
        s.push('\n');
        for (rho, row) in self.rho_values.iter().zip(&self.shares) {
            s.push_str(&rho.to_string());
            for share in row {
                s.push_str(&format!("{d}{share}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Share of fundamentally insolvent banks over a (rho, v) grid, baseline ratio.
pub fn insolvency_share_grid(
    records: &[ReceivershipRecord],
    rho_grid: &[f64],
    v_grid: &[f64],
    filter: RunFilter,
) -> Result<InsolvencyGrid> {
    insolvency_share_grid_with(records, rho_grid, v_grid, &GridOptions { filter, variant: SolvencyVariant::Baseline })
}

pub fn insolvency_share_grid_with(
    records: &[ReceivershipRecord],
    rho_grid: &[f64],
    v_grid: &[f64],
    opts: &GridOptions,
) -> Result<InsolvencyGrid> {
    if rho_grid.is_empty() || v_grid.is_empty() {
        return Err(Error::Config("rho and v grids must be nonempty".into()));
    }
    let kept: Vec<&ReceivershipRecord> = match opts.filter {
        RunFilter::All => records.iter().collect(),
        RunFilter::RunOnly => records.iter().filter(|r| r.run_flag() == Some(true)).collect(),
        RunFilter::NoRunOnly => records.iter().filter(|r| r.run_flag() == Some(false)).collect(),
    };
    if kept.is_empty() {
        return Err(Error::Validation(format!("no receivership records left under filter {:?}", opts.filter)));
    }
    let ratios: Vec<(f64, f64, Option<bool>)> = kept
        .iter()
        .map(|r| Ok((leverage(r, opts.variant)?, recovery_rate(r, opts.variant)?, r.run_flag())))
        .collect::<Result<_>>()?;

    let (nr, nv) = (rho_grid.len(), v_grid.len());
    let mut insolvent = vec![vec![0usize; nv]; nr];
    let mut run_insolvent = vec![vec![0usize; nv]; nr];
    let mut run_solvent = vec![vec![0usize; nv]; nr];
    for (i, &rho) in rho_grid.iter().enumerate() {
        for (j, &v) in v_grid.iter().enumerate() {
            for &(l, rr, run) in &ratios {
                let flag = insolvency_flag(l, rr, rho, v)?;
                insolvent[i][j] += usize::from(flag);
                if run == Some(true) {
                    if flag {
                        run_insolvent[i][j] += 1;
                    } else {
                        run_solvent[i][j] += 1;
                    }
                }
            }
        }
    }
    let n = ratios.len();
    let shares = insolvent.iter().map(|row| row.iter().map(|c| *c as f64 / n as f64).collect()).collect();
    let n_with_deposits = ratios.iter().filter(|r| r.2.is_some()).count();
    let run_partition = (n_with_deposits > 0).then(|| RunPartition {
        n_with_deposits,
        run_count: ratios.iter().filter(|r| r.2 == Some(true)).count(),
        run_solvent_share: run_solvent
            .iter()
            .map(|row| row.iter().map(|c| *c as f64 / n_with_deposits as f64).collect())
            .collect(),
        run_insolvent,
        run_solvent,
    });
    Ok(InsolvencyGrid {
        rho_values: rho_grid.to_vec(),
        v_values: v_grid.to_vec(),
        filter: opts.filter,
        variant: opts.variant,
        n_records: n,
        insolvent,
        shares,
        run_partition,
    })
}

#[cfg(test)]
mod tests {
    use super::super::record;
    use super::*;

    #[test]
    fn recovery_examples() {
        let mut r = record(90.0, 52.0, 0.0);
        r.additional_assets_received = 10.0;
        assert_eq!(recovery_rate(&r, SolvencyVariant::Baseline).unwrap(), 0.52);
        assert_eq!(recovery_rate(&record(40.0, 40.0, 0.0), SolvencyVariant::Baseline).unwrap(), 1.0);
        r.collected_from_shareholders = 8.0;
        assert_eq!(recovery_rate(&r, SolvencyVariant::WithDoubleLiability).unwrap(), 0.6);
        assert!(recovery_rate(&record(0.0, 0.0, 0.0), SolvencyVariant::Baseline).is_err());
    }

    #[test]
    fn leverage_examples() {
        let mut r = record(100.0, 50.0, 85.0);
        r.secured_preferred_paid = 5.0;
        assert!((leverage(&r, SolvencyVariant::Baseline).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(leverage(&record(100.0, 50.0, 0.0), SolvencyVariant::Baseline).unwrap(), 0.0);
        assert!(leverage(&r, SolvencyVariant::DepositsAtSuspensionDenominator).is_err());
        r.deposits_at_suspension = Some(70.0);
        assert!((leverage(&r, SolvencyVariant::DepositsAtSuspensionDenominator).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn insolvency_examples() {
        assert!(insolvency_flag(0.9, 0.52, 0.0, 0.0).unwrap());
        assert!(!insolvency_flag(0.9, 0.95, 0.0, 0.0).unwrap());
        assert!(!insolvency_flag(0.5, 0.5, 0.0, 0.0).unwrap(), "boundary is solvent");
        assert!(insolvency_flag(0.5, 0.0, 0.0, 0.0).is_err());
        assert!(insolvency_flag(0.5, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn grid_and_partition() {
        let mut recs = Vec::new();
        for (i, (collected, claims)) in [(52.0, 90.0), (95.0, 90.0), (60.0, 70.0), (30.0, 95.0)].iter().enumerate() {
            let mut r = record(100.0, *collected, *claims);
            r.deposits_last_call = Some(100.0);
            r.deposits_at_suspension = Some(if i % 2 == 0 { 80.0 } else { 99.0 });
            recs.push(r);
        }
        let g = insolvency_share_grid(&recs, &[0.0, 0.1, 0.3], &[0.0, 0.05, 0.5], RunFilter::All).unwrap();
        assert_eq!(g.insolvent[0][0], 3);
        let p = g.run_partition.as_ref().unwrap();
        assert_eq!(p.run_count, 2);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.run_insolvent[i][j] + p.run_solvent[i][j], p.run_count);
            }
        }
        let runs = insolvency_share_grid(&recs, &[0.0], &[0.0], RunFilter::RunOnly).unwrap();
        assert_eq!(runs.n_records, 2);
        assert!(g.to_table(',').starts_with("rho\\v,0,0.05,0.5\n0,0.75,"));
    }

    #[test]
    fn empty_after_filter_is_error() {
        let recs = vec![record(100.0, 50.0, 90.0)];
        assert!(insolvency_share_grid(&recs, &[0.0], &[0.0], RunFilter::RunOnly).is_err());
    }
}
