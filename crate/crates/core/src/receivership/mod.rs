//! Receivership records: recovery rates, leverage, the fundamental-insolvency
//! condition and its (rho, v) grids, asset quality, depositor losses, causes of
//! failure, and required excess returns on deposits.

mod causes;
mod excess;
mod insolvency;
mod losses;

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{BankId, Delimiter, RUN_OUTFLOW_THRESHOLD};

pub use causes::{classify_cause, CauseCategory, CauseMapping, CauseRule};
pub use excess::{required_excess_return, required_excess_return_numeric, trimmed, Utility};
pub use insolvency::{
    insolvency_flag, insolvency_share_grid, insolvency_share_grid_with, leverage, recovery_rate,
    GridOptions, InsolvencyGrid, RunFilter, RunPartition, SolvencyVariant,
};
pub use losses::{
    asset_quality_regression, depositor_loss_stats, duration_quantiles, DepositorLosses,
};

/// Tolerance on the asset-quality breakdown exceeding assets at suspension.
pub const QUALITY_TOLERANCE: f64 = 0.01;

/// One national bank placed in receivership.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReceivershipRecord {
    pub bank_id: BankId,
    #[serde(default)]
    pub receiver_appointed: Option<NaiveDate>,
    #[serde(default)]
    pub closed: Option<NaiveDate>,
    pub assets_at_suspension: f64,
    pub additional_assets_received: f64,
    pub collected_from_assets: f64,
    pub collected_from_shareholders: f64,
    pub claims_proved: f64,
    pub secured_preferred_paid: f64,
    pub offsets: f64,
    #[serde(default)]
    pub deposits_at_suspension: Option<f64>,
    #[serde(default)]
    pub deposits_last_call: Option<f64>,
    #[serde(default)]
    pub estimated_good: Option<f64>,
    #[serde(default)]
    pub estimated_doubtful: Option<f64>,
    #[serde(default)]
    pub estimated_worthless: Option<f64>,
    #[serde(default)]
    pub dividends_paid_pct: Option<f64>,
    #[serde(default)]
    pub cause: String,
}

impl ReceivershipRecord {
    pub fn validate(&self) -> Result<()> {
        let currency = [
            ("assets_at_suspension", Some(self.assets_at_suspension)),
            ("additional_assets_received", Some(self.additional_assets_received)),
            ("collected_from_assets", Some(self.collected_from_assets)),
            ("collected_from_shareholders", Some(self.collected_from_shareholders)),
            ("claims_proved", Some(self.claims_proved)),
            ("secured_preferred_paid", Some(self.secured_preferred_paid)),
            ("offsets", Some(self.offsets)),
            ("deposits_at_suspension", self.deposits_at_suspension),
            ("deposits_last_call", self.deposits_last_call),
            ("estimated_good", self.estimated_good),
            ("estimated_doubtful", self.estimated_doubtful),
            ("estimated_worthless", self.estimated_worthless),
        ];
        for (name, v) in currency {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Validation(format!("{name} must be a nonnegative amount, got {v}")));
                }
            }
        }
        if let (Some(g), Some(d), Some(w)) = (self.estimated_good, self.estimated_doubtful, self.estimated_worthless) {
            if g + d + w > self.assets_at_suspension * (1.0 + QUALITY_TOLERANCE) {
                return Err(Error::Validation(format!(
                    "good+doubtful+worthless ({}) exceeds assets at suspension ({})",
                    g + d + w,
                    self.assets_at_suspension
                )));
            }
        }
        if let Some(p) = self.dividends_paid_pct {
            if !(0.0..=1.5).contains(&p) {
                return Err(Error::Validation(format!("dividends_paid_pct {p} outside [0, 1.5]")));
            }
        }
        Ok(())
    }

    /// Deposit growth between the last call report and suspension.
    pub fn deposit_outflow(&self) -> Option<f64> {
        let last = self.deposits_last_call?;
        let at = self.deposits_at_suspension?;
        (last > 0.0).then(|| at / last - 1.0)
    }

    /// Whether deposits fell by more than the run threshold before suspension.
    pub fn run_flag(&self) -> Option<bool> {
        self.deposit_outflow().map(|g| g < RUN_OUTFLOW_THRESHOLD)
    }

    /// Years from receiver appointment to final closing.
    pub fn duration_years(&self) -> Option<f64> {
        let days = (self.closed? - self.receiver_appointed?).num_days();
        (days >= 0).then(|| days as f64 / 365.25)
    }
}

/// Read receivership records; the first invalid record is an error naming its line.
pub fn load_receiverships<R: Read>(source: R, delimiter: Delimiter) -> Result<Vec<ReceivershipRecord>> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter.byte()).trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for row in reader.deserialize::<ReceivershipRecord>() {
        let rec = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, reason: e.to_string() }
        })?;
        let line = out.len() as u64 + 2;
        rec.validate().map_err(|e| Error::Parse { line, reason: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_receiverships<W: Write>(records: &[ReceivershipRecord], out: W, delimiter: Delimiter) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter.byte()).from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Io { path: "<output>".into(), source: e })?;
    Ok(())
}

#[cfg(test)]
pub(crate) fn record(assets: f64, collected: f64, claims: f64) -> ReceivershipRecord {
    ReceivershipRecord {
        bank_id: "r".into(),
        assets_at_suspension: assets,
        collected_from_assets: collected,
        claims_proved: claims,
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut r = record(100.0, 52.0, 85.0);
        r.secured_preferred_paid = 5.0;
        r.receiver_appointed = NaiveDate::from_ymd_opt(1893, 5, 1);
        r.closed = NaiveDate::from_ymd_opt(1897, 11, 2);
        r.dividends_paid_pct = Some(0.66);
        r.cause = "Injudicious banking, depreciation of securities".into();
        let mut buf = Vec::new();
        write_receiverships(&[r.clone(), record(10.0, 1.0, 2.0)], &mut buf, Delimiter::Comma).unwrap();
        let back = load_receiverships(buf.as_slice(), Delimiter::Comma).unwrap();
        assert_eq!(back[0], r);
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn invalid_record_names_line() {
        let text = "bank_id,assets_at_suspension,additional_assets_received,collected_from_assets,\
collected_from_shareholders,claims_proved,secured_preferred_paid,offsets,estimated_good,estimated_doubtful,estimated_worthless\n\
a,100,0,50,0,80,0,0,50,30,20\n\
b,100,0,50,0,80,0,0,60,30,20\n";
        let err = load_receiverships(text.as_bytes(), Delimiter::Comma).unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains("exceeds"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn negative_amount_rejected() {
        let r = record(100.0, -1.0, 0.0);
        assert!(r.validate().is_err());
    }

    #[test]
    fn run_flag_from_deposits() {
        let mut r = record(100.0, 50.0, 80.0);
        assert_eq!(r.run_flag(), None);
        r.deposits_last_call = Some(100.0);
        r.deposits_at_suspension = Some(80.0);
        assert_eq!(r.run_flag(), Some(true));
        r.deposits_at_suspension = Some(95.0);
        assert_eq!(r.run_flag(), Some(false));
    }

    #[test]
    fn duration_in_years() {
        let mut r = record(1.0, 1.0, 0.0);
        r.receiver_appointed = NaiveDate::from_ymd_opt(1900, 1, 1);
        r.closed = NaiveDate::from_ymd_opt(1901, 1, 1);
        assert!((r.duration_years().unwrap() - 365.0 / 365.25).abs() < 1e-12);
    }
}
