//! The bank panel: loading, validation and feature construction.

mod features;
mod ingest;
mod labels;

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::period::Period;

pub(crate) use features::fundamentals_of;
pub use features::{
    asset_growth_quintiles, build_features, compute_controls, compute_fundamentals, Era,
    FeatureConfig, FeatureReport, FundamentalsConfig, NoncoreDeduction, QuintileConfig, QuintileOutcome,
};
pub use ingest::{
    load_failures, load_panel, read_panel_file, write_failures, write_panel, ColumnMapping,
    Delimiter, Field, LoadOptions, LoadOutcome, Reject,
};
pub use labels::{
    deposit_outflow_at_failure, filter_de_novo, label_failures, DeNovoOutcome, DepositOutflow,
    LabelOutcome, RUN_OUTFLOW_THRESHOLD,
};

/// Opaque bank identifier. Ordering is lexicographic and is used for
/// deterministic tie-breaking.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BankId(pub String);

impl fmt::Display for BankId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BankId {
    fn from(s: &str) -> Self {
        BankId(s.to_string())
    }
}

impl From<String> for BankId {
    fn from(s: String) -> Self {
        BankId(s)
    }
}

/// One call report for one bank.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BankObservation {
    pub bank_id: BankId,
    pub period: Period,
    pub assets: f64,
    pub deposits: Option<f64>,
    pub equity: Option<f64>,
    pub surplus_profit: Option<f64>,
    pub national_bank_notes: Option<f64>,
    pub due_to_banks: Option<f64>,
    pub time_deposits: Option<f64>,
    pub wholesale_funding: Option<f64>,
    pub net_income: Option<f64>,
    pub loans: Option<f64>,
    pub charter_date: Option<NaiveDate>,
    pub cpi: Option<f64>,
    pub gdp: Option<f64>,
    pub oreo: Option<f64>,
    pub demand_deposits: Option<f64>,
    pub brokered_deposits: Option<f64>,
    /// Source line in the ingested file (0 when generated in memory).
    #[serde(skip)]
    pub line: u64,
}

/// Derived per-observation features. `None` means missing; nothing is zero-filled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub insolvency: Option<f64>,
    pub noncore: Option<f64>,
    pub interaction: Option<f64>,
    pub growth_quintile: Option<u8>,
    pub gdp_growth_3y: Option<f64>,
    pub inflation_3y: Option<f64>,
    pub log_age: Option<f64>,
    /// Failure label per horizon in years.
    pub labels: BTreeMap<u32, bool>,
}

/// A panel of observations sorted by `(bank_id, period)` with aligned features.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BankPanel {
    observations: Vec<BankObservation>,
    features: Vec<FeatureRow>,
}

impl BankPanel {
    /// Builds a panel, sorting rows by `(bank_id, period)`. Fails on duplicate keys.
    pub fn new(mut observations: Vec<BankObservation>) -> crate::Result<Self> {
        observations.sort_by(|a, b| (&a.bank_id, a.period).cmp(&(&b.bank_id, b.period)));
        if let Some(w) = observations
            .windows(2)
            .find(|w| w[0].bank_id == w[1].bank_id && w[0].period.index() == w[1].period.index())
        {
            return Err(crate::Error::DuplicateKey {
                bank_id: w[0].bank_id.to_string(),
                period: w[0].period.to_string(),
            });
        }
        let features = vec![FeatureRow::default(); observations.len()];
        Ok(BankPanel { observations, features })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[BankObservation] {
        &self.observations
    }

    pub fn features(&self) -> &[FeatureRow] {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut [FeatureRow] {
        &mut self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = (&BankObservation, &FeatureRow)> {
        self.observations.iter().zip(&self.features)
    }

    /// Keeps rows for which `keep` returns true, preserving alignment.
    pub fn retain<F>(&mut self, mut keep: F)
    where
        F: FnMut(&BankObservation, &FeatureRow) -> bool,
    {
        let (obs, feats): (Vec<_>, Vec<_>) = std::mem::take(&mut self.observations)
            .into_iter()
            .zip(std::mem::take(&mut self.features))
            .filter(|(o, f)| keep(o, f))
            .unzip();
        self.observations = obs;
        self.features = feats;
    }

    /// Distinct periods in ascending order.
    pub fn periods(&self) -> Vec<Period> {
        let mut p: Vec<Period> = self.observations.iter().map(|o| o.period).collect();
        p.sort();
        p.dedup();
        p
    }

    /// Distinct calendar years in ascending order.
    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.observations.iter().map(|o| o.period.year).collect();
        y.sort_unstable();
        y.dedup();
        y
    }

    pub fn n_banks(&self) -> usize {
        let mut n = 0;
        let mut last: Option<&BankId> = None;
        for o in &self.observations {
            if last != Some(&o.bank_id) {
                n += 1;
                last = Some(&o.bank_id);
            }
        }
        n
    }
}

/// Look up a numeric column of an observation or its features by name.
///
/// Returns `None` for an unknown column name and `Some(None)` for a missing value.
pub fn column_value(o: &BankObservation, f: &FeatureRow, name: &str) -> Option<Option<f64>> {
    Some(match name {
        "assets" => Some(o.assets),
        "deposits" => o.deposits,
        "equity" => o.equity,
        "surplus_profit" => o.surplus_profit,
        "national_bank_notes" => o.national_bank_notes,
        "due_to_banks" => o.due_to_banks,
        "time_deposits" => o.time_deposits,
        "wholesale_funding" => o.wholesale_funding,
        "net_income" => o.net_income,
        "loans" => o.loans,
        "cpi" => o.cpi,
        "gdp" => o.gdp,
        "oreo" => o.oreo,
        "demand_deposits" => o.demand_deposits,
        "brokered_deposits" => o.brokered_deposits,
        "insolvency" => f.insolvency,
        "noncore" => f.noncore,
        "interaction" => f.interaction,
        "growth_quintile" => f.growth_quintile.map(f64::from),
        "gdp_growth_3y" => f.gdp_growth_3y,
        "inflation_3y" => f.inflation_3y,
        "log_age" => f.log_age,
        _ => return None,
    })
}

/// A bank failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub bank_id: BankId,
    pub failure_date: Period,
    pub deposits_last_call: Option<f64>,
    pub deposits_at_failure: Option<f64>,
    pub assets_at_failure: Option<f64>,
}

impl FailureEvent {
    pub fn run_flag(&self) -> Option<bool> {
        deposit_outflow_at_failure(self).ok().and_then(|o| o.run_flag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(id: &str, year: i32) -> BankObservation {
        BankObservation {
            bank_id: id.into(),
            period: Period::annual(year),
            assets: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn new_sorts_by_bank_then_period() {
        let p = BankPanel::new(vec![obs("b", 1890), obs("a", 1891), obs("a", 1890)]).unwrap();
        let keys: Vec<_> = p
            .observations()
            .iter()
            .map(|o| (o.bank_id.0.as_str(), o.period.year))
            .collect();
        assert_eq!(keys, vec![("a", 1890), ("a", 1891), ("b", 1890)]);
        assert_eq!(p.n_banks(), 2);
    }

    #[test]
    fn duplicate_key_is_hard_error() {
        let err = BankPanel::new(vec![obs("7", 1893), obs("7", 1893)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bank 7") && msg.contains("1893"), "{msg}");
    }

    #[test]
    fn retain_keeps_alignment() {
        let mut p = BankPanel::new(vec![obs("a", 1890), obs("a", 1891)]).unwrap();
        p.features_mut()[1].insolvency = Some(2.0);
        p.retain(|o, _| o.period.year == 1891);
        assert_eq!(p.len(), 1);
        assert_eq!(p.features()[0].insolvency, Some(2.0));
    }
}
