use std::collections::HashMap;

use serde::Serialize;

use super::{BankId, BankPanel, FailureEvent};
use crate::error::{Error, Result};
use crate::period::{whole_years_between, Period};

/// Deposit growth strictly below this marks a failure with a run.
pub const RUN_OUTFLOW_THRESHOLD: f64 = -0.075;

/// Deposit growth is clipped above at +100%.
const GROWTH_CAP: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct LabelOutcome {
    pub panel: BankPanel,
    /// Rows dated at or after their bank's failure.
    pub dropped_after_failure: usize,
    pub unknown_events: Vec<BankId>,
}

/// Set `label_h` on every row: true iff the bank fails in `(t, t + h]`.
///
/// Rows dated at or after the bank's (earliest) failure are removed.
pub fn label_failures(panel: &BankPanel, events: &[FailureEvent], h: u32) -> Result<LabelOutcome> {
    if h < 1 {
        return Err(Error::Validation("failure horizon must be at least one year".into()));
    }
    let mut known: HashMap<&BankId, ()> = HashMap::new();
    for o in panel.observations() {
        known.insert(&o.bank_id, ());
    }
    let mut failures: HashMap<BankId, Period> = HashMap::new();
    let mut unknown = Vec::new();
    for e in events {
        if !known.contains_key(&e.bank_id) {
            log::warn!("failure event for unknown bank {} ignored", e.bank_id);
            unknown.push(e.bank_id.clone());
            continue;
        }
        failures
            .entry(e.bank_id.clone())
            .and_modify(|p| *p = (*p).min(e.failure_date))
            .or_insert(e.failure_date);
    }

    let mut out = panel.clone();
    let before = out.len();
    out.retain(|o, _| failures.get(&o.bank_id).is_none_or(|f| o.period.index() < f.index()));
    let dropped_after_failure = before - out.len();

    let span = 4 * i64::from(h);
    let fail_idx: Vec<Option<i64>> = out
        .observations()
        .iter()
        .map(|o| failures.get(&o.bank_id).map(Period::index))
        .collect();
    let obs_idx: Vec<i64> = out.observations().iter().map(|o| o.period.index()).collect();
    for ((f, fail), t) in out.features_mut().iter_mut().zip(fail_idx).zip(obs_idx) {
        let label = fail.is_some_and(|fi| fi > t && fi <= t + span);
        f.labels.insert(h, label);
    }
    Ok(LabelOutcome { panel: out, dropped_after_failure, unknown_events: unknown })
}

#[derive(Debug, Clone)]
pub struct DeNovoOutcome {
    pub panel: BankPanel,
    pub removed: usize,
    /// Rows kept despite lacking a charter date.
    pub missing_charter: Vec<(BankId, Period)>,
}

/// Remove observations of banks younger than `min_age` whole years.
pub fn filter_de_novo(panel: &BankPanel, min_age: i32) -> DeNovoOutcome {
    let mut out = panel.clone();
    let mut missing_charter = Vec::new();
    let before = out.len();
    out.retain(|o, _| match o.charter_date {
        Some(c) => whole_years_between(c, o.period.end_date()) >= min_age,
        None => {
            missing_charter.push((o.bank_id.clone(), o.period));
            true
        }
    });
    if !missing_charter.is_empty() {
        log::warn!("{} observations lack a charter date and were kept", missing_charter.len());
    }
    DeNovoOutcome { removed: before - out.len(), panel: out, missing_charter }
}

/// Deposit growth from the last call report to failure. Both fields are
/// `None` when either deposit figure is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepositOutflow {
    pub growth: Option<f64>,
    pub run_flag: Option<bool>,
}

pub fn deposit_outflow_at_failure(event: &FailureEvent) -> Result<DepositOutflow> {
    let (Some(last), Some(at_failure)) = (event.deposits_last_call, event.deposits_at_failure)
    else {
        return Ok(DepositOutflow { growth: None, run_flag: None });
    };
    if !(last > 0.0) {
        return Err(Error::Validation(format!(
            "bank {}: deposits at last call must be positive, got {last}",
            event.bank_id
        )));
    }
    let growth = (at_failure / last - 1.0).min(GROWTH_CAP);
    Ok(DepositOutflow { growth: Some(growth), run_flag: Some(growth < RUN_OUTFLOW_THRESHOLD) })
}
