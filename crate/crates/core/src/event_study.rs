//! Pre-failure dynamics of an outcome in event time.
//!
//! For failed banks the outcome is regressed on bank fixed effects and one
//! dummy per event time `j = date - failure_date` inside the window, with the
//! earliest event time omitted as the benchmark. Standard errors are
//! Driscoll-Kraay over calendar dates.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::econometrics::{driscoll_kraay_se, fe_ols_fit, DesignMatrix, FitResult};
use crate::error::{Error, Result};
use crate::panel::{column_value, BankId, BankPanel, FailureEvent};
use crate::period::Period;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTransform {
    #[default]
    Level,
    Log,
    /// Log of the CPI-deflated value.
    LogReal,
}

impl std::str::FromStr for OutcomeTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level" => Ok(OutcomeTransform::Level),
            "log" => Ok(OutcomeTransform::Log),
            "log_real" | "log-real" => Ok(OutcomeTransform::LogReal),
            _ => Err(Error::Config(format!("unknown outcome transform {s:?} (level|log|log_real)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStudyConfig {
    /// Inclusive event-time window in years; the lower end is the omitted period.
    pub window: (i32, i32),
    pub bandwidth: usize,
    pub transform: OutcomeTransform,
}

impl Default for EventStudyConfig {
    fn default() -> Self {
        EventStudyConfig { window: (-10, 0), bandwidth: 2, transform: OutcomeTransform::Level }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTimeCoefficient {
    /// Event time in years (fractional for quarterly data).
    pub j: f64,
    pub beta: f64,
    pub se: f64,
    /// Observations at this event time.
    pub n: usize,
    pub year_end: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStudyResult {
    pub outcome_name: String,
    pub coefficients: Vec<EventTimeCoefficient>,
    pub n_banks: usize,
    pub n_obs: usize,
    pub fit: FitResult,
}

impl EventStudyResult {
    pub fn beta(&self, j: f64) -> Option<f64> {
        self.coefficients.iter().find(|c| c.j == j).map(|c| c.beta)
    }

    /// Tidy `j,beta,se,n,year_end` table.
    pub fn to_table(&self, delimiter: char) -> String {
        let d = delimiter;
        let mut s = format!("j{d}beta{d}se{d}n{d}year_end\n");
        for c in &self.coefficients {
            s.push_str(&format!("{}{d}{}{d}{}{d}{}{d}{}\n", c.j, c.beta, c.se, c.n, c.year_end));
        }
        s
    }
}

fn transformed(value: f64, cpi: Option<f64>, t: OutcomeTransform) -> Option<f64> {
    let v = match t {
        OutcomeTransform::Level => value,
        OutcomeTransform::Log => value.ln(),
        OutcomeTransform::LogReal => (value / cpi?).ln(),
    };
    v.is_finite().then_some(v)
}

/// Estimate event-time coefficients for `outcome` on the failed banks of `panel`.
pub fn event_study(
    panel: &BankPanel,
    events: &[FailureEvent],
    outcome: &str,
    cfg: &EventStudyConfig,
) -> Result<EventStudyResult> {
    let (lo, hi) = cfg.window;
    if lo >= hi {
        return Err(Error::Validation(format!("event window ({lo}, {hi}) is empty")));
    }
    let mut failure: HashMap<&BankId, Period> = HashMap::new();
    for e in events {
        failure
            .entry(&e.bank_id)
            .and_modify(|p| *p = (*p).min(e.failure_date))
            .or_insert(e.failure_date);
    }

    // (bank, event time in quarters, calendar index, outcome)
    let mut rows: Vec<(&BankId, i64, i64, f64)> = Vec::new();
    let mut any_value = false;
    for (o, f) in panel.rows() {
        let Some(fail) = failure.get(&o.bank_id) else { continue };
        let raw = column_value(o, f, outcome)
            .ok_or_else(|| Error::Config(format!("unknown outcome column {outcome:?}")))?;
        let Some(raw) = raw else { continue };
        any_value = true;
        let jq = o.period.index() - fail.index();
        if jq < 4 * i64::from(lo) || jq > 4 * i64::from(hi) {
            continue;
        }
        if let Some(y) = transformed(raw, o.cpi, cfg.transform) {
            rows.push((&o.bank_id, jq, o.period.index(), y));
        }
    }
    if !any_value {
        return Err(Error::Validation(format!("outcome {outcome:?} is missing for every failed bank")));
    }
    let base = 4 * i64::from(lo);
    if !rows.iter().any(|r| r.1 == base) {
        return Err(Error::Validation(format!(
            "no bank observed at event time {lo}; the benchmark period is unidentified"
        )));
    }

    let mut support: BTreeMap<i64, usize> = BTreeMap::new();
    for r in &rows {
        *support.entry(r.1).or_default() += 1;
    }
    let times: Vec<i64> = support.keys().copied().filter(|j| *j != base).collect();
    if times.is_empty() {
        return Err(Error::Validation("no event times besides the benchmark".into()));
    }
    let col_of: HashMap<i64, usize> = times.iter().enumerate().map(|(i, j)| (*j, i)).collect();
    let x = DMatrix::from_fn(rows.len(), times.len(), |i, k| {
        if col_of.get(&rows[i].1) == Some(&k) {
            1.0
        } else {
            0.0
        }
    });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.3));
    let names = times.iter().map(|j| format!("j={}", *j as f64 / 4.0)).collect();
    let design = DesignMatrix::new(names, x, y)?;
    let groups: Vec<&BankId> = rows.iter().map(|r| r.0).collect();
    let dates: Vec<i64> = rows.iter().map(|r| r.2).collect();

    let fit = fe_ols_fit(&design, &groups)?;
    let demeaned = crate::econometrics::within_transform(&design, &groups)?;
    let fit = driscoll_kraay_se(&fit, &demeaned, &dates, cfg.bandwidth)?.apply(fit);

    let coefficients = times
        .iter()
        .enumerate()
        .map(|(k, jq)| EventTimeCoefficient {
            j: *jq as f64 / 4.0,
            beta: fit.coefficients[k],
            se: fit.se[k],
            n: support[jq],
            year_end: jq % 4 == 0,
        })
        .collect();
    let mut banks: Vec<&BankId> = groups.clone();
    banks.sort();
    banks.dedup();
    Ok(EventStudyResult {
        outcome_name: outcome.to_string(),
        coefficients,
        n_banks: banks.len(),
        n_obs: rows.len(),
        fit,
    })
}
