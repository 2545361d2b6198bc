//! Aggregate predicted failure rates and their time-series regression on
//! realized failure rates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::econometrics::{
    default_nw_truncation, newey_west_cov, CovarianceKind, Estimator, FitResult, FitStat,
};
use crate::error::{Error, Result};
use crate::panel::{BankId, BankPanel, FailureEvent};
use crate::prediction::PredictionSet;

/// Overlapping years required by [`aggregate_regression`].
pub const MIN_REGRESSION_YEARS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Equal,
    AssetShare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskDenominator {
    /// Banks filing in `t-1` that had not failed before `t`.
    #[default]
    PriorYearFilers,
    /// Banks filing in `t`.
    CurrentYearBanks,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateYear {
    pub year: i32,
    /// Weighted mean score of banks observed in `year - 1`.
    pub predicted: Option<f64>,
    pub actual: Option<f64>,
    /// Banks scored for this year.
    pub n_banks: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AggregateSeries {
    pub years: Vec<AggregateYear>,
}

impl AggregateSeries {
    /// Build a series directly from `(year, predicted, actual)` triples.
    pub fn from_pairs(rows: &[(i32, f64, f64)]) -> Self {
        let mut years: Vec<AggregateYear> = rows
            .iter()
            .map(|&(year, p, a)| AggregateYear { year, predicted: Some(p), actual: Some(a), n_banks: 0 })
            .collect();
        years.sort_by_key(|y| y.year);
        AggregateSeries { years }
    }

    pub fn get(&self, year: i32) -> Option<&AggregateYear> {
        self.years.iter().find(|y| y.year == year)
    }

    /// Fill in realized failure rates.
    pub fn with_actual(mut self, rates: &BTreeMap<i32, f64>) -> Self {
        for year in rates.keys() {
            if self.get(*year).is_none() {
                self.years.push(AggregateYear { year: *year, predicted: None, actual: None, n_banks: 0 });
            }
        }
        self.years.sort_by_key(|y| y.year);
        for y in &mut self.years {
            y.actual = rates.get(&y.year).copied();
        }
        self
    }

    /// Tidy `year,predicted,actual,n` table; missing values are empty.
    pub fn to_table(&self, delimiter: char) -> String {
        let d = delimiter;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut s = format!("year{d}predicted{d}actual{d}n\n");
        for y in &self.years {
            s.push_str(&format!("{}{d}{}{d}{}{d}{}\n", y.year, opt(y.predicted), opt(y.actual), y.n_banks));
        }
        s
    }
}

/// Weighted mean score per target year.
///
/// A score dated in year `t-1` predicts year `t`. When a bank has several
/// observations in a year its latest one is used. Weights are renormalized over
/// the banks scored in that year.
pub fn aggregate_predicted_rate(predictions: &PredictionSet, weights: Weighting) -> AggregateSeries {
    let mut latest: BTreeMap<i32, HashMap<&BankId, (crate::period::Period, f64, f64)>> = BTreeMap::new();
    for p in &predictions.predictions {
        let slot = latest.entry(p.period.year).or_default();
        match slot.get(&p.bank_id) {
            Some((period, _, _)) if *period >= p.period => {}
            _ => {
                slot.insert(&p.bank_id, (p.period, p.score, p.assets));
            }
        }
    }
    let years = latest
        .into_iter()
        .filter(|(_, banks)| !banks.is_empty())
        .map(|(year, banks)| {
            let mut rows: Vec<(&BankId, f64, f64)> = banks.into_iter().map(|(b, (_, s, a))| (b, s, a)).collect();
            rows.sort_by(|a, b| a.0.cmp(b.0));
            let weighted = rows.iter().map(|r| match weights {
                Weighting::Equal => (r.1, 1.0),
                Weighting::AssetShare => (r.1, r.2),
            });
            let predicted = running_mean(weighted);
            AggregateYear { year: year + 1, predicted: Some(predicted), actual: None, n_banks: rows.len() }
        })
        .collect();
    AggregateSeries { years }
}

/// Weighted mean by running updates, so a constant input is reproduced exactly.
fn running_mean(values: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut mean, mut total) = (0.0, 0.0);
    for (x, w) in values {
        total += w;
        if total > 0.0 {
            mean += (w / total) * (x - mean);
        }
    }
    mean
}

/// Realized failure rate per calendar year.
pub fn actual_failure_rates(
    panel: &BankPanel,
    events: &[FailureEvent],
    denominator: RiskDenominator,
) -> BTreeMap<i32, f64> {
    let mut failed_in: HashMap<&BankId, i32> = HashMap::new();
    for e in events {
        let y = e.failure_date.year;
        failed_in.entry(&e.bank_id).and_modify(|v| *v = (*v).min(y)).or_insert(y);
    }
    let mut filers: BTreeMap<i32, BTreeSet<&BankId>> = BTreeMap::new();
    for o in panel.observations() {
        filers.entry(o.period.year).or_default().insert(&o.bank_id);
    }
    let mut rates = BTreeMap::new();
    for (&year, banks) in &filers {
        let (at_risk, failures) = match denominator {
            RiskDenominator::PriorYearFilers => {
                let Some(prev) = filers.get(&(year - 1)) else { continue };
                let at_risk: Vec<&&BankId> = prev
                    .iter()
                    .filter(|b| failed_in.get(**b).is_none_or(|y| *y >= year))
                    .collect();
                let failures = at_risk.iter().filter(|b| failed_in.get(***b) == Some(&year)).count();
                (at_risk.len(), failures)
            }
            RiskDenominator::CurrentYearBanks => {
                let known: BTreeSet<&BankId> =
                    banks.iter().chain(filers.get(&(year - 1)).into_iter().flatten()).copied().collect();
                let failures = known.iter().filter(|b| failed_in.get(**b) == Some(&year)).count();
                (banks.len(), failures.min(banks.len()))
            }
        };
        if at_risk > 0 {
            rates.insert(year, failures as f64 / at_risk as f64);
        }
    }
    rates
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRegression {
    /// Coefficients `const` and `predicted`, Newey-West covariance.
    pub fit: FitResult,
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub truncation: f64,
}

/// OLS of the actual on the predicted rate over overlapping years, with
/// Newey-West standard errors at `S = 1.3 T^{1/2}`.
pub fn aggregate_regression(series: &AggregateSeries) -> Result<AggregateRegression> {
    let mut pairs: Vec<(i32, f64, f64)> = series
        .years
        .iter()
        .filter_map(|y| Some((y.year, y.predicted?, y.actual?)))
        .collect();
    pairs.sort_by_key(|p| p.0);
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation("aggregate series lists a year twice".into()));
    }
    let t = pairs.len();
    if t < MIN_REGRESSION_YEARS {
        return Err(Error::Validation(format!(
            "{t} overlapping years; the aggregate regression needs at least {MIN_REGRESSION_YEARS}"
        )));
    }
    let n = t as f64;
    let xbar = running_mean(pairs.iter().map(|p| (p.1, 1.0)));
    let ybar = running_mean(pairs.iter().map(|p| (p.2, 1.0)));
    let sxx: f64 = pairs.iter().map(|p| (p.1 - xbar) * (p.1 - xbar)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.1 - xbar) * (p.2 - ybar)).sum();
    let syy: f64 = pairs.iter().map(|p| (p.2 - ybar) * (p.2 - ybar)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("predicted rate is constant across years".into()));
    }
    let beta = sxy / sxx;
    let alpha = ybar - beta * xbar;
    let residuals = DVector::from_iterator(t, pairs.iter().map(|p| p.2 - alpha - beta * p.1));
    let ssr = residuals.norm_squared();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 0.0 };

    let sx: f64 = pairs.iter().map(|p| p.1).sum();
    let sx2: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let det = n * sx2 - sx * sx;
    let bread = DMatrix::from_row_slice(2, 2, &[sx2 / det, -sx / det, -sx / det, n / det]);
    let scores = DMatrix::from_fn(t, 2, |i, j| if j == 0 { residuals[i] } else { residuals[i] * pairs[i].1 });
    let truncation = default_nw_truncation(t);
    let nw = newey_west_cov(&scores, &bread, truncation)?;
    let lags = match nw.kind {
        CovarianceKind::NeweyWest { lags } => lags,
        _ => unreachable!(),
    };
    let fit = FitResult {
        names: vec!["const".into(), "predicted".into()],
        coefficients: DVector::from_vec(vec![alpha, beta]),
        se: nw.se,
        vcov: nw.vcov,
        n_obs: t,
        stat: FitStat::RSquared(r_squared),
        estimator: Estimator::Ols,
        covariance: CovarianceKind::NeweyWest { lags },
        bread,
        residuals,
        iterations: None,
    };
    Ok(AggregateRegression { fit, alpha, beta, r_squared, truncation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::{newey_west_se, ols_fit, DesignMatrix};
    use crate::panel::BankObservation;
    use crate::period::Period;
    use crate::prediction::{Origin, Prediction};

    fn pred(bank: &str, year: i32, score: f64, assets: f64) -> Prediction {
        Prediction {
            bank_id: bank.into(),
            period: Period::annual(year),
            score,
            label: false,
            origin: Origin::OutOfSample,
            assets,
        }
    }

    fn set(p: Vec<Prediction>) -> PredictionSet {
        PredictionSet { horizon: 1, predictions: p, failed_years: vec![] }
    }

    #[test]
    fn equal_and_asset_weights() {
        let s = set(vec![pred("a", 1900, 0.1, 90.0), pred("b", 1900, 0.3, 10.0)]);
        let eq = aggregate_predicted_rate(&s, Weighting::Equal);
        assert_eq!(eq.years[0].year, 1901);
        assert!((eq.years[0].predicted.unwrap() - 0.2).abs() < 1e-15);
        let aw = aggregate_predicted_rate(&s, Weighting::AssetShare);
        assert!((aw.years[0].predicted.unwrap() - 0.12).abs() < 1e-15);
    }

    #[test]
    fn single_bank_year_and_constant_scores() {
        let s = set(vec![pred("a", 1900, 0.37, 5.0)]);
        assert_eq!(aggregate_predicted_rate(&s, Weighting::AssetShare).years[0].predicted, Some(0.37));
        let c = set((0..7).map(|i| pred(&format!("b{i}"), 1900, 0.05, 1.0 + i as f64)).collect());
        assert_eq!(aggregate_predicted_rate(&c, Weighting::Equal).years[0].predicted, Some(0.05));
    }

    #[test]
    fn identity_series_is_exact() {
        let rows: Vec<(i32, f64, f64)> =
            (0..20).map(|i| (1900 + i, 0.01 * (i % 7) as f64 + 0.003 * i as f64, 0.0)).collect();
        let rows: Vec<(i32, f64, f64)> = rows.iter().map(|r| (r.0, r.1, r.1)).collect();
        let r = aggregate_regression(&AggregateSeries::from_pairs(&rows)).unwrap();
        assert_eq!(r.beta, 1.0);
        assert_eq!(r.alpha, 0.0);
        assert_eq!(r.r_squared, 1.0);
    }

    #[test]
    fn matches_generic_ols_and_nw() {
        let rows: Vec<(i32, f64, f64)> = (0..30)
            .map(|i| {
                let x = (i as f64 * 0.7).sin() * 0.02 + 0.03;
                (1900 + i, x, 0.004 + 0.8 * x + (i as f64 * 1.3).cos() * 0.005)
            })
            .collect();
        let r = aggregate_regression(&AggregateSeries::from_pairs(&rows)).unwrap();
        let design = DesignMatrix::from_rows(
            vec!["const".into(), "predicted".into()],
            &rows.iter().map(|r| vec![1.0, r.1]).collect::<Vec<_>>(),
            rows.iter().map(|r| r.2).collect(),
        )
        .unwrap();
        let ols = ols_fit(&design).unwrap();
        let nw = newey_west_se(&ols, &design, default_nw_truncation(30)).unwrap();
        assert!((ols.coefficients[1] - r.beta).abs() < 1e-12);
        assert!((ols.coefficients[0] - r.alpha).abs() < 1e-12);
        for k in 0..2 {
            assert!((nw.se[k] - r.fit.se[k]).abs() < 1e-10 * nw.se[k].max(1e-12));
        }
        assert_eq!(r.fit.covariance, CovarianceKind::NeweyWest { lags: 7 });
    }

    #[test]
    fn ordering_invariance() {
        let mut rows: Vec<(i32, f64, f64)> =
            (0..12).map(|i| (1900 + i, i as f64 * 0.01, (i * i % 5) as f64 * 0.01)).collect();
        let a = aggregate_regression(&AggregateSeries::from_pairs(&rows)).unwrap();
        rows.reverse();
        let mut series = AggregateSeries::from_pairs(&rows);
        series.years.reverse();
        let b = aggregate_regression(&series).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let short: Vec<(i32, f64, f64)> = (0..7).map(|i| (1900 + i, i as f64, i as f64)).collect();
        assert!(aggregate_regression(&AggregateSeries::from_pairs(&short)).is_err());
        let flat: Vec<(i32, f64, f64)> = (0..10).map(|i| (1900 + i, 0.1, i as f64)).collect();
        assert!(matches!(
            aggregate_regression(&AggregateSeries::from_pairs(&flat)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn actual_rates_by_denominator() {
        let mut obs = Vec::new();
        for b in ["a", "b", "c", "d"] {
            obs.push(BankObservation { bank_id: b.into(), period: Period::annual(1900), assets: 1.0, ..Default::default() });
        }
        for b in ["a", "b", "c"] {
            obs.push(BankObservation { bank_id: b.into(), period: Period::annual(1901), assets: 1.0, ..Default::default() });
        }
        let panel = BankPanel::new(obs).unwrap();
        let events = vec![FailureEvent {
            bank_id: "d".into(),
            failure_date: Period::annual(1901),
            deposits_last_call: None,
            deposits_at_failure: None,
            assets_at_failure: None,
        }];
        let prior = actual_failure_rates(&panel, &events, RiskDenominator::PriorYearFilers);
        assert_eq!(prior.get(&1901), Some(&0.25));
        assert_eq!(prior.get(&1900), None);
        let current = actual_failure_rates(&panel, &events, RiskDenominator::CurrentYearBanks);
        assert_eq!(current.get(&1901), Some(&(1.0 / 3.0)));
        let series = AggregateSeries::default().with_actual(&prior);
        assert!(series.to_table(',').contains("1901,,0.25,0"));
    }
}
