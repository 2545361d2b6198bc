use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{ModelEstimator, ModelSpec};
use crate::econometrics::{driscoll_kraay_se, logit_fit, ols_fit, DesignMatrix, FitResult};
use crate::error::{Error, Result};
use crate::panel::{BankId, BankPanel};
use crate::period::Period;

/// Complete cases must number at least this multiple of the parameter count.
pub const MIN_OBS_PER_PARAM: usize = 10;

#[derive(Debug, Clone)]
pub struct FailureModel {
    pub spec: ModelSpec,
    pub fit: FitResult,
}

impl FailureModel {
    /// Predicted failure probability (linear index for the LPM).
    pub fn score(&self, x: &[f64]) -> f64 {
        let eta: f64 = x.iter().zip(self.fit.coefficients.iter()).map(|(a, b)| a * b).sum();
        match self.spec.estimator {
            ModelEstimator::Lpm => eta,
            ModelEstimator::Logit => 1.0 / (1.0 + (-eta).exp()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    InSample,
    OutOfSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub bank_id: BankId,
    pub period: Period,
    pub score: f64,
    pub label: bool,
    pub origin: Origin,
    pub assets: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    pub horizon: u32,
    pub predictions: Vec<Prediction>,
    /// Scoring years whose training fit failed, with the reason.
    pub failed_years: Vec<(i32, String)>,
}

impl PredictionSet {
    pub fn scores(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.score).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.predictions.iter().map(|p| p.label).collect()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.predictions.iter().map(|p| p.period.year).collect();
        y.dedup();
        y
    }

    /// Tidy `bank_id,period,score,label,origin,assets` table.
    pub fn to_table(&self, delimiter: char) -> String {
        let d = delimiter;
        let mut s = format!("bank_id{d}period{d}score{d}label{d}origin{d}assets\n");
        for p in &self.predictions {
            let origin = match p.origin {
                Origin::InSample => "in_sample",
                Origin::OutOfSample => "out_of_sample",
            };
            s.push_str(&format!(
                "{}{d}{}{d}{}{d}{}{d}{origin}{d}{}\n",
                p.bank_id, p.period, p.score, u8::from(p.label), p.assets
            ));
        }
        s
    }
}

/// A labelled complete case.
struct Case {
    row: usize,
    index: i64,
    x: Vec<f64>,
    y: bool,
}

fn complete_cases(panel: &BankPanel, spec: &ModelSpec) -> Result<Vec<Case>> {
    spec.validate()?;
    let h = spec.horizon;
    if !panel.is_empty() && panel.features().iter().all(|f| !f.labels.contains_key(&h)) {
        return Err(Error::Validation(format!("panel carries no labels for horizon {h}")));
    }
    Ok(panel
        .rows()
        .enumerate()
        .filter_map(|(row, (o, f))| {
            let y = *f.labels.get(&h)?;
            let x = spec.row(f)?;
            Some(Case { row, index: o.period.index(), x, y })
        })
        .collect())
}

fn fit_cases(spec: &ModelSpec, cases: &[&Case]) -> Result<FitResult> {
    let p = spec.n_params();
    if cases.len() < MIN_OBS_PER_PARAM * p {
        return Err(Error::Validation(format!(
            "{} complete cases for {p} parameters; need at least {}",
            cases.len(),
            MIN_OBS_PER_PARAM * p
        )));
    }
    let x = DMatrix::from_fn(cases.len(), p, |i, j| cases[i].x[j]);
    let y = DVector::from_iterator(cases.len(), cases.iter().map(|c| f64::from(u8::from(c.y))));
    let design = DesignMatrix::new(spec.column_names(), x, y)?;
    match spec.estimator {
        ModelEstimator::Lpm => {
            let fit = ols_fit(&design)?;
            let dates: Vec<i64> = cases.iter().map(|c| c.index).collect();
            match driscoll_kraay_se(&fit, &design, &dates, 2) {
                Ok(dk) => Ok(dk.apply(fit)),
                Err(e) => {
                    log::warn!("keeping classical standard errors: {e}");
                    Ok(fit)
                }
            }
        }
        ModelEstimator::Logit => logit_fit(&design),
    }
}

/// Fit the specification on every complete, labelled row of `panel`.
pub fn fit_failure_model(panel: &BankPanel, spec: &ModelSpec) -> Result<FailureModel> {
    let cases = complete_cases(panel, spec)?;
    let refs: Vec<&Case> = cases.iter().collect();
    Ok(FailureModel { spec: spec.clone(), fit: fit_cases(spec, &refs)? })
}

/// In-sample scores for every complete, labelled row.
pub fn in_sample_predictions(panel: &BankPanel, model: &FailureModel) -> Result<PredictionSet> {
    let cases = complete_cases(panel, &model.spec)?;
    let obs = panel.observations();
    let predictions = cases
        .iter()
        .map(|c| Prediction {
            bank_id: obs[c.row].bank_id.clone(),
            period: obs[c.row].period,
            score: model.score(&c.x),
            label: c.y,
            origin: Origin::InSample,
            assets: obs[c.row].assets,
        })
        .collect();
    Ok(PredictionSet { horizon: model.spec.horizon, predictions, failed_years: Vec::new() })
}

/// Expanding-window out-of-sample scores.
///
/// The model is refit once per scoring year `Y`, starting `initial_train_years`
/// after the first panel year. Training uses rows dated strictly before the
/// first observation of `Y` whose label window has fully elapsed by then, so a
/// score never depends on information dated at or after its own date.
pub fn expanding_oos(panel: &BankPanel, spec: &ModelSpec, initial_train_years: u32) -> Result<PredictionSet> {
    let years = panel.years();
    let (Some(&first), Some(&last)) = (years.first(), years.last()) else {
        return Err(Error::Validation("panel is empty".into()));
    };
    let span = last - first + 1;
    if span <= initial_train_years as i32 {
        return Err(Error::Validation(format!(
            "panel spans {span} years; the backtest needs more than {initial_train_years}"
        )));
    }
    let cases = complete_cases(panel, spec)?;
    let obs = panel.observations();
    let horizon_q = 4 * i64::from(spec.horizon);
    let first_scoring = first + initial_train_years as i32;
    let scoring_years: Vec<i32> = years.iter().copied().filter(|y| *y >= first_scoring).collect();

    let outcomes: Vec<(i32, Result<Vec<Prediction>>)> = scoring_years
        .par_iter()
        .map(|&year| {
            let in_year: Vec<&Case> = cases.iter().filter(|c| obs[c.row].period.year == year).collect();
            let Some(cutoff) = obs
                .iter()
                .filter(|o| o.period.year == year)
                .map(|o| o.period.index())
                .min()
            else {
                return (year, Ok(Vec::new()));
            };
            let train: Vec<&Case> = cases
                .iter()
                .filter(|c| c.index < cutoff && c.index + horizon_q <= cutoff)
                .collect();
            let result = fit_cases(spec, &train).map(|fit| {
                let model = FailureModel { spec: spec.clone(), fit };
                in_year
                    .iter()
                    .map(|c| Prediction {
                        bank_id: obs[c.row].bank_id.clone(),
                        period: obs[c.row].period,
                        score: model.score(&c.x),
                        label: c.y,
                        origin: Origin::OutOfSample,
                        assets: obs[c.row].assets,
                    })
                    .collect()
            });
            (year, result)
        })
        .collect();

    let mut set = PredictionSet { horizon: spec.horizon, ..Default::default() };
    for (year, r) in outcomes {
        match r {
            Ok(p) => set.predictions.extend(p),
            Err(e) => {
                log::warn!("no out-of-sample scores for {year}: {e}");
                set.failed_years.push((year, e.to_string()));
            }
        }
    }
    Ok(set)
}
