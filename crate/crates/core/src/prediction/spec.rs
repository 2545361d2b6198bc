use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::FeatureRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Insolvency,
    Noncore,
    Interaction,
    /// Dummies for growth quintiles 2..5 (quintile 1 is the base).
    GrowthQuintiles,
    GdpGrowth3y,
    Inflation3y,
    LogAge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelEstimator {
    Lpm,
    Logit,
}

/// A failure-prediction specification. An intercept is always included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub regressors: Vec<Regressor>,
    pub estimator: ModelEstimator,
    #[serde(default = "one")]
    pub horizon: u32,
    /// Allow the interaction term without both of its parents.
    #[serde(default)]
    pub allow_orphan_interaction: bool,
}

fn one() -> u32 {
    1
}

impl ModelSpec {
    pub fn new(regressors: Vec<Regressor>, estimator: ModelEstimator, horizon: u32) -> Self {
        ModelSpec { regressors, estimator, horizon, allow_orphan_interaction: false }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("model horizon must be at least one year".into()));
        }
        let has = |r: Regressor| self.regressors.contains(&r);
        if has(Regressor::Interaction)
            && !(has(Regressor::Insolvency) && has(Regressor::Noncore))
            && !self.allow_orphan_interaction
        {
            return Err(Error::Config(
                "interaction requires both insolvency and noncore (set allow_orphan_interaction to override)"
                    .into(),
            ));
        }
        for (i, r) in self.regressors.iter().enumerate() {
            if self.regressors[..i].contains(r) {
                return Err(Error::Config(format!("regressor {r:?} listed twice")));
            }
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["const".to_string()];
        for r in &self.regressors {
            match r {
                Regressor::Insolvency => names.push("insolvency".into()),
                Regressor::Noncore => names.push("noncore".into()),
                Regressor::Interaction => names.push("interaction".into()),
                Regressor::GrowthQuintiles => {
                    names.extend((2..=5).map(|q| format!("growth_q{q}")));
                }
                Regressor::GdpGrowth3y => names.push("gdp_growth_3y".into()),
                Regressor::Inflation3y => names.push("inflation_3y".into()),
                Regressor::LogAge => names.push("log_age".into()),
            }
        }
        names
    }

    pub fn n_params(&self) -> usize {
        self.column_names().len()
    }

    /// Regressor values for one row, or `None` if any input is missing.
    pub fn row(&self, f: &FeatureRow) -> Option<Vec<f64>> {
        let mut v = Vec::with_capacity(self.n_params());
        v.push(1.0);
        for r in &self.regressors {
            match r {
                Regressor::Insolvency => v.push(f.insolvency?),
                Regressor::Noncore => v.push(f.noncore?),
                Regressor::Interaction => v.push(f.interaction?),
                Regressor::GrowthQuintiles => {
                    let q = f.growth_quintile?;
                    v.extend((2..=5).map(|k| if q == k { 1.0 } else { 0.0 }));
                }
                Regressor::GdpGrowth3y => v.push(f.gdp_growth_3y?),
                Regressor::Inflation3y => v.push(f.inflation_3y?),
                Regressor::LogAge => v.push(f.log_age?),
            }
        }
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orphan_interaction_rejected_unless_overridden() {
        let mut s = ModelSpec::new(vec![Regressor::Insolvency, Regressor::Interaction], ModelEstimator::Lpm, 1);
        assert!(s.validate().is_err());
        s.allow_orphan_interaction = true;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let s = ModelSpec::from_json(r#"{"regressors": ["insolvency", "growth_quintiles"], "estimator": "logit"}"#)
            .unwrap();
        assert_eq!(s.horizon, 1);
        assert_eq!(
            s.column_names(),
            vec!["const", "insolvency", "growth_q2", "growth_q3", "growth_q4", "growth_q5"]
        );
    }

    #[test]
    fn rows_need_complete_inputs() {
        let s = ModelSpec::new(vec![Regressor::Insolvency, Regressor::GrowthQuintiles], ModelEstimator::Lpm, 1);
        let mut f = FeatureRow { insolvency: Some(0.5), ..Default::default() };
        assert_eq!(s.row(&f), None);
        f.growth_quintile = Some(3);
        assert_eq!(s.row(&f), Some(vec![1.0, 0.5, 0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn zero_horizon_invalid() {
        assert!(ModelSpec::new(vec![], ModelEstimator::Lpm, 0).validate().is_err());
    }
}
