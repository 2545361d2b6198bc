use std::collections::HashSet;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regressors and response for one estimation. Complete cases only.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::Validation(format!(
                "{} column names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::Validation(format!(
                "{} rows in X but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Validation(format!("duplicate column name {dup:?}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("design matrix contains missing or non-finite cells".into()));
        }
        if x.nrows() < x.ncols() {
            return Err(Error::Validation(format!(
                "{} rows cannot identify {} columns",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(DesignMatrix { names, x, y })
    }

    /// Build from row-major regressor rows.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = names.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Validation(format!("row {bad} has {} cells, expected {p}", rows[bad].len())));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(names, x, DVector::from_vec(y))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// True when some column is a nonzero constant.
    pub fn has_intercept(&self) -> bool {
        self.x.column_iter().any(|c| {
            let first = c[0];
            first != 0.0 && c.iter().all(|v| *v == first)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "OLS")]
    Ols,
    #[serde(rename = "FE-OLS")]
    FeOls,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Homoskedastic OLS or inverse-Hessian logit covariance.
    Classical,
    Hc0,
    DriscollKraay { bandwidth: usize },
    NeweyWest { lags: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStat {
    RSquared(f64),
    LogLikelihood(f64),
}

impl FitStat {
    pub fn value(&self) -> f64 {
        match self {
            FitStat::RSquared(v) | FitStat::LogLikelihood(v) => *v,
        }
    }
}

/// Coefficients, covariance and diagnostics of any regression.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub vcov: DMatrix<f64>,
    pub se: DVector<f64>,
    pub n_obs: usize,
    pub stat: FitStat,
    pub estimator: Estimator,
    pub covariance: CovarianceKind,
    /// `(X'X)^-1` for OLS, the inverse Hessian for logit.
    pub bread: DMatrix<f64>,
    /// `y - Xb` for OLS, `y - p` for logit.
    pub residuals: DVector<f64>,
    pub iterations: Option<usize>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.se[i])
    }

    /// Replace the covariance matrix, recomputing standard errors.
    pub fn with_covariance(mut self, vcov: DMatrix<f64>, kind: CovarianceKind) -> Self {
        self.se = vcov.diagonal().map(|v| v.max(0.0).sqrt());
        self.vcov = vcov;
        self.covariance = kind;
        self
    }

    /// Linear index `X b` for new rows.
    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.coefficients
    }

    pub fn summary(&self) -> FitSummary {
        let named = |v: &DVector<f64>| -> IndexMap<String, f64> {
            self.names.iter().cloned().zip(v.iter().copied()).collect()
        };
        FitSummary {
            coefficients: named(&self.coefficients),
            se: named(&self.se),
            n_obs: self.n_obs,
            stat: self.stat,
            estimator: self.estimator,
            covariance: self.covariance,
            iterations: self.iterations,
        }
    }
}

/// JSON view of a [`FitResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub coefficients: IndexMap<String, f64>,
    pub se: IndexMap<String, f64>,
    pub n_obs: usize,
    pub stat: FitStat,
    pub estimator: Estimator,
    pub covariance: CovarianceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let err = DesignMatrix::from_rows(
            vec!["a".into(), "a".into()],
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![1.0, 2.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn nan_cells_rejected() {
        assert!(DesignMatrix::from_rows(vec!["a".into()], &[vec![f64::NAN]], vec![1.0]).is_err());
    }

    #[test]
    fn intercept_detection() {
        let d = DesignMatrix::from_rows(
            vec!["c".into(), "x".into()],
            &[vec![1.0, 2.0], vec![1.0, 4.0]],
            vec![1.0, 2.0],
        )
        .unwrap();
        assert!(d.has_intercept());
    }
}
