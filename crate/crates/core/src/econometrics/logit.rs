use nalgebra::{DMatrix, DVector};

use super::fit::{CovarianceKind, DesignMatrix, Estimator, FitResult, FitStat};
use crate::error::{Error, Result};

/// Newton-Raphson controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitOptions {
    pub max_iterations: usize,
    /// Stop when the largest absolute score entry falls below this.
    pub score_tolerance: f64,
    /// Stop when the largest absolute coefficient step falls below this.
    pub step_tolerance: f64,
    /// Fitted probabilities this close to 0 or 1 count as extreme.
    pub extreme_probability: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions {
            max_iterations: 100,
            score_tolerance: 1e-8,
            step_tolerance: 1e-10,
            extreme_probability: 1e-10,
        }
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^eta)` without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood of `y` under logit index `X b`.
pub fn log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y.iter()).map(|(e, yi)| yi * e - softplus(*e)).sum()
}

/// Logit maximum likelihood by Newton-Raphson with step halving.
pub fn logit_fit(design: &DesignMatrix) -> Result<FitResult> {
    logit_fit_with(design, &LogitOptions::default())
}

pub fn logit_fit_with(design: &DesignMatrix, opts: &LogitOptions) -> Result<FitResult> {
    let x = design.x();
    let y = design.y();
    let (n, p) = (x.nrows(), x.ncols());
    if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::Validation("logit response must be 0/1".into()));
    }
    let positives = y.iter().filter(|v| **v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate(format!(
            "all {n} responses equal {}; the logit MLE does not exist",
            if positives == 0 { 0 } else { 1 }
        )));
    }

    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(x, y, &beta);
    let mut norms: Vec<f64> = vec![0.0];
    let mut max_score = f64::INFINITY;

    for iter in 1..=opts.max_iterations {
        let probs = (x * &beta).map(sigmoid);
        let resid = y - &probs;
        let score = x.transpose() * &resid;
        max_score = score.amax();

        let extreme = probs
            .iter()
            .any(|q| *q < opts.extreme_probability || *q > 1.0 - opts.extreme_probability);
        if extreme && diverging(&norms) {
            return Err(Error::Separation { iterations: iter });
        }
        if max_score < opts.score_tolerance {
            return finish(design, beta, ll, iter);
        }

        let weights = probs.map(|q| q * (1.0 - q));
        let hessian = weighted_gram(x, &weights);
        let step = match hessian.clone().cholesky() {
            Some(ch) => ch.solve(&score),
            None => {
                if extreme {
                    return Err(Error::Separation { iterations: iter });
                }
                hessian
                    .svd(true, true)
                    .solve(&score, 1e-12)
                    .map_err(|e| Error::Validation(e.to_string()))?
            }
        };

        let mut t = 1.0;
        let mut candidate = &beta + &step * t;
        let mut cand_ll = log_likelihood(x, y, &candidate);
        while cand_ll < ll && t > 1e-10 {
            t *= 0.5;
            candidate = &beta + &step * t;
            cand_ll = log_likelihood(x, y, &candidate);
        }
        let moved = (&step * t).amax();
        beta = candidate;
        ll = cand_ll;
        norms.push(beta.norm());

        if moved < opts.step_tolerance {
            return finish(design, beta, ll, iter);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        max_score,
        coefficients: beta.iter().copied().collect(),
    })
}

/// Coefficient norm has grown over the last three steps without the
/// quadratic shrinkage of a converging Newton sequence.
fn diverging(norms: &[f64]) -> bool {
    if norms.len() < 4 {
        return false;
    }
    let k = norms.len();
    let d1 = norms[k - 3] - norms[k - 4];
    let d2 = norms[k - 2] - norms[k - 3];
    let d3 = norms[k - 1] - norms[k - 2];
    d1 > 0.0 && d2 > 0.0 && d3 > 0.0 && d3 >= 0.5 * d2
}

fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut xw = x.clone();
    for (mut row, wi) in xw.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    let g = x.transpose() * xw;
    (&g + g.transpose()) * 0.5
}

fn finish(design: &DesignMatrix, beta: DVector<f64>, ll: f64, iterations: usize) -> Result<FitResult> {
    let x = design.x();
    let probs = (x * &beta).map(sigmoid);
    let weights = probs.map(|q| q * (1.0 - q));
    let hessian = weighted_gram(x, &weights);
    let bread = hessian
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient { columns: design.names().to_vec() })?;
    let bread = (&bread + bread.transpose()) * 0.5;
    let se = bread.diagonal().map(|v| v.max(0.0).sqrt());
    Ok(FitResult {
        names: design.names().to_vec(),
        coefficients: beta,
        vcov: bread.clone(),
        se,
        n_obs: x.nrows(),
        stat: FitStat::LogLikelihood(ll),
        estimator: Estimator::Logit,
        covariance: CovarianceKind::Classical,
        bread,
        residuals: design.y() - probs,
        iterations: Some(iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(x: &[f64], y: &[f64]) -> DesignMatrix {
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, *v]).collect();
        DesignMatrix::from_rows(vec!["const".into(), "x".into()], &rows, y.to_vec()).unwrap()
    }

    #[test]
    fn base_rate_intercept() {
        let y = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let rows = vec![vec![1.0]; y.len()];
        let d = DesignMatrix::from_rows(vec!["const".into()], &rows, y.to_vec()).unwrap();
        let f = logit_fit(&d).unwrap();
        assert!((f.coefficients[0] - (0.25f64 / 0.75).ln()).abs() < 1e-8);
        assert!((f.coefficients[0] + 1.0986122886681098).abs() < 1e-8);
    }

    #[test]
    fn separation_detected() {
        let x = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0];
        let y = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(logit_fit(&design(&x, &y)), Err(Error::Separation { .. })));
    }

    #[test]
    fn all_zero_labels_degenerate() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(logit_fit(&design(&x, &[0.0; 3])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn score_vanishes_at_mle() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 37) % 17) as f64 / 4.0 - 2.0).collect();
        let y: Vec<f64> = (0..40).map(|i| if (i * 13) % 7 < 3 { 1.0 } else { 0.0 }).collect();
        let d = design(&x, &y);
        let f = logit_fit(&d).unwrap();
        let score = d.x().transpose() * &f.residuals;
        assert!(score.amax() < 1e-6);
    }

    #[test]
    fn non_binary_response_rejected() {
        assert!(logit_fit(&design(&[1.0, 2.0], &[0.5, 1.0])).is_err());
    }
}
