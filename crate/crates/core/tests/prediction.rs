use std::collections::HashMap;

use bankruin::panel::{build_features, BankPanel, Era, FailureEvent, FeatureConfig};
use bankruin::prediction::{
    binned_failure_prob, expanding_oos, fit_failure_model, pr_curve, roc_and_auc, ModelEstimator, ModelSpec,
    Regressor,
};
use bankruin::synth::{generate_panel, DgpConfig, TrueCoefficients};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (si, li) in scores.iter().zip(labels) {
        if !li {
            continue;
        }
        for (sj, lj) in scores.iter().zip(labels) {
            if *lj {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// Brute-force PR-AUC: one threshold per distinct score, highest first.
fn sweep_pr_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|l| **l).count() as f64;
    let (mut area, mut prev_tp) = (0.0, 0.0);
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l).count() as f64;
        let flagged = scores.iter().filter(|s| **s >= t).count() as f64;
        area += (tp - prev_tp) * (tp / flagged);
        prev_tp = tp;
    }
    area / positives
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..300).prop_flat_map(|n| {
        (prop::collection::vec(0u8..12, n), prop::collection::vec(any::<bool>(), n))
            .prop_map(|(s, l)| (s.into_iter().map(|v| f64::from(v) / 4.0).collect(), l))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn auc_equals_pairwise_concordance((scores, labels) in instance()) {
        prop_assume!(labels.iter().any(|l| *l) && labels.iter().any(|l| !*l));
        let curve = roc_and_auc(&scores, &labels).unwrap();
        prop_assert!((curve.auc.unwrap() - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn pr_auc_equals_threshold_sweep((scores, labels) in instance()) {
        prop_assume!(labels.iter().any(|l| *l));
        let curve = pr_curve(&scores, &labels).unwrap();
        prop_assert!((curve.pr_auc - sweep_pr_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn roc_is_monotone_and_anchored((scores, labels) in instance()) {
        prop_assume!(labels.iter().any(|l| *l) && labels.iter().any(|l| !*l));
        let curve = roc_and_auc(&scores, &labels).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.tpr, first.fpr), (0.0, 0.0));
        prop_assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[1].tpr >= w[0].tpr && w[1].fpr >= w[0].fpr);
        }
    }

    #[test]
    fn auc_is_invariant_to_monotone_transforms((scores, labels) in instance()) {
        prop_assume!(labels.iter().any(|l| *l) && labels.iter().any(|l| !*l));
        let shifted: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).exp()).collect();
        let a = roc_and_auc(&scores, &labels).unwrap().auc.unwrap();
        let b = roc_and_auc(&shifted, &labels).unwrap().auc.unwrap();
        prop_assert_eq!(a, b);
    }
}

fn features(panel: &BankPanel, events: &[FailureEvent]) -> BankPanel {
    let mut cfg = FeatureConfig::new(Era::Historical, vec![1]);
    cfg.min_age = None;
    build_features(panel, events, &cfg).unwrap().0
}

#[test]
fn insolvency_only_logit_recovers_true_coefficient() {
    let cfg = DgpConfig {
        n_banks: 1000,
        n_years: 20,
        seed: 7,
        coefficients: TrueCoefficients { intercept: -3.0, insolvency: -3.0, noncore: 0.0, interaction: 0.0 },
        ..DgpConfig::default()
    };
    let data = generate_panel(&cfg).unwrap();
    let panel = features(&data.panel, &data.failures);
    let spec = ModelSpec::new(vec![Regressor::Insolvency], ModelEstimator::Logit, 1);
    let model = fit_failure_model(&panel, &spec).unwrap();
    let b = model.fit.coefficient("insolvency").unwrap();
    let se = model.fit.std_error("insolvency").unwrap();
    assert!(model.fit.n_obs >= 15_000, "only {} complete cases", model.fit.n_obs);
    assert!((b + 3.0).abs() < 3.0 * se, "insolvency {b} (se {se})");
    let c = model.fit.coefficient("const").unwrap();
    let se_c = model.fit.std_error("const").unwrap();
    assert!((c + 3.0).abs() < 3.0 * se_c, "const {c} (se {se_c})");
}

#[test]
fn null_model_bins_match_base_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 20_000;
    let x: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let z: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let p = 0.05;
    let labels: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < p).collect();
    let table = binned_failure_prob(&[&x, &z], &labels, &[vec![33.3, 66.7], vec![33.3, 66.7]]).unwrap();
    assert_eq!(table.cells.len(), 9);
    for cell in &table.cells {
        let se = (p * (1.0 - p) / cell.count as f64).sqrt();
        let prob = cell.probability.unwrap();
        assert!((prob - p).abs() < 3.0 * se, "cell {:?}: {prob} vs {p} (se {se})", cell.bin);
    }
}

#[test]
fn backtest_scores_do_not_depend_on_later_data() {
    let cfg = DgpConfig { n_banks: 300, n_years: 24, seed: 5, ..DgpConfig::default() };
    let data = generate_panel(&cfg).unwrap();
    let spec = cfg.matching_spec();
    let full = expanding_oos(&features(&data.panel, &data.failures), &spec, 10).unwrap();

    let horizon_year = cfg.start_year + 17;
    let mut truncated = data.panel.clone();
    truncated.retain(|o, _| o.period.year <= horizon_year);
    let events: Vec<FailureEvent> =
        data.failures.iter().filter(|e| e.failure_date.year <= horizon_year).cloned().collect();
    let partial = expanding_oos(&features(&truncated, &events), &spec, 10).unwrap();

    let later: HashMap<_, _> = full
        .predictions
        .iter()
        .filter(|p| p.period.year <= horizon_year)
        .map(|p| ((p.bank_id.clone(), p.period), p.score))
        .collect();
    assert!(!partial.predictions.is_empty());
    assert_eq!(later.len(), partial.predictions.len());
    for p in &partial.predictions {
        let s = later[&(p.bank_id.clone(), p.period)];
        assert_eq!(s.to_bits(), p.score.to_bits(), "{} {}", p.bank_id, p.period);
    }
}

#[test]
fn backtest_never_scores_training_years() {
    let cfg = DgpConfig { n_banks: 150, n_years: 16, seed: 2, ..DgpConfig::default() };
    let data = generate_panel(&cfg).unwrap();
    let preds = expanding_oos(&features(&data.panel, &data.failures), &cfg.matching_spec(), 10).unwrap();
    let first = preds.predictions.iter().map(|p| p.period.year).min().unwrap();
    assert_eq!(first, cfg.start_year + 10);
}
