//! ROC and precision-recall curves from a single sort.
//!
//! The sweep visits distinct scores from high to low; a threshold `c`
//! classifies every score `>= c` as a predicted failure, so tied scores enter
//! together as one step. AUC counts ties as one half.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// Defined as 1 at the origin, where nothing is predicted positive.
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationCurve {
    pub points: Vec<CurvePoint>,
    /// `None` when the labels contain no negatives.
    pub auc: Option<f64>,
    pub pr_auc: f64,
    pub base_rate: f64,
    /// PR-AUC relative to the base rate (the precision of a naive model).
    pub pr_auc_ratio: f64,
    pub n: usize,
    pub positives: usize,
}

impl ClassificationCurve {
    /// Tidy `threshold,tpr,fpr,precision,recall` table.
    pub fn to_table(&self, delimiter: char) -> String {
        let d = delimiter;
        let mut s = format!("threshold{d}tpr{d}fpr{d}precision{d}recall\n");
        for p in &self.points {
            s.push_str(&format!(
                "{}{d}{}{d}{}{d}{}{d}{}\n",
                p.threshold, p.tpr, p.fpr, p.precision, p.recall
            ));
        }
        s
    }

    /// Highest precision attained at recall of at least `recall`.
    pub fn precision_at_recall(&self, recall: f64) -> Option<f64> {
        self.points
            .iter()
            .skip(1)
            .filter(|p| p.recall >= recall)
            .map(|p| p.precision)
            .fold(None, |acc, p| Some(acc.map_or(p, |a: f64| a.max(p))))
    }
}

struct Sweep {
    /// Cumulative (tp, fp) after each distinct-score group, with the score.
    steps: Vec<(f64, u64, u64)>,
    /// Twice the number of concordant positive/negative pairs (ties count 1).
    concordant2: u128,
    positives: u64,
    negatives: u64,
}

fn sweep(scores: &[f64], labels: &[bool]) -> Result<Sweep> {
    if scores.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut steps = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut concordant2 = 0u128;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut pos_g, mut neg_g) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                pos_g += 1;
            } else {
                neg_g += 1;
            }
            i += 1;
        }
        concordant2 += 2 * u128::from(neg_g) * u128::from(tp) + u128::from(neg_g) * u128::from(pos_g);
        tp += pos_g;
        fp += neg_g;
        steps.push((s, tp, fp));
    }
    Ok(Sweep { steps, concordant2, positives: tp, negatives: fp })
}

fn build_curve(sw: &Sweep) -> ClassificationCurve {
    let (p, n) = (sw.positives, sw.negatives);
    let rate = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
        precision: 1.0,
        recall: 0.0,
    }];
    let mut weighted_precision = 0.0;
    let mut prev_tp = 0u64;
    for &(s, tp, fp) in &sw.steps {
        let precision = tp as f64 / (tp + fp) as f64;
        weighted_precision += (tp - prev_tp) as f64 * precision;
        prev_tp = tp;
        points.push(CurvePoint {
            threshold: s,
            tpr: rate(tp, p),
            fpr: rate(fp, n),
            precision,
            recall: rate(tp, p),
        });
    }
    let total = (p + n) as f64;
    let base_rate = p as f64 / total;
    let pr_auc = if p == 0 { 0.0 } else { weighted_precision / p as f64 };
    let auc = (p > 0 && n > 0).then(|| sw.concordant2 as f64 / (2 * u128::from(p) * u128::from(n)) as f64);
    ClassificationCurve {
        points,
        auc,
        pr_auc,
        base_rate,
        pr_auc_ratio: if base_rate > 0.0 { pr_auc / base_rate } else { f64::NAN },
        n: (p + n) as usize,
        positives: p as usize,
    }
}

/// ROC curve and AUC. Requires at least one positive and one negative.
pub fn roc_and_auc(scores: &[f64], labels: &[bool]) -> Result<ClassificationCurve> {
    let sw = sweep(scores, labels)?;
    if sw.positives == 0 || sw.negatives == 0 {
        return Err(Error::Undefined("AUC undefined: labels contain a single class".into()));
    }
    Ok(build_curve(&sw))
}

/// Precision-recall curve with step-interpolated PR-AUC. Requires a positive.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<ClassificationCurve> {
    let sw = sweep(scores, labels)?;
    if sw.positives == 0 {
        return Err(Error::Undefined("PR-AUC undefined: no positive labels".into()));
    }
    Ok(build_curve(&sw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confusion {
    pub cutoff: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub tnr: f64,
    pub fnr: f64,
}

/// Rates when predicting failure for scores strictly above `cutoff`.
pub fn confusion_at_cutoff(scores: &[f64], labels: &[bool], cutoff: f64) -> Result<Confusion> {
    if scores.len() != labels.len() {
        return Err(Error::Validation("scores and labels differ in length".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (s, l) in scores.iter().zip(labels) {
        match (*s > cutoff, *l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    if tp + fn_ == 0 || fp + tn == 0 {
        return Err(Error::Undefined("rates undefined: labels contain a single class".into()));
    }
    let tpr = tp as f64 / (tp + fn_) as f64;
    let fpr = fp as f64 / (fp + tn) as f64;
    Ok(Confusion { cutoff, tp, fp, tn, fn_, tpr, fpr, tnr: 1.0 - fpr, fnr: 1.0 - tpr })
}
