use serde::Serialize;

use crate::error::{Error, Result};

/// Percentile of `sorted` (ascending) with linear interpolation between order
/// statistics; `pct` is in [0, 100].
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinCell {
    /// Bin index along each feature (the second is `None` for one feature).
    pub bin: (usize, Option<usize>),
    pub count: usize,
    pub failures: usize,
    /// `None` for an empty bin.
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinTable {
    /// Cut points in feature units for each binned feature.
    pub cuts: Vec<Vec<f64>>,
    pub cells: Vec<BinCell>,
}

impl BinTable {
    pub fn to_table(&self, delimiter: char) -> String {
        let d = delimiter;
        let mut s = format!("bin1{d}bin2{d}count{d}failures{d}probability\n");
        for c in &self.cells {
            let b2 = c.bin.1.map(|b| b.to_string()).unwrap_or_default();
            let p = c.probability.map(|p| p.to_string()).unwrap_or_default();
            s.push_str(&format!("{}{d}{b2}{d}{}{d}{}{d}{p}\n", c.bin.0, c.count, c.failures));
        }
        s
    }
}

fn cut_points(values: &[f64], edges_pct: &[f64]) -> Result<Vec<f64>> {
    if edges_pct.iter().any(|p| !(0.0..=100.0).contains(p)) {
        return Err(Error::Config("percentile edges must lie in [0, 100]".into()));
    }
    if edges_pct.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("percentile edges must be strictly increasing".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(edges_pct.iter().map(|p| percentile(&sorted, *p)).collect())
}

/// Bins are closed below: bin `k` holds values in `[cut[k-1], cut[k])`.
fn bin_of(v: f64, cuts: &[f64]) -> usize {
    cuts.partition_point(|c| *c <= v)
}

/// Empirical failure frequency by percentile bins of one or two features.
///
/// `features` holds one vector per feature (one or two); interior percentile
/// edges are pooled over all rows, so `edges_pct = [20, 40, 60, 80]` gives
/// quintile bins.
pub fn binned_failure_prob(features: &[&[f64]], labels: &[bool], edges_pct: &[Vec<f64>]) -> Result<BinTable> {
    if features.is_empty() || features.len() > 2 || edges_pct.len() != features.len() {
        return Err(Error::Config("binning needs one or two features, each with its edges".into()));
    }
    if labels.is_empty() {
        return Err(Error::Validation("no rows to bin".into()));
    }
    if features.iter().any(|f| f.len() != labels.len()) {
        return Err(Error::Validation("features and labels differ in length".into()));
    }
    if features.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
        return Err(Error::Validation("binned features must be finite".into()));
    }
    let cuts: Vec<Vec<f64>> = features
        .iter()
        .zip(edges_pct)
        .map(|(f, e)| cut_points(f, e))
        .collect::<Result<_>>()?;
    let n1 = cuts[0].len() + 1;
    let n2 = cuts.get(1).map_or(1, |c| c.len() + 1);
    let mut counts = vec![(0usize, 0usize); n1 * n2];
    for i in 0..labels.len() {
        let b1 = bin_of(features[0][i], &cuts[0]);
        let b2 = if features.len() == 2 { bin_of(features[1][i], &cuts[1]) } else { 0 };
        let cell = &mut counts[b1 * n2 + b2];
        cell.0 += 1;
        cell.1 += usize::from(labels[i]);
    }
    let cells = counts
        .iter()
        .enumerate()
        .map(|(k, &(count, failures))| BinCell {
            bin: (k / n2, (features.len() == 2).then_some(k % n2)),
            count,
            failures,
            probability: (count > 0).then(|| failures as f64 / count as f64),
        })
        .collect();
    Ok(BinTable { cuts, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 25.0), 2.0);
        assert_eq!(percentile(&v, 10.0), 1.4);
    }

    #[test]
    fn quintile_bins_and_probabilities() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let labels: Vec<bool> = (0..100).map(|i| i >= 80).collect();
        let t = binned_failure_prob(&[&x], &labels, &[vec![20.0, 40.0, 60.0, 80.0]]).unwrap();
        assert_eq!(t.cells.len(), 5);
        let counts: Vec<usize> = t.cells.iter().map(|c| c.count).collect();
        assert_eq!(counts.iter().sum::<usize>(), 100);
        assert_eq!(t.cells[4].probability, Some(1.0));
        assert_eq!(t.cells[0].probability, Some(0.0));
    }

    #[test]
    fn joint_bins_report_empty_cells() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let z = [0.0, 1.0, 2.0, 3.0];
        let labels = [false, false, true, true];
        let t = binned_failure_prob(&[&x, &z], &labels, &[vec![50.0], vec![50.0]]).unwrap();
        assert_eq!(t.cells.len(), 4);
        let off = t.cells.iter().find(|c| c.bin == (0, Some(1))).unwrap();
        assert_eq!((off.count, off.probability), (0, None));
        let top = t.cells.iter().find(|c| c.bin == (1, Some(1))).unwrap();
        assert_eq!(top.probability, Some(1.0));
    }

    #[test]
    fn bad_edges_rejected() {
        let x = [0.0, 1.0];
        assert!(binned_failure_prob(&[&x], &[true, false], &[vec![60.0, 40.0]]).is_err());
        assert!(binned_failure_prob(&[&x], &[true, false], &[vec![120.0]]).is_err());
    }
}
