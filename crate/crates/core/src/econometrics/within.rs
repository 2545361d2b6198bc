use std::collections::HashMap;
use std::hash::Hash;

use nalgebra::{DMatrix, DVector};

use super::fit::DesignMatrix;
use crate::error::{Error, Result};

fn group_index<G: Hash + Eq>(groups: &[G]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<&G, usize> = HashMap::new();
    let idx = groups
        .iter()
        .map(|g| {
            let next = ids.len();
            *ids.entry(g).or_insert(next)
        })
        .collect();
    (idx, ids.len())
}

pub(crate) fn group_count<G: Hash + Eq>(groups: &[G]) -> usize {
    group_index(groups).1
}

/// Demean every column and the response within groups.
///
/// Singleton groups become all-zero rows and are kept.
pub fn within_transform<G: Hash + Eq>(design: &DesignMatrix, groups: &[G]) -> Result<DesignMatrix> {
    if groups.len() != design.nrows() {
        return Err(Error::Validation(format!(
            "{} group labels for {} rows",
            groups.len(),
            design.nrows()
        )));
    }
    let (idx, k) = group_index(groups);
    let mut counts = vec![0usize; k];
    for &g in &idx {
        counts[g] += 1;
    }
    let demean = |col: &[f64]| -> Vec<f64> {
        let mut sums = vec![0.0; k];
        for (v, &g) in col.iter().zip(&idx) {
            sums[g] += v;
        }
        col.iter()
            .zip(&idx)
            .map(|(v, &g)| if counts[g] == 1 { 0.0 } else { v - sums[g] / counts[g] as f64 })
            .collect()
    };

    let x = design.x();
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        out.set_column(j, &DVector::from_vec(demean(&col)));
    }
    let y = DVector::from_vec(demean(design.y().as_slice()));
    DesignMatrix::new(design.names().to_vec(), out, y)
}
