use rayon::prelude::*;

use super::{aligned_rows, LabelMatrix};
use crate::dense::{dot, l2_norm, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::ranking::rank_order;

pub const KNN_KS: [usize; 5] = [1, 3, 5, 10, 20];

/// Multi-label kNN by cosine similarity. Neighbors tie by ascending doc id.
/// A label is predicted when strictly more than `k / 2` neighbors carry it;
/// when no label clears that bar, the most frequent neighbor label wins
/// (ties to the lexicographically smallest class name).
pub fn knn_classify(
    x_train: &EmbeddingMatrix,
    y_train: &LabelMatrix,
    x_test: &EmbeddingMatrix,
    k: usize,
) -> Result<LabelMatrix> {
    if x_train.is_empty() {
        return Err(Error::EmptyInput("kNN training set is empty".into()));
    }
    aligned_rows(x_train, y_train)?;
    if x_train.dim() != x_test.dim() {
        return Err(Error::Shape { expected: x_train.dim(), found: x_test.dim() });
    }
    if k == 0 || k > x_train.len() {
        return Err(Error::Config(format!("k={k} must be in 1..={}", x_train.len())));
    }
    let train_norms: Vec<f64> = (0..x_train.len()).map(|i| l2_norm(x_train.row(i))).collect();
    let ids = x_train.ids();
    let classes = y_train.classes();

    let sets: Vec<Vec<usize>> = (0..x_test.len())
        .into_par_iter()
        .map(|t| {
            let q = x_test.row(t);
            let qn = l2_norm(q);
            let mut sims: Vec<(usize, f64)> = (0..x_train.len())
                .map(|i| {
                    let denom = qn * train_norms[i];
                    let s = if denom > 0.0 { dot(q, x_train.row(i)) / denom } else { 0.0 };
                    (i, s)
                })
                .collect();
            let cmp = |a: &(usize, f64), b: &(usize, f64)| rank_order(a.1, &ids[a.0], b.1, &ids[b.0]);
            if sims.len() > k {
                sims.select_nth_unstable_by(k - 1, cmp);
                sims.truncate(k);
            }
            let mut votes = vec![0usize; classes.len()];
            for &(i, _) in &sims {
                for &c in y_train.labels_of(i) {
                    votes[c] += 1;
                }
            }
            let mut chosen: Vec<usize> = (0..classes.len()).filter(|&c| 2 * votes[c] > k).collect();
            if chosen.is_empty() {
                let best = (0..classes.len())
                    .filter(|&c| votes[c] > 0)
                    .min_by(|&a, &b| votes[b].cmp(&votes[a]).then_with(|| classes[a].cmp(&classes[b])));
                chosen.extend(best);
            }
            chosen
        })
        .collect();
    LabelMatrix::predictions(y_train.dataset.clone(), x_test.ids().to_vec(), classes.to_vec(), sets)
}
