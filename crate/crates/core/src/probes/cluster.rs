use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::rows_f64;
use crate::dense::EmbeddingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Lloyd iterations stop once no centroid moves farther than this.
    pub shift_tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iter: 300, shift_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster ids renumbered by first appearance.
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

/// Euclidean KMeans on the rows of `x`: k-means++ seeding, Lloyd updates,
/// best of several restarts by inertia. Restart `r` draws from stream `r`
/// of a ChaCha generator seeded with `seed`.
pub fn kmeans(x: &EmbeddingMatrix, k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_rows(&rows_f64(x), k, seed, &KMeansConfig::default())
}

pub fn kmeans_rows(x: &[Vec<f64>], k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 || k > x.len() {
        return Err(Error::Config(format!("K={k} must be in 1..={}", x.len())));
    }
    if cfg.restarts == 0 {
        return Err(Error::Config("KMeans needs at least one restart".into()));
    }
    let runs: Vec<KMeansResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(x, k, &mut rng, cfg)
        })
        .collect();
    let mut best = None;
    for run in runs {
        if best.as_ref().is_none_or(|b: &KMeansResult| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus(x: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![x[rng.gen_range(0..x.len())].clone()];
    let mut d2: Vec<f64> = x.iter().map(|row| sq_dist(row, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..x.len())
        };
        centroids.push(x[pick].clone());
        for (row, d) in x.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(row, centroids.last().unwrap()));
        }
    }
    centroids
}

fn lloyd(x: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng, cfg: &KMeansConfig) -> KMeansResult {
    let dim = x[0].len();
    let mut centroids = seed_plus_plus(x, k, rng);
    let mut assignment = vec![0usize; x.len()];
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut dists = vec![0.0; x.len()];
        for (i, row) in x.iter().enumerate() {
            (assignment[i], dists[i]) = nearest(row, &centroids);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in x.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] == 0 {
                // re-seed an empty cluster at the worst-fitted point
                let far = (0..x.len()).fold(0, |b, i| if dists[i] > dists[b] { i } else { b });
                dists[far] = 0.0;
                x[far].clone()
            } else {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            };
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < cfg.shift_tol {
            break;
        }
    }
    let mut inertia = 0.0;
    for (i, row) in x.iter().enumerate() {
        let (c, d) = nearest(row, &centroids);
        assignment[i] = c;
        inertia += d;
    }
    KMeansResult { assignment: renumber(&assignment), inertia, iterations }
}

fn renumber(assignment: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringScores {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub ari: f64,
    /// Mutual information normalized by the arithmetic mean of the entropies.
    pub nmi: f64,
}

/// Agreement between a clustering and single-label truth.
///
/// When both sides put everything in one group (or both use singletons) the
/// scores are 1 by convention; a zero-entropy side otherwise yields
/// homogeneity or completeness of 1 and NMI of 0.
pub fn clustering_scores(assignment: &[usize], truth: &[usize]) -> Result<ClusteringScores> {
    if assignment.len() != truth.len() {
        return Err(Error::Pairing(assignment.len(), truth.len()));
    }
    if assignment.is_empty() {
        return Err(Error::EmptyInput("clustering of zero points".into()));
    }
    let n = assignment.len() as f64;
    let clusters = renumber(assignment);
    let classes = renumber(truth);
    let n_k = clusters.iter().max().unwrap() + 1;
    let n_c = classes.iter().max().unwrap() + 1;
    let mut table = vec![vec![0usize; n_k]; n_c];
    for (&c, &k) in classes.iter().zip(&clusters) {
        table[c][k] += 1;
    }
    let a: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let b: Vec<usize> = (0..n_k).map(|k| table.iter().map(|r| r[k]).sum()).collect();

    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&v| v > 0)
            .map(|&v| {
                let p = v as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_c = entropy(&a);
    let h_k = entropy(&b);
    let mut mi = 0.0;
    for (c, row) in table.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if v > 0 {
                let v = v as f64;
                mi += v / n * (v * n / (a[c] as f64 * b[k] as f64)).ln();
            }
        }
    }
    let mi = mi.max(0.0);
    // H(C|K) = H(C) - I, H(K|C) = H(K) - I
    let homogeneity = if h_c == 0.0 { 1.0 } else { (mi / h_c).min(1.0) };
    let completeness = if h_k == 0.0 { 1.0 } else { (mi / h_k).min(1.0) };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    let nmi = if h_c == 0.0 && h_k == 0.0 {
        1.0
    } else if h_c == 0.0 || h_k == 0.0 {
        0.0
    } else {
        (mi / ((h_c + h_k) / 2.0)).min(1.0)
    };

    let comb2 = |v: usize| (v as f64) * (v as f64 - 1.0) / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| comb2(v)).sum();
    let sum_a: f64 = a.iter().map(|&v| comb2(v)).sum();
    let sum_b: f64 = b.iter().map(|&v| comb2(v)).sum();
    let expected = sum_a * sum_b / comb2(assignment.len()).max(f64::MIN_POSITIVE);
    let max_index = (sum_a + sum_b) / 2.0;
    let ari = if max_index == expected { 1.0 } else { (index - expected) / (max_index - expected) };

    Ok(ClusteringScores { homogeneity, completeness, v_measure, ari, nmi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_pairs() {
        let x = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![10.0, 10.0], vec![10.0, 10.1]];
        let r = kmeans_rows(&x, 2, 42, &KMeansConfig::default()).unwrap();
        assert_eq!(r.assignment, [0, 0, 1, 1]);
        let r = kmeans_rows(&x, 4, 42, &KMeansConfig::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert_eq!(r.assignment, [0, 1, 2, 3]);
        assert!(kmeans_rows(&x, 5, 42, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn definitional_scores() {
        let truth = [0, 0, 1, 1, 2, 2];
        let s = clustering_scores(&[5, 5, 3, 3, 9, 9], &truth).unwrap();
        assert_eq!((s.v_measure, s.ari, s.nmi), (1.0, 1.0, 1.0));
        let s = clustering_scores(&[0; 4], &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.homogeneity, 0.0);
        assert_eq!(s.v_measure, 0.0);
        assert_eq!(s.ari, 0.0);
        let s = clustering_scores(&[0; 3], &[1; 3]).unwrap();
        assert_eq!((s.v_measure, s.ari, s.nmi), (1.0, 1.0, 1.0));
    }
}
