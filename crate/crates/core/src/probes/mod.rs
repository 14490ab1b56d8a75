//! Frozen-embedding probes: one-vs-rest logistic regression, kNN voting and
//! KMeans clustering with agreement scores.

mod cluster;
mod knn;
mod logistic;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

pub use cluster::{clustering_scores, kmeans, kmeans_rows, ClusteringScores, KMeansConfig, KMeansResult};
pub use knn::{knn_classify, KNN_KS};
pub use logistic::{
    eval_probe, fit_binary, train_linear_probe, train_linear_probe_with, BinaryFit, FitOptions, ProbeModel,
    DEFAULT_C_GRID,
};

use crate::corpus::Corpus;
use crate::dense::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::tsv;

/// Multi-label assignment of documents to an ordered class list. Each
/// document's classes are kept in the order they were listed, so the first
/// one is its primary label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub dataset: String,
    docs: Vec<String>,
    classes: Vec<String>,
    sets: Vec<Vec<usize>>,
}

impl LabelMatrix {
    /// Ground-truth matrix: every document needs at least one class.
    pub fn new(
        dataset: impl Into<String>,
        docs: Vec<String>,
        classes: Vec<String>,
        sets: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let m = Self::predictions(dataset, docs, classes, sets)?;
        if let Some(i) = m.sets.iter().position(|s| s.is_empty()) {
            return Err(Error::Data(format!("document `{}` has no label", m.docs[i])));
        }
        Ok(m)
    }

    /// Like [`LabelMatrix::new`] but rows may be empty.
    pub fn predictions(
        dataset: impl Into<String>,
        docs: Vec<String>,
        classes: Vec<String>,
        sets: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if docs.len() != sets.len() {
            return Err(Error::Pairing(docs.len(), sets.len()));
        }
        let mut sets = sets;
        for (doc, set) in docs.iter().zip(&mut sets) {
            let mut seen = BTreeSet::new();
            set.retain(|c| seen.insert(*c));
            if let Some(c) = set.iter().find(|&&c| c >= classes.len()) {
                return Err(Error::Data(format!("document `{doc}` references class index {c} of {}", classes.len())));
            }
        }
        Ok(Self { dataset: dataset.into(), docs, classes, sets })
    }

    /// Labels of `doc_ids` in `dataset`, over the given class list.
    /// Documents without a label in the dataset are skipped.
    pub fn from_corpus<S: AsRef<str>>(
        corpus: &Corpus,
        dataset: &str,
        classes: &[String],
        doc_ids: &[S],
    ) -> Result<Self> {
        let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut docs = Vec::new();
        let mut sets = Vec::new();
        for id in doc_ids {
            let id = id.as_ref();
            let doc = corpus.get(id).ok_or_else(|| Error::Data(format!("unknown document `{id}`")))?;
            let Some(labels) = doc.labels.get(dataset).filter(|l| !l.is_empty()) else {
                continue;
            };
            let set = labels
                .iter()
                .map(|l| {
                    index
                        .get(l.as_str())
                        .copied()
                        .ok_or_else(|| Error::Data(format!("label `{l}` of `{id}` not in the class list")))
                })
                .collect::<Result<Vec<_>>>()?;
            docs.push(id.to_string());
            sets.push(set);
        }
        Self::new(dataset, docs, classes.to_vec(), sets)
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn labels_of(&self, row: usize) -> &[usize] {
        &self.sets[row]
    }

    pub fn has(&self, row: usize, class: usize) -> bool {
        self.sets[row].contains(&class)
    }

    pub fn primary(&self, row: usize) -> Option<usize> {
        self.sets[row].first().copied()
    }

    /// Primary label of every row, for single-label consumers.
    pub fn primary_labels(&self) -> Result<Vec<usize>> {
        (0..self.len())
            .map(|i| self.primary(i).ok_or_else(|| Error::Data(format!("document `{}` has no label", self.docs[i]))))
            .collect()
    }

    pub fn positives(&self, class: usize) -> usize {
        self.sets.iter().filter(|s| s.contains(&class)).count()
    }

    /// `doc-id  dataset  label`, one row per positive.
    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| {
            writeln!(w, "doc-id\tdataset\tlabel")?;
            for (doc, set) in self.docs.iter().zip(&self.sets) {
                for &c in set {
                    writeln!(
                        w,
                        "{}\t{}\t{}",
                        tsv::escape(doc),
                        tsv::escape(&self.dataset),
                        tsv::escape(&self.classes[c])
                    )?;
                }
            }
            Ok(())
        })
    }
}

/// Sorted class names of a label dataset across the whole corpus.
pub fn dataset_classes(corpus: &Corpus, dataset: &str) -> Vec<String> {
    let set: BTreeSet<&String> = corpus.docs().iter().filter_map(|d| d.labels.get(dataset)).flatten().collect();
    set.into_iter().cloned().collect()
}

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// positives contributes 0.
pub fn macro_f1(truth: &LabelMatrix, predicted: &LabelMatrix) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::Pairing(truth.len(), predicted.len()));
    }
    if truth.classes != predicted.classes {
        return Err(Error::Data("truth and prediction class lists differ".into()));
    }
    if truth.n_classes() == 0 {
        return Err(Error::EmptyInput("no classes".into()));
    }
    let c = truth.n_classes();
    let (mut tp, mut fp, mut fneg) = (vec![0usize; c], vec![0usize; c], vec![0usize; c]);
    for i in 0..truth.len() {
        for k in 0..c {
            match (truth.has(i, k), predicted.has(i, k)) {
                (true, true) => tp[k] += 1,
                (false, true) => fp[k] += 1,
                (true, false) => fneg[k] += 1,
                (false, false) => {}
            }
        }
    }
    let total: f64 = (0..c)
        .map(|k| {
            let denom = 2 * tp[k] + fp[k] + fneg[k];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[k] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / c as f64)
}

/// Rows of `x` as f64 vectors, after checking they line up with `y`.
pub(crate) fn aligned_rows(x: &EmbeddingMatrix, y: &LabelMatrix) -> Result<Vec<Vec<f64>>> {
    if x.len() != y.len() {
        return Err(Error::Pairing(x.len(), y.len()));
    }
    if let Some(i) = (0..x.len()).find(|&i| x.ids()[i] != y.docs[i]) {
        return Err(Error::Data(format!(
            "row {i}: embedding id `{}` does not match label doc `{}`",
            x.ids()[i],
            y.docs[i]
        )));
    }
    Ok(rows_f64(x))
}

pub(crate) fn rows_f64(x: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    (0..x.len()).map(|i| x.row(i).iter().map(|&v| v as f64).collect()).collect()
}
