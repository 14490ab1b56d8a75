//! Dense single-vector and per-token embeddings: loading, normalization,
//! matryoshka truncation, exact cosine retrieval and MaxSim late
//! interaction.

pub mod format;
mod tokens;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

pub use tokens::{maxsim_score, maxsim_topk, mean_pool, TokenDoc, TokenEmbeddings, TokenMatrix};

use crate::error::{Error, Result};
use crate::ranking::{top_k_ordinals, Ranking, Run};

/// Rows are unit-norm to within this tolerance after normalization.
pub const UNIT_TOLERANCE: f64 = 1e-5;

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

pub(crate) fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt()
}

/// Scales `v` to unit length in place. Returns false (leaving zeros) when the
/// vector has no length.
pub(crate) fn normalize_in_place(v: &mut [f32]) -> bool {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        v.iter_mut().for_each(|x| *x = 0.0);
        return false;
    }
    for x in v.iter_mut() {
        *x = (f64::from(*x) / norm) as f32;
    }
    true
}

/// An N x d row-major f32 matrix with a doc-id index.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
    ids: Vec<String>,
    id_index: HashMap<String, usize>,
    normalized: bool,
    zero_rows: Vec<bool>,
}

impl EmbeddingMatrix {
    pub fn from_rows(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Shape { expected: ids.len() * dim, found: data.len() });
        }
        let mut id_index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate embedding id `{id}`")));
            }
        }
        let zero_rows = data.chunks_exact(dim).map(|r| r.iter().all(|x| *x == 0.0)).collect();
        Ok(Self { dim, data, ids, id_index, normalized: false, zero_rows })
    }

    /// Loads an `EMB1` file and its `.ids` sidecar. Rows are left raw.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = format::read_emb(path)?;
        Self::from_rows(raw.ids, raw.dim, raw.data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        format::write_emb(path, self.dim, &self.ids, &self.data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn row_of(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.zero_rows[i]
    }

    pub fn zero_row_ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().zip(&self.zero_rows).filter(|(_, z)| **z).map(|(id, _)| id.as_str())
    }

    /// L2-normalizes every row. Zero rows stay zero and are flagged.
    pub fn normalized(mut self) -> Self {
        let dim = self.dim;
        self.zero_rows = self.data.chunks_exact_mut(dim).map(|row| !normalize_in_place(row)).collect();
        self.normalized = true;
        self
    }

    /// Rows for `ids`, in that order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for id in ids {
            let row =
                self.row_of(id.as_ref()).ok_or_else(|| Error::Data(format!("no embedding for `{}`", id.as_ref())))?;
            data.extend_from_slice(row);
        }
        let mut m = Self::from_rows(ids.iter().map(|s| s.as_ref().to_string()).collect(), self.dim, data)?;
        if self.normalized {
            m.normalized = true;
        }
        Ok(m)
    }

    /// Exact cosine scan. The query is normalized here; rows must already be.
    /// Zero rows and `exclude` ids never appear.
    pub fn cosine_topk(&self, query: &[f32], k: usize, exclude: &HashSet<&str>) -> Result<Ranking> {
        if query.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, found: query.len() });
        }
        if !self.normalized {
            return Err(Error::Precondition("cosine retrieval needs a normalized matrix".into()));
        }
        let qnorm = l2_norm(query);
        if qnorm == 0.0 {
            return Ok(Vec::new());
        }
        let scores = (0..self.len())
            .filter(|&i| !self.zero_rows[i] && !exclude.contains(self.ids[i].as_str()))
            .map(|i| (i, dot(self.row(i), query) / qnorm));
        Ok(top_k_ordinals(scores, &self.ids, k))
    }
}

/// Free-function form of [`EmbeddingMatrix::cosine_topk`].
pub fn cosine_topk(matrix: &EmbeddingMatrix, query: &[f32], k: usize, exclude: &HashSet<&str>) -> Result<Ranking> {
    matrix.cosine_topk(query, k, exclude)
}

/// Keeps the first `d_new` coordinates and renormalizes each row.
pub fn truncate_renorm(matrix: &EmbeddingMatrix, d_new: usize) -> Result<EmbeddingMatrix> {
    if d_new == 0 || d_new > matrix.dim {
        return Err(Error::Config(format!("truncation dimension {d_new} outside 1..={}", matrix.dim)));
    }
    if d_new == matrix.dim && matrix.normalized {
        // renormalizing unit rows can still move the last bit
        return Ok(matrix.clone());
    }
    let mut data = Vec::with_capacity(matrix.len() * d_new);
    for i in 0..matrix.len() {
        data.extend_from_slice(&matrix.row(i)[..d_new]);
    }
    Ok(EmbeddingMatrix::from_rows(matrix.ids.clone(), d_new, data)?.normalized())
}

/// Runs every query id found in `queries` against `docs`. When
/// `exclude_self` is set a query's own document is never retrieved. Query
/// ids without an embedding are left out of the run.
pub fn retrieve_dense<S: AsRef<str> + Sync>(
    system: &str,
    queries: &EmbeddingMatrix,
    docs: &EmbeddingMatrix,
    query_ids: &[S],
    k: usize,
    exclude_self: bool,
) -> Result<Run> {
    if queries.dim() != docs.dim() {
        return Err(Error::Shape { expected: docs.dim(), found: queries.dim() });
    }
    let rankings: Vec<(String, Ranking)> = query_ids
        .par_iter()
        .filter_map(|qid| {
            let qid = qid.as_ref();
            let row = queries.row_of(qid)?;
            let mut exclude = HashSet::new();
            if exclude_self {
                exclude.insert(qid);
            }
            Some(docs.cosine_topk(row, k, &exclude).map(|r| (qid.to_string(), r)))
        })
        .collect::<Result<_>>()?;
    let mut run = Run::new(system);
    for (qid, r) in rankings {
        run.insert(qid, r)?;
    }
    Ok(run)
}
