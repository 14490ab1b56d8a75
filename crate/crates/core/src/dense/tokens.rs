use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

use super::{dot, format, normalize_in_place, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::ranking::{top_k_ordinals, Ranking, Run};

/// A variable-length block of token vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl TokenMatrix {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Shape { expected: dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape { expected: dim, found: bad.len() });
        }
        Self::new(dim.max(1), rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_tokens(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    fn normalize_rows(&mut self) {
        for row in self.data.chunks_exact_mut(self.dim) {
            normalize_in_place(row);
        }
    }
}

/// Late-interaction relevance: for each query token the best dot product
/// against any document token, summed over query tokens.
pub fn maxsim_score(query: &TokenMatrix, doc: &TokenMatrix) -> Result<f64> {
    if query.dim != doc.dim {
        return Err(Error::Shape { expected: query.dim, found: doc.dim });
    }
    if query.n_tokens() == 0 || doc.n_tokens() == 0 {
        return Err(Error::EmptyInput("MaxSim needs at least one token per side".into()));
    }
    Ok(query.rows().map(|q| doc.rows().map(|d| dot(q, d)).fold(f64::NEG_INFINITY, f64::max)).sum())
}

/// Arithmetic mean of the token rows, L2-normalized.
pub fn mean_pool(tokens: &TokenMatrix) -> Result<Vec<f32>> {
    let n = tokens.n_tokens();
    if n == 0 {
        return Err(Error::EmptyInput("cannot mean-pool zero tokens".into()));
    }
    let mut acc = vec![0f64; tokens.dim];
    for row in tokens.rows() {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += f64::from(*v);
        }
    }
    let mut out: Vec<f32> = acc.iter().map(|a| (a / n as f64) as f32).collect();
    normalize_in_place(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenDoc {
    pub id: String,
    pub tokens: TokenMatrix,
}

/// Per-document token embeddings, as stored in `TOK1` files.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    dim: usize,
    docs: Vec<TokenDoc>,
    id_index: HashMap<String, usize>,
}

impl TokenEmbeddings {
    pub fn new(dim: usize, docs: Vec<TokenDoc>) -> Result<Self> {
        let mut id_index = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.tokens.dim != dim {
                return Err(Error::Shape { expected: dim, found: d.tokens.dim });
            }
            if d.tokens.n_tokens() == 0 {
                return Err(Error::EmptyInput(format!("document {} has no tokens", d.id)));
            }
            if id_index.insert(d.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate token-embedding id `{}`", d.id)));
            }
        }
        Ok(Self { dim, docs, id_index })
    }

    /// Loads a `TOK1` file with every token row L2-normalized.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = format::read_tok(path)?;
        let docs = raw
            .docs
            .into_iter()
            .map(|(id, _, data)| {
                let mut tokens = TokenMatrix::new(raw.dim, data)?;
                tokens.normalize_rows();
                Ok(TokenDoc { id, tokens })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.dim, docs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        format::write_tok(
            path,
            self.dim,
            self.docs.iter().map(|d| (d.id.as_str(), d.tokens.n_tokens(), d.tokens.as_slice())),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[TokenDoc] {
        &self.docs
    }

    pub fn get(&self, id: &str) -> Option<&TokenMatrix> {
        self.id_index.get(id).map(|&i| &self.docs[i].tokens)
    }

    fn ids(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.id.clone()).collect()
    }

    /// Exact MaxSim scan of every document for one query.
    pub fn maxsim_rank(&self, query: &TokenMatrix, k: usize, exclude: &HashSet<&str>) -> Result<Ranking> {
        let ids = self.ids();
        let scored = self
            .docs
            .iter()
            .enumerate()
            .filter(|(_, d)| !exclude.contains(d.id.as_str()))
            .map(|(i, d)| maxsim_score(query, &d.tokens).map(|s| (i, s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(top_k_ordinals(scored, &ids, k))
    }

    /// Mean-pools every document into a normalized single-vector matrix.
    pub fn mean_pooled(&self) -> Result<EmbeddingMatrix> {
        let mut data = Vec::with_capacity(self.len() * self.dim);
        for d in &self.docs {
            data.extend(mean_pool(&d.tokens)?);
        }
        Ok(EmbeddingMatrix::from_rows(self.ids(), self.dim, data)?.normalized())
    }
}

/// MaxSim retrieval for every query id present in `queries`.
pub fn maxsim_topk<S: AsRef<str> + Sync>(
    system: &str,
    queries: &TokenEmbeddings,
    docs: &TokenEmbeddings,
    query_ids: &[S],
    k: usize,
    exclude_self: bool,
) -> Result<Run> {
    if queries.dim != docs.dim {
        return Err(Error::Shape { expected: docs.dim, found: queries.dim });
    }
    let rankings: Vec<(String, Ranking)> = query_ids
        .par_iter()
        .filter_map(|qid| {
            let qid = qid.as_ref();
            let q = queries.get(qid)?;
            let mut exclude = HashSet::new();
            if exclude_self {
                exclude.insert(qid);
            }
            Some(docs.maxsim_rank(q, k, &exclude).map(|r| (qid.to_string(), r)))
        })
        .collect::<Result<_>>()?;
    let mut run = Run::new(system);
    for (qid, r) in rankings {
        run.insert(qid, r)?;
    }
    Ok(run)
}
