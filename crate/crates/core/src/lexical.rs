//! Okapi BM25 over a view corpus.
//!
//! Scoring uses the smoothed natural-log IDF
//! `ln(1 + (N - df + 0.5) / (df + 0.5))`, so every matching term adds a
//! strictly positive amount. Repeated query tokens each contribute.
//!
//! # Index file layout (`BMI1`)
//!
//! All integers little-endian.
//!
//! ```text
//! magic        4 bytes  "BMI1"
//! version      u8       1
//! k1, b        f64, f64
//! doc_count    u64
//! per doc      u32 id_len, id bytes (UTF-8), u32 token_count
//! term_count   u64
//! per term     u32 term_len, term bytes, u32 posting_count,
//!              posting_count x (u32 doc_ordinal, u32 tf)
//! ```
//!
//! Terms are written in byte order; postings in ordinal order.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::ViewCorpus;
use crate::error::{Error, Result};
use crate::ranking::{top_k_ordinals, Ranking, Run};

const MAGIC: &[u8; 4] = b"BMI1";
const VERSION: u8 = 1;

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    params: Bm25Params,
}

impl Bm25Index {
    pub fn build(view: &ViewCorpus, params: Bm25Params) -> Result<Self> {
        if view.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty view".into()));
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(view.len());
        let mut doc_ids = Vec::with_capacity(view.len());
        for (ord, entry) in view.entries.iter().enumerate() {
            let tokens = tokenize(&entry.text);
            doc_lengths.push(tokens.len() as u32);
            doc_ids.push(entry.doc_id.clone());
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting { doc: ord as u32, tf: count });
            }
        }
        Ok(Self::assemble(postings, doc_lengths, doc_ids, params))
    }

    fn assemble(
        postings: HashMap<String, Vec<Posting>>,
        doc_lengths: Vec<u32>,
        doc_ids: Vec<String>,
        params: Bm25Params,
    ) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_lengths.len().max(1) as f64;
        Self { postings, doc_lengths, avg_doc_length, doc_ids, params }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, ordinal: usize) -> u32 {
        self.doc_lengths[ordinal]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Per-ordinal scores for every document matching at least one token.
    pub fn score_all(&self, query_text: &str) -> HashMap<usize, f64> {
        let Bm25Params { k1, b } = self.params;
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for token in tokenize(query_text) {
            let list = self.postings(&token);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(&token);
            for p in list {
                let tf = f64::from(p.tf);
                let len_ratio = if self.avg_doc_length > 0.0 {
                    f64::from(self.doc_lengths[p.doc as usize]) / self.avg_doc_length
                } else {
                    1.0
                };
                let denom = tf + k1 * (1.0 - b + b * len_ratio);
                *acc.entry(p.doc as usize).or_default() += idf * tf * (k1 + 1.0) / denom;
            }
        }
        acc
    }

    /// Best `k` documents for a query; zero-score documents are omitted.
    pub fn topk(&self, query_text: &str, k: usize) -> Ranking {
        let scores = self.score_all(query_text);
        top_k_ordinals(scores.into_iter().filter(|(_, s)| *s > 0.0), &self.doc_ids, k)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION])?;
        w.write_all(&self.params.k1.to_le_bytes())?;
        w.write_all(&self.params.b.to_le_bytes())?;
        w.write_all(&(self.doc_ids.len() as u64).to_le_bytes())?;
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            write_bytes(&mut w, id.as_bytes())?;
            w.write_all(&len.to_le_bytes())?;
        }
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        w.write_all(&(terms.len() as u64).to_le_bytes())?;
        for term in terms {
            write_bytes(&mut w, term.as_bytes())?;
            let list = &self.postings[term];
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for p in list {
                w.write_all(&p.doc.to_le_bytes())?;
                w.write_all(&p.tf.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::tsv::write_file(path, |w| self.write_to(w))
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a BMI1 index (bad magic)".into()));
        }
        let mut version = [0u8; 1];
        read_exact(&mut r, &mut version)?;
        if version[0] != VERSION {
            return Err(Error::Format(format!("unsupported BMI1 version {}", version[0])));
        }
        let params =
            Bm25Params { k1: f64::from_le_bytes(read_array(&mut r)?), b: f64::from_le_bytes(read_array(&mut r)?) };
        let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let mut doc_ids = Vec::with_capacity(n.min(1 << 24));
        let mut doc_lengths = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            doc_ids.push(read_string(&mut r)?);
            doc_lengths.push(u32::from_le_bytes(read_array(&mut r)?));
        }
        let n_terms = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let mut postings = HashMap::with_capacity(n_terms.min(1 << 24));
        for _ in 0..n_terms {
            let term = read_string(&mut r)?;
            let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
            let mut list = Vec::with_capacity(len.min(n));
            for _ in 0..len {
                let doc = u32::from_le_bytes(read_array(&mut r)?);
                let tf = u32::from_le_bytes(read_array(&mut r)?);
                if doc as usize >= n {
                    return Err(Error::Format(format!("posting for `{term}` points past doc count")));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
            return Err(Error::Format("trailing bytes after BMI1 index".into()));
        }
        Ok(Self::assemble(postings, doc_lengths, doc_ids, params))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Builds an index with the given parameters.
pub fn build_bm25(view: &ViewCorpus, k1: f64, b: f64) -> Result<Bm25Index> {
    Bm25Index::build(view, Bm25Params { k1, b })
}

pub fn bm25_topk(index: &Bm25Index, query_text: &str, k: usize) -> Ranking {
    index.topk(query_text, k)
}

/// Scores every query id present in `queries` against the index. Queries
/// with empty text are left out; with `exclude_self` a query never
/// retrieves its own document.
pub fn retrieve_bm25<S: AsRef<str> + Sync>(
    system: &str,
    index: &Bm25Index,
    queries: &ViewCorpus,
    query_ids: &[S],
    k: usize,
    exclude_self: bool,
) -> Result<Run> {
    let texts = queries.text_map();
    let rankings: Vec<(String, Ranking)> = query_ids
        .par_iter()
        .filter_map(|qid| {
            let qid = qid.as_ref();
            let text = texts.get(qid).filter(|t| !t.is_empty())?;
            let scores = index.score_all(text);
            let hits = scores.into_iter().filter(|&(d, s)| s > 0.0 && !(exclude_self && index.doc_ids[d] == qid));
            Some((qid.to_string(), top_k_ordinals(hits, &index.doc_ids, k)))
        })
        .collect();
    let mut run = Run::new(system).with_view(queries.name.clone());
    for (qid, r) in rankings {
        run.insert(qid, r)?;
    }
    Ok(run)
}

fn write_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> std::io::Result<()> {
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::Format("truncated BMI1 index".into()))
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = u32::from_le_bytes(read_array(r)?) as usize;
    let mut buf = vec![0u8; len];
    read_exact(r, &mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("non UTF-8 string in BMI1 index".into()))
}
