//! Ranked lists and runs: the common currency between retrievers, fusers,
//! rerankers and the metric code.
//!
//! Every ranking in the engine obeys one ordering rule: score descending,
//! ties broken by ascending doc id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        Self { doc_id: doc_id.into(), score }
    }
}

pub type Ranking = Vec<ScoredDoc>;

/// The global ordering: higher score first, then ascending doc id.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

pub fn sort_ranking(ranking: &mut [ScoredDoc]) {
    ranking.sort_by(|a, b| rank_order(a.score, &a.doc_id, b.score, &b.doc_id));
}

/// Selects the best `k` of `(ordinal, score)` candidates under the tie rule,
/// resolving ordinals to ids through `ids`.
pub fn top_k_ordinals<I>(candidates: I, ids: &[String], k: usize) -> Ranking
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut pool: Vec<(usize, f64)> = candidates.into_iter().collect();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| rank_order(a.1, &ids[a.0], b.1, &ids[b.0]);
    if k == 0 {
        return Vec::new();
    }
    if pool.len() > k {
        pool.select_nth_unstable_by(k - 1, cmp);
        pool.truncate(k);
    }
    pool.sort_by(cmp);
    pool.into_iter().map(|(ord, score)| ScoredDoc::new(ids[ord].clone(), score)).collect()
}

/// Per-query ranked lists plus provenance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub system: String,
    pub view: String,
    pub params: String,
    queries: BTreeMap<String, Ranking>,
}

impl Run {
    pub fn new(system: impl Into<String>) -> Self {
        Self { system: system.into(), ..Default::default() }
    }

    pub fn with_view(mut self, view: impl Into<String>) -> Self {
        self.view = view.into();
        self
    }

    pub fn with_params(mut self, params: impl Into<String>) -> Self {
        self.params = params.into();
        self
    }

    /// Inserts a ranking for `query_id`, re-sorting it under the tie rule.
    /// Duplicate doc ids within one query are rejected.
    pub fn insert(&mut self, query_id: impl Into<String>, mut ranking: Ranking) -> Result<()> {
        let query_id = query_id.into();
        let mut seen = HashSet::with_capacity(ranking.len());
        for entry in &ranking {
            if !seen.insert(entry.doc_id.as_str()) {
                return Err(Error::Integrity(format!("query {query_id}: doc {} ranked twice", entry.doc_id)));
            }
            if entry.score.is_nan() {
                return Err(Error::Integrity(format!("query {query_id}: doc {} has NaN score", entry.doc_id)));
            }
        }
        sort_ranking(&mut ranking);
        self.queries.insert(query_id, ranking);
        Ok(())
    }

    pub fn get(&self, query_id: &str) -> Option<&Ranking> {
        self.queries.get(query_id)
    }

    pub fn contains(&self, query_id: &str) -> bool {
        self.queries.contains_key(query_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Ranking)> {
        self.queries.iter()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &String> {
        self.queries.keys()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Keeps at most `depth` entries per query.
    pub fn truncated(&self, depth: usize) -> Run {
        let mut out = self.clone();
        for ranking in out.queries.values_mut() {
            ranking.truncate(depth);
        }
        out
    }

    /// TREC-style TSV: `query-id  doc-id  rank  score  system`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "query-id\tdoc-id\trank\tscore\tsystem")?;
        for (qid, ranking) in &self.queries {
            for (i, entry) in ranking.iter().enumerate() {
                writeln!(w, "{qid}\t{}\t{}\t{}\t{}", entry.doc_id, i + 1, entry.score, self.system)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        tsv::write_file(path, |w| self.write_tsv(w))
    }

    pub fn read_tsv<R: BufRead>(reader: R, origin: &Path) -> Result<Run> {
        let mut rows: BTreeMap<String, Vec<(usize, ScoredDoc)>> = BTreeMap::new();
        let mut system: Option<String> = None;
        tsv::for_each_record(reader, origin, &["query-id", "doc-id", "rank", "score", "system"], |line, fields| {
            let rank: usize =
                fields[2].parse().map_err(|_| Error::parse(origin, line, format!("bad rank `{}`", fields[2])))?;
            let score: f64 =
                fields[3].parse().map_err(|_| Error::parse(origin, line, format!("bad score `{}`", fields[3])))?;
            if system.is_none() {
                system = Some(fields[4].to_string());
            }
            rows.entry(fields[0].to_string()).or_default().push((rank, ScoredDoc::new(fields[1], score)));
            Ok(())
        })?;
        let mut run = Run::new(system.unwrap_or_default());
        for (qid, mut entries) in rows {
            entries.sort_by_key(|(rank, _)| *rank);
            run.insert(qid, entries.into_iter().map(|(_, e)| e).collect())?;
        }
        Ok(run)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Run> {
        let path = path.as_ref();
        let reader = tsv::open(path)?;
        Run::read_tsv(reader, path)
    }
}
