//! Run combination: min-max linear interpolation, reciprocal rank fusion,
//! two-stage reranking from external score tables, and grid sweeps.
//!
//! Fusion works on a per-query candidate pool: the union of each
//! contributing system's top `pool_depth` documents. A linear leg with zero
//! weight contributes no candidates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{EvalContext, Metric, MetricReport, Slice};
use crate::ranking::{Ranking, Run, ScoredDoc};
use crate::tsv;

pub const DEFAULT_POOL_DEPTH: usize = 1000;

/// Per-query min-max normalization to `[0, 1]`. When every score is equal
/// the normalized scores are all zero.
pub fn minmax_norm(entries: &[ScoredDoc]) -> Result<Vec<ScoredDoc>> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("min-max normalization of an empty list".into()));
    }
    let (lo, hi) =
        entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.score), hi.max(e.score)));
    let span = hi - lo;
    Ok(entries
        .iter()
        .map(|e| {
            let s = if span > 0.0 { (e.score - lo) / span } else { 0.0 };
            ScoredDoc::new(e.doc_id.clone(), s)
        })
        .collect())
}

fn pooled<'a>(run: &'a Run, qid: &str, depth: usize) -> &'a [ScoredDoc] {
    run.get(qid).map_or(&[], |r| &r[..r.len().min(depth)])
}

fn union_query_ids<'a>(runs: &[&'a Run]) -> Vec<&'a String> {
    let mut ids: Vec<&String> = runs.iter().flat_map(|r| r.query_ids()).collect();
    ids.sort();
    ids.dedup();
    ids
}

/// `alpha * dense_hat + (1 - alpha) * sparse_hat` over the pooled
/// candidates, each leg min-max normalized over its own pooled entries.
/// Candidates missing from a leg take 0 for that leg.
pub fn linear_fuse(dense: &Run, sparse: &Run, alpha: f64, pool_depth: usize) -> Result<Run> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut out = Run::new(format!("{}+{}", dense.system, sparse.system))
        .with_view(dense.view.clone())
        .with_params(format!("linear alpha={alpha} pool={pool_depth}"));
    for qid in union_query_ids(&[dense, sparse]) {
        let mut fused: BTreeMap<String, f64> = BTreeMap::new();
        for (run, weight) in [(dense, alpha), (sparse, 1.0 - alpha)] {
            let entries = pooled(run, qid, pool_depth);
            if weight == 0.0 || entries.is_empty() {
                continue;
            }
            for e in minmax_norm(entries)? {
                *fused.entry(e.doc_id).or_default() += weight * e.score;
            }
        }
        let ranking: Ranking = fused.into_iter().map(|(d, s)| ScoredDoc::new(d, s)).collect();
        out.insert(qid.clone(), ranking)?;
    }
    Ok(out)
}

/// Reciprocal rank fusion: `sum_s 1 / (k_rrf + rank_s(d))` over the systems
/// whose pooled list contains `d`. Ranks are 1-based.
pub fn rrf_fuse(runs: &[&Run], k_rrf: usize, pool_depth: usize) -> Result<Run> {
    if runs.len() < 2 {
        return Err(Error::Config("reciprocal rank fusion needs at least two runs".into()));
    }
    if k_rrf == 0 {
        return Err(Error::Config("RRF constant k must be at least 1".into()));
    }
    let systems: Vec<&str> = runs.iter().map(|r| r.system.as_str()).collect();
    let mut out = Run::new(systems.join("+"))
        .with_view(runs[0].view.clone())
        .with_params(format!("rrf k={k_rrf} pool={pool_depth}"));
    for qid in union_query_ids(runs) {
        let mut fused: BTreeMap<String, f64> = BTreeMap::new();
        for run in runs {
            for (i, e) in pooled(run, qid, pool_depth).iter().enumerate() {
                *fused.entry(e.doc_id.clone()).or_default() += 1.0 / (k_rrf + i + 1) as f64;
            }
        }
        out.insert(qid.clone(), fused.into_iter().map(|(d, s)| ScoredDoc::new(d, s)).collect())?;
    }
    Ok(out)
}

/// Externally computed `(query, doc) -> score` table, e.g. from a
/// cross-encoder.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub reranker: String,
    scores: HashMap<(String, String), f64>,
}

impl ScoreTable {
    pub fn new(reranker: impl Into<String>) -> Self {
        Self { reranker: reranker.into(), scores: HashMap::new() }
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::Data(format!("non-finite score for ({query_id}, {doc_id})")));
        }
        self.scores.insert((query_id.to_string(), doc_id.to_string()), score);
        Ok(())
    }

    pub fn get(&self, query_id: &str, doc_id: &str) -> Option<f64> {
        self.scores.get(&(query_id.to_string(), doc_id.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `query-id  doc-id  score`, rows sorted by query then doc.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut rows: Vec<(&(String, String), &f64)> = self.scores.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        tsv::write_file(path, |w| {
            writeln!(w, "query-id\tdoc-id\tscore")?;
            for ((q, d), s) in rows {
                writeln!(w, "{q}\t{d}\t{s}")?;
            }
            Ok(())
        })
    }

    pub fn load(path: &Path, reranker: &str) -> Result<Self> {
        let mut table = ScoreTable::new(reranker);
        tsv::for_each_record(tsv::open(path)?, path, &["query-id", "doc-id", "score"], |line, f| {
            let score: f64 = f[2].parse().map_err(|_| Error::parse(path, line, format!("bad score `{}`", f[2])))?;
            table.insert(f[0], f[1], score).map_err(|e| Error::parse(path, line, e.to_string()))
        })?;
        Ok(table)
    }
}

/// Reorders each query's top `depth` candidates by the table's scores and
/// drops everything below `depth`. Every pair in a top-`depth` list must be
/// scored; gaps are reported together.
pub fn rerank_with_scores(first_stage: &Run, depth: usize, table: &ScoreTable) -> Result<Run> {
    let mut missing = Vec::new();
    let mut out = Run::new(format!("{}>>{}", first_stage.system, table.reranker))
        .with_view(first_stage.view.clone())
        .with_params(format!("rerank depth={depth}"));
    let mut staged = Vec::new();
    for (qid, ranking) in first_stage.iter() {
        let mut reranked = Vec::with_capacity(depth.min(ranking.len()));
        for e in ranking.iter().take(depth) {
            match table.get(qid, &e.doc_id) {
                Some(s) => reranked.push(ScoredDoc::new(e.doc_id.clone(), s)),
                None => missing.push((qid.clone(), e.doc_id.clone())),
            }
        }
        staged.push((qid.clone(), reranked));
    }
    if !missing.is_empty() {
        return Err(Error::MissingScores(missing));
    }
    for (qid, r) in staged {
        out.insert(qid, r)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionMethod {
    Dense,
    Sparse,
    Linear { alpha: f64 },
    Rrf { k: usize },
}

impl fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionMethod::Dense => f.write_str("dense"),
            FusionMethod::Sparse => f.write_str("sparse"),
            FusionMethod::Linear { alpha } => write!(f, "linear(alpha={alpha})"),
            FusionMethod::Rrf { k } => write!(f, "rrf(k={k})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub method: FusionMethod,
    pub report: MetricReport,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Dense and sparse anchors first, then linear rows, then RRF rows.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn fusion_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| matches!(r.method, FusionMethod::Linear { .. } | FusionMethod::Rrf { .. }))
    }

    pub fn anchor(&self, which: FusionMethod) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == which)
    }

    /// Best fusion row on the ALL slice (first wins ties).
    pub fn best(&self, metric: Metric) -> Option<&SweepRow> {
        let mut best: Option<(&SweepRow, f64)> = None;
        for row in self.fusion_rows() {
            let v = row.report.mean(Slice::All, metric).unwrap_or(0.0);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((row, v));
            }
        }
        best.map(|(r, _)| r)
    }

    /// Best fusion value minus the dense-only value.
    pub fn best_delta(&self, metric: Metric) -> Option<f64> {
        let best = self.best(metric)?.report.mean(Slice::All, metric)?;
        let dense = self.anchor(FusionMethod::Dense)?.report.mean(Slice::All, metric)?;
        Some(best - dense)
    }
}

/// Evaluates dense-only, sparse-only and every grid point.
pub fn sweep(
    dense: &Run,
    sparse: &Run,
    alphas: &[f64],
    k_rrfs: &[usize],
    pool_depth: usize,
    ctx: &EvalContext<'_>,
) -> Result<SweepReport> {
    if alphas.is_empty() && k_rrfs.is_empty() {
        return Err(Error::Config("fusion sweep needs at least one grid point".into()));
    }
    let mut rows = vec![
        SweepRow { method: FusionMethod::Dense, report: ctx.evaluate(dense) },
        SweepRow { method: FusionMethod::Sparse, report: ctx.evaluate(sparse) },
    ];
    for &alpha in alphas {
        let fused = linear_fuse(dense, sparse, alpha, pool_depth)?;
        rows.push(SweepRow { method: FusionMethod::Linear { alpha }, report: ctx.evaluate(&fused) });
    }
    for &k in k_rrfs {
        let fused = rrf_fuse(&[dense, sparse], k, pool_depth)?;
        rows.push(SweepRow { method: FusionMethod::Rrf { k }, report: ctx.evaluate(&fused) });
    }
    Ok(SweepReport { rows })
}
