//! Binary-relevance IR metrics and slice-aware aggregation.
//!
//! nDCG@k uses gain 1 for relevant documents, a `log2(rank + 1)` discount
//! and an ideal DCG built from `min(|relevant|, k)` relevant documents.
//! AP and RR are computed over the whole retrieved list; relevant documents
//! never retrieved contribute zero.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::corpus::{DomainPair, JurisdictionGroup, JurisdictionMap, Qrels};
use crate::error::{Error, Result};
use crate::ranking::Run;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueryMetrics {
    pub ndcg: f64,
    pub recall: f64,
    pub ap: f64,
    pub rr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Ndcg,
    Recall,
    Map,
    Mrr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ndcg, Metric::Recall, Metric::Map, Metric::Mrr];

    pub fn label(self, k: usize) -> String {
        match self {
            Metric::Ndcg => format!("nDCG@{k}"),
            Metric::Recall => format!("Recall@{k}"),
            Metric::Map => "MAP".to_string(),
            Metric::Mrr => "MRR".to_string(),
        }
    }

    pub fn of(self, m: &QueryMetrics) -> f64 {
        match self {
            Metric::Ndcg => m.ndcg,
            Metric::Recall => m.recall,
            Metric::Map => m.ap,
            Metric::Mrr => m.rr,
        }
    }

    pub fn parse(s: &str) -> Result<Metric> {
        let lower = s.to_ascii_lowercase();
        let head = lower.split('@').next().unwrap_or("");
        match head {
            "ndcg" => Ok(Metric::Ndcg),
            "recall" => Ok(Metric::Recall),
            "map" | "ap" => Ok(Metric::Map),
            "mrr" | "rr" => Ok(Metric::Mrr),
            _ => Err(Error::Config(format!("unknown metric `{s}`"))),
        }
    }
}

/// Metrics for one ranked list against its relevant set.
pub fn query_metrics<S: AsRef<str>>(ranking: &[S], relevant: &HashSet<&str>, k: usize) -> Result<QueryMetrics> {
    if relevant.is_empty() {
        return Err(Error::Precondition("query has no relevant documents".into()));
    }
    let n_rel = relevant.len() as f64;
    let mut dcg = 0.0;
    let mut hits_at_k = 0usize;
    let mut hits = 0usize;
    let mut ap_sum = 0.0;
    let mut rr = 0.0;
    for (i, doc) in ranking.iter().enumerate() {
        if !relevant.contains(doc.as_ref()) {
            continue;
        }
        let rank = i + 1;
        hits += 1;
        ap_sum += hits as f64 / rank as f64;
        if rr == 0.0 {
            rr = 1.0 / rank as f64;
        }
        if rank <= k {
            hits_at_k += 1;
            dcg += 1.0 / ((rank + 1) as f64).log2();
        }
    }
    let ideal: f64 = (1..=relevant.len().min(k)).map(|r| 1.0 / ((r + 1) as f64).log2()).sum();
    Ok(QueryMetrics {
        ndcg: if ideal > 0.0 { dcg / ideal } else { 0.0 },
        recall: hits_at_k as f64 / n_rel,
        ap: ap_sum / n_rel,
        rr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slice {
    All,
    In,
    Out,
    Jurisdiction(JurisdictionGroup),
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slice::All => f.write_str("ALL"),
            Slice::In => f.write_str("IN"),
            Slice::Out => f.write_str("OUT"),
            Slice::Jurisdiction(g) => write!(f, "JUR:{g}"),
        }
    }
}

/// Per-query metric values of one slice, in query-id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliceResult {
    pub per_query: Vec<(String, QueryMetrics)>,
}

impl SliceResult {
    pub fn n_queries(&self) -> usize {
        self.per_query.len()
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        if self.per_query.is_empty() {
            return None;
        }
        let sum: f64 = self.per_query.iter().map(|(_, m)| metric.of(m)).sum();
        Some(sum / self.per_query.len() as f64)
    }

    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.per_query.iter().map(|(_, m)| metric.of(m)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub system: String,
    pub view: String,
    pub k: usize,
    pub slices: BTreeMap<Slice, SliceResult>,
    /// Judged queries absent from the run; they score zero everywhere.
    pub missing_queries: usize,
}

impl MetricReport {
    pub fn slice(&self, slice: Slice) -> Option<&SliceResult> {
        self.slices.get(&slice)
    }

    pub fn mean(&self, slice: Slice, metric: Metric) -> Option<f64> {
        self.slice(slice).and_then(|s| s.mean(metric))
    }

    pub fn n_queries(&self, slice: Slice) -> usize {
        self.slice(slice).map_or(0, SliceResult::n_queries)
    }

    /// IN minus OUT mean, when both slices have queries.
    pub fn gap(&self, metric: Metric) -> Option<f64> {
        Some(self.mean(Slice::In, metric)? - self.mean(Slice::Out, metric)?)
    }

    /// ALL-slice per-query values keyed by query id.
    pub fn per_query(&self, metric: Metric) -> Vec<(String, f64)> {
        self.slice(Slice::All)
            .map(|s| s.per_query.iter().map(|(q, m)| (q.clone(), metric.of(m))).collect())
            .unwrap_or_default()
    }
}

/// Evaluation settings shared by every run scored against the same qrels.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub qrels: &'a Qrels,
    pub k: usize,
    pub jurisdictions: Option<&'a JurisdictionMap>,
}

impl<'a> EvalContext<'a> {
    pub fn new(qrels: &'a Qrels, k: usize) -> Self {
        Self { qrels, k, jurisdictions: None }
    }

    pub fn with_jurisdictions(mut self, map: &'a JurisdictionMap) -> Self {
        self.jurisdictions = Some(map);
        self
    }

    pub fn evaluate(&self, run: &Run) -> MetricReport {
        aggregate(run, self.qrels, self.jurisdictions, self.k)
    }
}

struct QueryRow {
    qid: String,
    all: QueryMetrics,
    inn: Option<QueryMetrics>,
    out: Option<QueryMetrics>,
    jurisdiction: Option<JurisdictionGroup>,
    missing: bool,
}

/// Scores `run` against `qrels` on the ALL, IN and OUT slices and, when a
/// jurisdiction table is supplied, per query jurisdiction group.
///
/// IN (OUT) keeps only the IN-tagged (OUT-tagged) judgments of each query
/// and drops queries left with none; a query may land in both. UNRESOLVED
/// judgments count only toward ALL.
pub fn aggregate(run: &Run, qrels: &Qrels, jurisdictions: Option<&JurisdictionMap>, k: usize) -> MetricReport {
    let qids: Vec<&String> = qrels.query_ids().collect();
    let rows: Vec<QueryRow> = qids
        .par_iter()
        .map(|qid| {
            let empty = Vec::new();
            let ranking: Vec<&str> = run.get(qid).unwrap_or(&empty).iter().map(|e| e.doc_id.as_str()).collect();
            let score = |rel: HashSet<&str>| -> Option<QueryMetrics> {
                (!rel.is_empty()).then(|| query_metrics(&ranking, &rel, k).expect("non-empty relevant set"))
            };
            QueryRow {
                qid: (*qid).clone(),
                all: score(qrels.relevant(qid)).unwrap_or_default(),
                inn: score(qrels.relevant_in(qid, DomainPair::In)),
                out: score(qrels.relevant_in(qid, DomainPair::Out)),
                jurisdiction: jurisdictions.and_then(|m| m.group(qid).ok()),
                missing: !run.contains(qid),
            }
        })
        .collect();

    let mut slices: BTreeMap<Slice, SliceResult> = BTreeMap::new();
    for s in [Slice::All, Slice::In, Slice::Out] {
        slices.insert(s, SliceResult::default());
    }
    let mut missing_queries = 0;
    for row in rows {
        missing_queries += usize::from(row.missing);
        let mut push = |slice: Slice, m: QueryMetrics| {
            slices.entry(slice).or_default().per_query.push((row.qid.clone(), m));
        };
        push(Slice::All, row.all);
        if let Some(m) = row.inn {
            push(Slice::In, m);
        }
        if let Some(m) = row.out {
            push(Slice::Out, m);
        }
        if let Some(g) = row.jurisdiction {
            push(Slice::Jurisdiction(g), row.all);
        }
    }
    MetricReport { system: run.system.clone(), view: run.view.clone(), k, slices, missing_queries }
}

/// Gain from adding proprietary summary fields: `combined - without`.
pub fn dwpi_advantage(metric_combined: f64, metric_nodwpi: f64) -> f64 {
    metric_combined - metric_nodwpi
}
