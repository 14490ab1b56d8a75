use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use super::{CitationEdge, Corpus, Document};
use crate::error::{Error, Result};
use crate::tsv;

/// Whether a judgment stays within the query's coarse technology class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainPair {
    In,
    Out,
    Unresolved,
}

impl DomainPair {
    pub fn classify(query_domain: Option<&str>, doc_domain: Option<&str>) -> Self {
        match (query_domain, doc_domain) {
            (Some(q), Some(d)) if q == d => DomainPair::In,
            (Some(_), Some(_)) => DomainPair::Out,
            _ => DomainPair::Unresolved,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainPair::In => "IN",
            DomainPair::Out => "OUT",
            DomainPair::Unresolved => "UNRESOLVED",
        }
    }
}

impl fmt::Display for DomainPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Judgment {
    pub doc_id: String,
    pub domain: DomainPair,
}

/// Binary relevance judgments, keyed by query id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, Vec<Judgment>>,
}

impl Qrels {
    /// Adds one judgment; repeated (query, doc) pairs are ignored.
    pub fn add(&mut self, query_id: &str, doc_id: &str, domain: DomainPair) {
        let list = self.judgments.entry(query_id.to_string()).or_default();
        if !list.iter().any(|j| j.doc_id == doc_id) {
            list.push(Judgment { doc_id: doc_id.to_string(), domain });
            list.sort();
        }
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &String> {
        self.judgments.keys()
    }

    pub fn n_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn n_judgments(&self) -> usize {
        self.judgments.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn judgments(&self, query_id: &str) -> &[Judgment] {
        self.judgments.get(query_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<Judgment>)> {
        self.judgments.iter()
    }

    pub fn relevant(&self, query_id: &str) -> HashSet<&str> {
        self.judgments(query_id).iter().map(|j| j.doc_id.as_str()).collect()
    }

    /// Relevant docs restricted to one domain tag.
    pub fn relevant_in(&self, query_id: &str, domain: DomainPair) -> HashSet<&str> {
        self.judgments(query_id).iter().filter(|j| j.domain == domain).map(|j| j.doc_id.as_str()).collect()
    }

    /// Judgment counts per tag, in `[IN, OUT, UNRESOLVED]` order.
    pub fn domain_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for j in self.judgments.values().flatten() {
            counts[j.domain as usize] += 1;
        }
        counts
    }

    /// Recomputes every judgment's domain tag from corpus documents. Docs or
    /// queries missing from the corpus become `UNRESOLVED`.
    pub fn retag<F>(&mut self, corpus: &Corpus, domain_fn: F)
    where
        F: Fn(&Document) -> Option<String>,
    {
        for (qid, list) in self.judgments.iter_mut() {
            let qd = corpus.get(qid).and_then(&domain_fn);
            for j in list.iter_mut() {
                let dd = corpus.get(&j.doc_id).and_then(&domain_fn);
                j.domain = DomainPair::classify(qd.as_deref(), dd.as_deref());
            }
        }
    }

    /// `query-id  corpus-id  score` with score always 1.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "query-id\tcorpus-id\tscore")?;
        for (qid, list) in &self.judgments {
            for j in list {
                writeln!(w, "{qid}\t{}\t1", j.doc_id)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write_tsv(w))
    }

    /// Reads a qrels file. Rows with score 0 are non-judgments and skipped.
    /// Domain tags start `UNRESOLVED`; call [`Qrels::retag`] with a corpus.
    pub fn load(path: &Path) -> Result<Qrels> {
        let mut qrels = Qrels::default();
        tsv::for_each_record(tsv::open(path)?, path, &["query-id", "corpus-id", "score"], |line, f| {
            let score: i64 =
                f[2].trim().parse().map_err(|_| Error::parse(path, line, format!("bad score `{}`", f[2])))?;
            if score > 0 {
                qrels.add(f[0], f[1], DomainPair::Unresolved);
            }
            Ok(())
        })?;
        Ok(qrels)
    }
}

/// Resolves a document's coarse technology domain.
#[derive(Debug, Clone, Default)]
pub struct DomainResolver {
    /// Label datasets holding coarse categories. Empty means every dataset.
    pub coarse_datasets: Vec<String>,
}

impl DomainResolver {
    pub fn new(coarse_datasets: Vec<String>) -> Self {
        Self { coarse_datasets }
    }

    pub fn domain_of(&self, doc: &Document) -> Option<String> {
        domain_of(doc, &self.coarse_datasets)
    }
}

/// Most frequent coarse label across the selected datasets (ties go to the
/// lexicographically smallest), else the first IPC-3 code, else `None`.
pub fn domain_of(doc: &Document, coarse_datasets: &[String]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (dataset, labels) in &doc.labels {
        if !coarse_datasets.is_empty() && !coarse_datasets.contains(dataset) {
            continue;
        }
        for label in labels {
            *counts.entry(label.as_str()).or_default() += 1;
        }
    }
    let mut best: Option<(&str, usize)> = None;
    for (label, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l.to_string()).or_else(|| doc.ipc3.first().cloned())
}

/// Expands family-level citation edges into document-level judgments.
///
/// For every edge whose two families both have corpus documents, each
/// document of the citing family becomes a query and each document of the
/// cited family a relevant target. Self-citations and same-family pairs
/// never produce judgments.
pub fn build_qrels<'a, I, F>(corpus: &Corpus, edges: I, domain_fn: F) -> Qrels
where
    I: IntoIterator<Item = &'a CitationEdge>,
    F: Fn(&Document) -> Option<String>,
{
    let edges: BTreeSet<&CitationEdge> = edges.into_iter().collect();
    let domains: Vec<Option<String>> = corpus.docs().iter().map(&domain_fn).collect();
    let mut qrels = Qrels::default();
    for edge in edges {
        if edge.is_self_citation() {
            continue;
        }
        let (Some(citing), Some(cited)) =
            (corpus.families().get(&edge.citing_family), corpus.families().get(&edge.cited_family))
        else {
            continue;
        };
        for &q in citing {
            for &d in cited {
                let (qd, dd) = (&corpus.docs()[q], &corpus.docs()[d]);
                if qd.family_id == dd.family_id {
                    continue;
                }
                let tag = DomainPair::classify(domains[q].as_deref(), domains[d].as_deref());
                qrels.add(&qd.doc_id, &dd.doc_id, tag);
            }
        }
    }
    qrels
}
