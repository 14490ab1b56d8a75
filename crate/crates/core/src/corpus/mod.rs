//! Patent corpus model: documents, families, views, splits and
//! citation-derived relevance judgments.

mod clean;
mod document;
mod io;
mod jurisdiction;
mod qa;
mod qrels;
mod split;
pub(crate) mod view;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use clean::{clean_text, extract_claim1};
pub use document::{CitationEdge, Document, Section};
pub use io::{
    load_corpus, read_citations, read_labels, write_citations, write_corpus, write_labels, LabelRow, LoadOptions,
};
pub use jurisdiction::{jurisdiction_group, JurisdictionGroup, JurisdictionMap};
pub use qa::{qa_check, QaReport, Violation};
pub use qrels::{build_qrels, domain_of, DomainPair, DomainResolver, Judgment, Qrels};
pub use split::{family_disjoint_split, Partition, Split, SplitRatios};
pub use view::{build_view, ViewCorpus, ViewEntry, ViewSpec};

use crate::error::{Error, Result};

/// A validated, immutable set of patent documents with their citation edges.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    families: BTreeMap<String, Vec<usize>>,
    citations: BTreeSet<CitationEdge>,
}

impl Corpus {
    /// Builds a corpus, rejecting empty or duplicate ids and empty family ids.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        let mut families: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, doc) in docs.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(Error::Integrity(format!("document #{} has an empty id", i + 1)));
            }
            if doc.family_id.is_empty() {
                return Err(Error::Integrity(format!("document {} has an empty family id", doc.doc_id)));
            }
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate document id `{}`", doc.doc_id)));
            }
            families.entry(doc.family_id.clone()).or_default().push(i);
        }
        Ok(Self { docs, by_id, families, citations: BTreeSet::new() })
    }

    /// Attaches citation edges. Self-citations are dropped. In strict mode an
    /// edge naming a family absent from the corpus is an integrity error;
    /// otherwise such edges are kept and simply never resolve.
    pub fn with_citations<I>(mut self, edges: I, strict: bool) -> Result<Self>
    where
        I: IntoIterator<Item = CitationEdge>,
    {
        for edge in edges {
            if edge.is_self_citation() {
                continue;
            }
            if strict {
                for fam in [&edge.citing_family, &edge.cited_family] {
                    if !self.families.contains_key(fam) {
                        return Err(Error::Integrity(format!(
                            "citation {} -> {} references unknown family `{fam}`",
                            edge.citing_family, edge.cited_family
                        )));
                    }
                }
            }
            self.citations.insert(edge);
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    pub fn families(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.families
    }

    /// Documents of one family, in corpus order.
    pub fn family(&self, family_id: &str) -> impl Iterator<Item = &Document> {
        self.families.get(family_id).into_iter().flatten().map(move |&i| &self.docs[i])
    }

    pub fn citations(&self) -> &BTreeSet<CitationEdge> {
        &self.citations
    }

    /// Attaches `(doc, dataset, label)` rows to their documents.
    pub fn with_labels<I>(mut self, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = LabelRow>,
    {
        for row in rows {
            let idx = *self
                .by_id
                .get(&row.doc_id)
                .ok_or_else(|| Error::Integrity(format!("label row references unknown document `{}`", row.doc_id)))?;
            self.docs[idx].add_label(&row.dataset, &row.label);
        }
        Ok(self)
    }

    /// Dataset names present on any document, sorted.
    pub fn label_datasets(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.docs.iter().flat_map(|d| d.labels.keys()).collect();
        set.into_iter().cloned().collect()
    }

    /// Drops documents whose full section content duplicates an earlier
    /// document of the same family. Returns the reduced corpus and the ids
    /// removed.
    pub fn dedup_families(self) -> Result<(Corpus, Vec<String>)> {
        let mut keep = vec![true; self.docs.len()];
        for members in self.families.values() {
            let mut seen: Vec<&BTreeMap<Section, String>> = Vec::new();
            for &i in members {
                let sections = &self.docs[i].sections;
                if seen.contains(&sections) {
                    keep[i] = false;
                } else {
                    seen.push(sections);
                }
            }
        }
        let removed: Vec<String> =
            self.docs.iter().zip(&keep).filter(|(_, k)| !**k).map(|(d, _)| d.doc_id.clone()).collect();
        let citations = self.citations.clone();
        let docs: Vec<Document> = self.docs.into_iter().zip(keep).filter_map(|(d, k)| k.then_some(d)).collect();
        let mut corpus = Corpus::from_documents(docs)?;
        corpus.citations = citations;
        Ok((corpus, removed))
    }
}
