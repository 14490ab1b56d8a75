use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Corpus, Partition, Qrels, Split};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Documents of one family sit in more than one partition.
    FamilySpansSplits { family: String, partitions: Vec<Partition> },
    /// A corpus document has no partition.
    UnassignedDoc { doc_id: String },
    /// A judgment names a document absent from the corpus.
    QrelDocMissing { query_id: String, doc_id: String },
    /// A query is absent from the corpus or has no text at all.
    QueryMissingText { query_id: String },
    /// A label class has no training documents.
    EmptyLabelClass { dataset: String, label: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FamilySpansSplits { family, partitions } => {
                let names: Vec<&str> = partitions.iter().map(|p| p.name()).collect();
                write!(f, "disjointness\tfamily {family} spans {}", names.join(","))
            }
            Violation::UnassignedDoc { doc_id } => write!(f, "alignment\tdoc {doc_id} has no partition"),
            Violation::QrelDocMissing { query_id, doc_id } => {
                write!(f, "alignment\tquery {query_id} judges missing doc {doc_id}")
            }
            Violation::QueryMissingText { query_id } => write!(f, "alignment\tquery {query_id} has no text"),
            Violation::EmptyLabelClass { dataset, label } => {
                write!(f, "coverage\tclass {dataset}/{label} has no training documents")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QaReport {
    pub violations: Vec<Violation>,
}

impl QaReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Cross-checks corpus, split and qrels. Violations are returned as data.
pub fn qa_check(corpus: &Corpus, split: &Split, qrels: &Qrels) -> QaReport {
    let mut violations = Vec::new();

    for (family, members) in corpus.families() {
        let mut parts = BTreeSet::new();
        for &i in members {
            let doc = &corpus.docs()[i];
            match split.partition_of(&doc.doc_id) {
                Some(p) => {
                    parts.insert(p);
                }
                None => violations.push(Violation::UnassignedDoc { doc_id: doc.doc_id.clone() }),
            }
        }
        if parts.len() > 1 {
            violations
                .push(Violation::FamilySpansSplits { family: family.clone(), partitions: parts.into_iter().collect() });
        }
    }

    for (qid, judgments) in qrels.iter() {
        let has_text = corpus.get(qid).is_some_and(|d| d.sections.values().any(|t| !t.is_empty()));
        if !has_text {
            violations.push(Violation::QueryMissingText { query_id: qid.clone() });
        }
        for j in judgments {
            if !corpus.contains(&j.doc_id) {
                violations.push(Violation::QrelDocMissing { query_id: qid.clone(), doc_id: j.doc_id.clone() });
            }
        }
    }

    let mut train_counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for doc in corpus.docs() {
        let is_train = split.is_train(&doc.doc_id);
        for (dataset, labels) in &doc.labels {
            for label in labels {
                *train_counts.entry((dataset, label)).or_default() += usize::from(is_train);
            }
        }
    }
    for ((dataset, label), n) in train_counts {
        if n == 0 {
            violations.push(Violation::EmptyLabelClass { dataset: dataset.to_string(), label: label.to_string() });
        }
    }

    QaReport { violations }
}
