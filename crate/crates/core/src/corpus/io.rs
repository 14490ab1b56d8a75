use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::clean::{clean_text, extract_claim1};
use super::{CitationEdge, Corpus, Document, Section};
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject citation edges naming families absent from the corpus.
    pub strict_citations: bool,
}

/// One line of `corpus.jsonl`.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    #[serde(rename = "_id")]
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    sections: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family_id: Option<String>,
    #[serde(default)]
    ipc3: Vec<String>,
    #[serde(default)]
    labels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub doc_id: String,
    pub dataset: String,
    pub label: String,
}

/// Loads and validates a corpus plus optional label and citation files.
pub fn load_corpus(
    corpus_path: &Path,
    labels_path: Option<&Path>,
    citations_path: Option<&Path>,
    opts: LoadOptions,
) -> Result<Corpus> {
    let reader = tsv::open(corpus_path)?;
    let docs = read_corpus_records(reader, corpus_path)?;
    let mut corpus = Corpus::from_documents(docs)?;
    if let Some(path) = labels_path {
        corpus = corpus.with_labels(read_labels(path)?)?;
    }
    if let Some(path) = citations_path {
        corpus = corpus.with_citations(read_citations(path)?, opts.strict_citations)?;
    }
    Ok(corpus)
}

fn read_corpus_records<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        docs.push(record_to_document(record).map_err(|msg| Error::parse(origin, line_no, msg))?);
    }
    Ok(docs)
}

fn record_to_document(record: CorpusRecord) -> std::result::Result<Document, String> {
    let mut raw: BTreeMap<Section, String> = BTreeMap::new();
    for (name, text) in record.sections {
        let section: Section = name.parse().map_err(|e: Error| e.to_string())?;
        raw.insert(section, text);
    }
    if !record.title.is_empty() {
        raw.entry(Section::Title).or_insert(record.title);
    }
    if !record.text.is_empty() {
        raw.entry(Section::Abstract).or_insert(record.text);
    }
    // claim1 is derived from the raw claims so line-start markers survive.
    if !raw.contains_key(&Section::Claim1) {
        if let Some(claims) = raw.get(&Section::Claims) {
            let first = extract_claim1(claims).to_string();
            raw.insert(Section::Claim1, first);
        }
    }
    let sections: BTreeMap<Section, String> =
        raw.into_iter().map(|(s, t)| (s, clean_text(&t))).filter(|(_, t)| !t.is_empty()).collect();

    let mut ipc3: Vec<String> = Vec::new();
    for code in record.ipc3 {
        let prefix: String = code.trim().chars().take(3).collect();
        if !prefix.is_empty() && !ipc3.contains(&prefix) {
            ipc3.push(prefix);
        }
    }

    let mut doc = Document {
        family_id: record.family_id.unwrap_or_else(|| record.id.clone()),
        doc_id: record.id,
        sections,
        ipc3,
        ..Default::default()
    };
    for (dataset, labels) in record.labels {
        for label in labels {
            doc.add_label(&dataset, &label);
        }
    }
    Ok(doc)
}

fn document_to_record(doc: &Document) -> CorpusRecord {
    let sections = doc
        .sections
        .iter()
        .filter(|(s, _)| !matches!(s, Section::Title | Section::Abstract))
        .map(|(s, t)| (s.name().to_string(), t.clone()))
        .collect();
    CorpusRecord {
        id: doc.doc_id.clone(),
        title: doc.section(Section::Title).to_string(),
        text: doc.section(Section::Abstract).to_string(),
        sections,
        family_id: Some(doc.family_id.clone()),
        ipc3: doc.ipc3.clone(),
        labels: doc.labels.clone(),
    }
}

/// Writes the corpus back out in `corpus.jsonl` shape, one record per line,
/// in corpus order.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    tsv::write_file(path, |w| {
        for doc in corpus.docs() {
            let line = serde_json::to_string(&document_to_record(doc)).map_err(std::io::Error::other)?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

/// Reads `citations.tsv` into a deduplicated edge set. Self-citations are
/// kept here; the corpus and qrels builders drop them.
pub fn read_citations(path: &Path) -> Result<BTreeSet<CitationEdge>> {
    let mut edges = BTreeSet::new();
    tsv::for_each_record(tsv::open(path)?, path, &["citing_family", "cited_family"], |line, f| {
        if f[0].is_empty() || f[1].is_empty() {
            return Err(Error::parse(path, line, "empty family id"));
        }
        edges.insert(CitationEdge::new(f[0], f[1]));
        Ok(())
    })?;
    Ok(edges)
}

pub fn write_citations<'a, I>(edges: I, path: &Path) -> Result<()>
where
    I: IntoIterator<Item = &'a CitationEdge>,
{
    tsv::write_file(path, |w| {
        writeln!(w, "citing_family\tcited_family")?;
        for e in edges {
            writeln!(w, "{}\t{}", e.citing_family, e.cited_family)?;
        }
        Ok(())
    })
}

/// Reads a `doc-id  dataset  label` file.
pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rows = Vec::new();
    tsv::for_each_record(tsv::open(path)?, path, &["doc-id", "dataset", "label"], |line, f| {
        if f.iter().any(|s| s.is_empty()) {
            return Err(Error::parse(path, line, "empty field"));
        }
        rows.push(LabelRow { doc_id: f[0].to_string(), dataset: f[1].to_string(), label: f[2].to_string() });
        Ok(())
    })?;
    Ok(rows)
}

pub fn write_labels(rows: &[LabelRow], path: &Path) -> Result<()> {
    tsv::write_file(path, |w| {
        writeln!(w, "doc-id\tdataset\tlabel")?;
        for r in rows {
            writeln!(w, "{}\t{}\t{}", r.doc_id, r.dataset, r.label)?;
        }
        Ok(())
    })
}
