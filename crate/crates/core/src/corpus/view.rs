use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Section};
use crate::error::{Error, Result};
use crate::tsv;

const DWPI_SECTIONS: [Section; 6] = [
    Section::DwpiTitle,
    Section::DwpiDetail,
    Section::DwpiNovelty,
    Section::DwpiUse,
    Section::DwpiAdvantage,
    Section::DwpiFocus,
];

/// A named recomposition of document sections into one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewSpec {
    pub name: String,
    pub sections: Vec<Section>,
    pub separator: String,
}

impl ViewSpec {
    /// The six corpus views of the evaluation protocol.
    pub const CORPUS_VIEWS: [&'static str; 6] = ["TA", "TAC", "DWPI-Full", "Abstract", "Claim1", "DWPI-TA"];

    /// The five query sections of the section ablation.
    pub const QUERY_SECTIONS: [&'static str; 5] = ["TA", "TAC", "Abstract", "Claim1", "AllClaims"];

    /// Classification-dataset variants used for the DWPI comparison.
    pub const DWPI_VARIANTS: [&'static str; 3] = ["Combined", "DWPIonly", "noDWPI"];

    pub fn custom(name: impl Into<String>, sections: Vec<Section>, separator: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if sections.is_empty() {
            return Err(Error::Config(format!("view `{name}` has no sections")));
        }
        Ok(Self { name, sections, separator: separator.into() })
    }

    /// Looks up a named view (case-sensitive).
    pub fn named(name: &str) -> Result<Self> {
        use Section::*;
        let sections: Vec<Section> = match name {
            "TA" => vec![Title, Abstract],
            "TAC" => vec![Title, Abstract, Claims],
            "Claim1" => vec![Claim1],
            "Abstract" => vec![Abstract],
            "AllClaims" => vec![Claims],
            "DWPI-Full" => DWPI_SECTIONS.iter().copied().chain([Claims, Abstract, Title, Topics]).collect(),
            "DWPI-TA" => DWPI_SECTIONS.to_vec(),
            "Combined" => DWPI_SECTIONS.iter().copied().chain([Claim1, Abstract, Title, Topics]).collect(),
            "DWPIonly" => DWPI_SECTIONS.to_vec(),
            "noDWPI" => vec![Claim1, Abstract, Title, Topics],
            other => return Err(Error::Config(format!("unknown view `{other}`"))),
        };
        Self::custom(name, sections, " ")
    }

    /// Accepts a named view or a `+`-joined section list such as
    /// `title+claims`.
    /// The document's non-empty sections in view order, joined.
    pub fn compose(&self, doc: &Document) -> String {
        let parts: Vec<&str> = self.sections.iter().map(|&s| doc.section(s)).filter(|t| !t.is_empty()).collect();
        parts.join(&self.separator)
    }

    pub fn parse(spec: &str) -> Result<Self> {
        if let Ok(view) = Self::named(spec) {
            return Ok(view);
        }
        let sections = spec
            .split('+')
            .map(|s| s.trim().parse::<Section>())
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::Config(format!("unknown view `{spec}`")))?;
        Self::custom(spec, sections, " ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEntry {
    #[serde(rename = "_id")]
    pub doc_id: String,
    pub text: String,
}

/// Per-document text under one view, in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ViewCorpus {
    pub name: String,
    pub entries: Vec<ViewEntry>,
}

impl ViewCorpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Documents whose composed text is empty.
    pub fn empty_docs(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(|e| e.text.is_empty()).map(|e| e.doc_id.as_str())
    }

    pub fn text_map(&self) -> HashMap<&str, &str> {
        self.entries.iter().map(|e| (e.doc_id.as_str(), e.text.as_str())).collect()
    }

    /// `{"_id": ..., "text": ...}` per line, the `queries.jsonl` shape.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            let line = serde_json::to_string(e).map_err(std::io::Error::other)?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write_jsonl(w))
    }

    pub fn read_jsonl<R: BufRead>(name: &str, reader: R, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ViewEntry =
                serde_json::from_str(&line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
            entries.push(entry);
        }
        Ok(Self { name: name.to_string(), entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::read_jsonl(&name, tsv::open(path)?, path)
    }
}

/// Joins each document's non-empty sections in view order. Documents with
/// nothing to show keep an empty entry so row alignment is preserved.
pub fn build_view(corpus: &Corpus, spec: &ViewSpec) -> ViewCorpus {
    let entries =
        corpus.docs().iter().map(|doc| ViewEntry { doc_id: doc.doc_id.clone(), text: spec.compose(doc) }).collect();
    ViewCorpus { name: spec.name.clone(), entries }
}
