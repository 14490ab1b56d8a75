use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Named text sections a patent record may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Title,
    Abstract,
    Claims,
    Claim1,
    Description,
    DwpiTitle,
    DwpiDetail,
    DwpiNovelty,
    DwpiUse,
    DwpiAdvantage,
    DwpiFocus,
    Topics,
}

impl Section {
    pub const ALL: [Section; 12] = [
        Section::Title,
        Section::Abstract,
        Section::Claims,
        Section::Claim1,
        Section::Description,
        Section::DwpiTitle,
        Section::DwpiDetail,
        Section::DwpiNovelty,
        Section::DwpiUse,
        Section::DwpiAdvantage,
        Section::DwpiFocus,
        Section::Topics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Section::Title => "title",
            Section::Abstract => "abstract",
            Section::Claims => "claims",
            Section::Claim1 => "claim1",
            Section::Description => "description",
            Section::DwpiTitle => "dwpi_title",
            Section::DwpiDetail => "dwpi_detail",
            Section::DwpiNovelty => "dwpi_novelty",
            Section::DwpiUse => "dwpi_use",
            Section::DwpiAdvantage => "dwpi_advantage",
            Section::DwpiFocus => "dwpi_focus",
            Section::Topics => "topics",
        }
    }

    pub fn is_dwpi(self) -> bool {
        matches!(
            self,
            Section::DwpiTitle
                | Section::DwpiDetail
                | Section::DwpiNovelty
                | Section::DwpiUse
                | Section::DwpiAdvantage
                | Section::DwpiFocus
        )
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Section {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Section::ALL
            .iter()
            .copied()
            .find(|sec| sec.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown section `{s}`")))
    }
}

/// One patent record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub doc_id: String,
    pub family_id: String,
    pub sections: BTreeMap<Section, String>,
    /// Dataset name to labels, in the order they were supplied. The first
    /// label of a dataset is the document's primary label for clustering.
    pub labels: BTreeMap<String, Vec<String>>,
    pub ipc3: Vec<String>,
}

impl Document {
    pub fn section(&self, section: Section) -> &str {
        self.sections.get(&section).map(String::as_str).unwrap_or("")
    }

    pub fn has_section(&self, section: Section) -> bool {
        !self.section(section).is_empty()
    }

    /// Two-letter filing jurisdiction prefix of the publication number.
    pub fn jurisdiction_code(&self) -> Option<&str> {
        self.doc_id.get(..2)
    }

    pub fn add_label(&mut self, dataset: &str, label: &str) {
        let entry = self.labels.entry(dataset.to_string()).or_default();
        if !entry.iter().any(|l| l == label) {
            entry.push(label.to_string());
        }
    }
}

/// A directed family-level citation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CitationEdge {
    pub citing_family: String,
    pub cited_family: String,
}

impl CitationEdge {
    pub fn new(citing: impl Into<String>, cited: impl Into<String>) -> Self {
        Self { citing_family: citing.into(), cited_family: cited.into() }
    }

    pub fn is_self_citation(&self) -> bool {
        self.citing_family == self.cited_family
    }
}
