use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Filing-jurisdiction group of a publication number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JurisdictionGroup {
    En,
    Cn,
    Jp,
    De,
    Fr,
    Es,
    Ru,
    Other,
}

impl JurisdictionGroup {
    pub const ALL: [JurisdictionGroup; 8] = [
        JurisdictionGroup::En,
        JurisdictionGroup::Cn,
        JurisdictionGroup::Jp,
        JurisdictionGroup::De,
        JurisdictionGroup::Fr,
        JurisdictionGroup::Es,
        JurisdictionGroup::Ru,
        JurisdictionGroup::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JurisdictionGroup::En => "EN",
            JurisdictionGroup::Cn => "CN",
            JurisdictionGroup::Jp => "JP",
            JurisdictionGroup::De => "DE",
            JurisdictionGroup::Fr => "FR",
            JurisdictionGroup::Es => "ES",
            JurisdictionGroup::Ru => "RU",
            JurisdictionGroup::Other => "OTHER",
        }
    }
}

impl fmt::Display for JurisdictionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JurisdictionGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        JurisdictionGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown jurisdiction group `{s}`")))
    }
}

/// Country code to group table. Codes not in the table map to `OTHER`.
#[derive(Debug, Clone)]
pub struct JurisdictionMap {
    codes: HashMap<String, JurisdictionGroup>,
}

impl Default for JurisdictionMap {
    fn default() -> Self {
        use JurisdictionGroup::*;
        let table: [(&[&str], JurisdictionGroup); 7] = [
            (&["US", "EP", "WO", "GB", "AU", "CA"], En),
            (&["CN", "TW", "HK"], Cn),
            (&["JP"], Jp),
            (&["DE", "AT", "CH"], De),
            (&["FR"], Fr),
            (&["ES"], Es),
            (&["RU"], Ru),
        ];
        let codes = table.iter().flat_map(|(codes, g)| codes.iter().map(move |c| (c.to_string(), *g))).collect();
        Self { codes }
    }
}

impl JurisdictionMap {
    /// Overrides (or adds) the group of one country code.
    pub fn with(mut self, code: &str, group: JurisdictionGroup) -> Self {
        self.codes.insert(code.to_ascii_uppercase(), group);
        self
    }

    pub fn group(&self, doc_id: &str) -> Result<JurisdictionGroup> {
        let code = doc_id
            .get(..2)
            .filter(|c| c.chars().count() == 2)
            .ok_or_else(|| Error::Format(format!("doc id `{doc_id}` is shorter than a country code")))?;
        Ok(self.codes.get(&code.to_ascii_uppercase()).copied().unwrap_or(JurisdictionGroup::Other))
    }
}

/// Group under the default table.
pub fn jurisdiction_group(doc_id: &str) -> Result<JurisdictionGroup> {
    JurisdictionMap::default().group(doc_id)
}
