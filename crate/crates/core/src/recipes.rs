//! Contrastive training-pair generation for the fine-tuning recipes.
//!
//! * R1: documents sharing a fine-grained label (TA text on both sides)
//! * R2: citing family paired with cited family (TA text)
//! * R3: a document's abstract paired with its first claim
//! * R4: R1, R2 and R3 concatenated
//! * R3M: R3 resized to a target count
//!
//! Only train-split documents are used.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document, Section, Split, ViewSpec};
use crate::error::{Error, Result};
use crate::tsv;

pub const DEFAULT_R1_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Recipe {
    R1,
    R2,
    R3,
    R4,
    R3M,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::R1 => "R1",
            Recipe::R2 => "R2",
            Recipe::R3 => "R3",
            Recipe::R4 => "R4",
            Recipe::R3M => "R3M",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R1" => Ok(Recipe::R1),
            "R2" => Ok(Recipe::R2),
            "R3" => Ok(Recipe::R3),
            "R4" => Ok(Recipe::R4),
            "R3M" | "R3-MATCHED" => Ok(Recipe::R3M),
            _ => Err(Error::Config(format!("unknown recipe `{s}`"))),
        }
    }
}

/// Which generator produced a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    R1,
    R2,
    R3,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::R1 => "R1",
            Provenance::R2 => "R2",
            Provenance::R3 => "R3",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R1" => Ok(Provenance::R1),
            "R2" => Ok(Provenance::R2),
            "R3" => Ok(Provenance::R3),
            _ => Err(Error::Format(format!("unknown provenance `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub anchor: String,
    pub positive: String,
    pub provenance: Provenance,
    /// Source documents; not written to pair files.
    pub anchor_doc: String,
    pub positive_doc: String,
}

#[derive(Debug, Clone)]
pub struct RecipeOptions {
    /// Label datasets used for R1; empty means all.
    pub r1_datasets: Vec<String>,
    /// Pairs sampled per label when a label's closure is larger. `None`
    /// keeps every pair.
    pub r1_cap: Option<usize>,
    /// Required for R3M.
    pub target_count: Option<usize>,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        Self { r1_datasets: Vec::new(), r1_cap: Some(DEFAULT_R1_CAP), target_count: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub recipe: Recipe,
    pub seed: u64,
    /// Generation parameters, e.g. the R1 cap.
    pub params: String,
    pub pairs: Vec<Pair>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<Provenance, usize> {
        let mut out = BTreeMap::new();
        for p in &self.pairs {
            *out.entry(p.provenance).or_insert(0) += 1;
        }
        out
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.pairs.iter().filter(|p| p.provenance == provenance).count()
    }

    /// Source documents outside the train partition.
    pub fn leakage(&self, split: &Split) -> BTreeSet<String> {
        self.pairs
            .iter()
            .flat_map(|p| [&p.anchor_doc, &p.positive_doc])
            .filter(|d| !split.is_train(d))
            .cloned()
            .collect()
    }

    /// `anchor  positive  provenance`, texts escaped.
    pub fn write_tsv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "anchor\tpositive\tprovenance")?;
        for p in &self.pairs {
            writeln!(w, "{}\t{}\t{}", tsv::escape(&p.anchor), tsv::escape(&p.positive), p.provenance.name())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| self.write_tsv(w))
    }
}

/// Reads a pair file back as `(anchor, positive, provenance)` triples.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String, Provenance)>> {
    let mut out = Vec::new();
    tsv::for_each_record(tsv::open(path)?, path, &["anchor", "positive", "provenance"], |line, f| {
        let prov = f[2].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        out.push((tsv::unescape(f[0]), tsv::unescape(f[1]), prov));
        Ok(())
    })?;
    Ok(out)
}

fn ta_spec() -> ViewSpec {
    ViewSpec::named("TA").expect("TA is a built-in view")
}

fn train_docs<'a>(corpus: &'a Corpus, split: &'a Split) -> impl Iterator<Item = &'a Document> {
    corpus.docs().iter().filter(|d| split.is_train(&d.doc_id))
}

fn make_pair(a: &Document, b: &Document, ta: &ViewSpec, provenance: Provenance) -> Option<Pair> {
    let anchor = ta.compose(a);
    let positive = ta.compose(b);
    (!anchor.is_empty() && !positive.is_empty()).then(|| Pair {
        anchor,
        positive,
        provenance,
        anchor_doc: a.doc_id.clone(),
        positive_doc: b.doc_id.clone(),
    })
}

/// Decodes the `t`-th pair `(i, j)`, `i < j`, of the lexicographic listing
/// of all pairs over `n` items.
fn nth_pair(n: usize, mut t: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if t < row {
            return (i, i + 1 + t);
        }
        t -= row;
    }
    unreachable!("pair index out of range")
}

/// Same-label pairs. Each `(dataset, label)` group contributes all
/// `C(n, 2)` pairs, or a seeded sample of `cap` of them; a document pair
/// sharing several labels is emitted once.
pub fn r1_pairs(corpus: &Corpus, split: &Split, opts: &RecipeOptions, seed: u64) -> Result<Vec<Pair>> {
    let ta = ta_spec();
    let mut groups: BTreeMap<(&str, &str), Vec<&Document>> = BTreeMap::new();
    for doc in train_docs(corpus, split) {
        if ta.compose(doc).is_empty() {
            continue;
        }
        for (dataset, labels) in &doc.labels {
            if !opts.r1_datasets.is_empty() && !opts.r1_datasets.contains(dataset) {
                continue;
            }
            for label in labels {
                groups.entry((dataset, label)).or_default().push(doc);
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::Data("R1 needs document labels in the train split".into()));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (g, members) in groups.values_mut().enumerate() {
        members.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let n = members.len();
        let total = n * n.saturating_sub(1) / 2;
        let picks: Vec<usize> = match opts.r1_cap {
            Some(cap) if total > cap => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(g as u64);
                let mut v = index::sample(&mut rng, total, cap).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..total).collect(),
        };
        for t in picks {
            let (i, j) = nth_pair(n, t);
            let (a, b) = (members[i], members[j]);
            if seen.insert((a.doc_id.clone(), b.doc_id.clone())) {
                out.extend(make_pair(a, b, &ta, Provenance::R1));
            }
        }
    }
    Ok(out)
}

/// One pair per family-level citation edge whose families are both in
/// train. Each family is represented by its first document with TA text.
pub fn r2_pairs(corpus: &Corpus, split: &Split) -> Result<Vec<Pair>> {
    if corpus.citations().is_empty() {
        return Err(Error::Data("R2 needs citation edges".into()));
    }
    let ta = ta_spec();
    let representative =
        |family: &str| corpus.family(family).find(|d| split.is_train(&d.doc_id) && !ta.compose(d).is_empty());
    let mut out = Vec::new();
    for edge in corpus.citations() {
        if edge.is_self_citation() {
            continue;
        }
        if let (Some(a), Some(b)) = (representative(&edge.citing_family), representative(&edge.cited_family)) {
            out.extend(make_pair(a, b, &ta, Provenance::R2));
        }
    }
    Ok(out)
}

/// Abstract paired with first claim, for every train document having both.
pub fn r3_pairs(corpus: &Corpus, split: &Split) -> Result<Vec<Pair>> {
    let out: Vec<Pair> = train_docs(corpus, split)
        .filter(|d| d.has_section(Section::Abstract) && d.has_section(Section::Claim1))
        .map(|d| Pair {
            anchor: d.section(Section::Abstract).to_string(),
            positive: d.section(Section::Claim1).to_string(),
            provenance: Provenance::R3,
            anchor_doc: d.doc_id.clone(),
            positive_doc: d.doc_id.clone(),
        })
        .collect();
    if out.is_empty() {
        return Err(Error::Data("R3 needs train documents with both abstract and claim1".into()));
    }
    Ok(out)
}

/// Resizes R3 to exactly `target` pairs. A larger target keeps every R3
/// pair once and fills the rest with draws with replacement; a smaller
/// target samples without replacement.
pub fn r3_matched(r3: &[Pair], target: usize, seed: u64) -> Result<Vec<Pair>> {
    if r3.is_empty() && target > 0 {
        return Err(Error::Data("R3M has no R3 pairs to resample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if target <= r3.len() {
        let mut picks = index::sample(&mut rng, r3.len(), target).into_vec();
        picks.sort_unstable();
        return Ok(picks.into_iter().map(|i| r3[i].clone()).collect());
    }
    let mut out = r3.to_vec();
    out.extend((r3.len()..target).map(|_| r3[rng.gen_range(0..r3.len())].clone()));
    Ok(out)
}

pub fn generate_pairs(
    corpus: &Corpus,
    split: &Split,
    recipe: Recipe,
    seed: u64,
    opts: &RecipeOptions,
) -> Result<PairSet> {
    let cap = opts.r1_cap.map_or("none".to_string(), |c| c.to_string());
    let (pairs, params) = match recipe {
        Recipe::R1 => (r1_pairs(corpus, split, opts, seed)?, format!("r1_cap={cap}")),
        Recipe::R2 => (r2_pairs(corpus, split)?, String::new()),
        Recipe::R3 => (r3_pairs(corpus, split)?, String::new()),
        Recipe::R4 => {
            let mut all = r1_pairs(corpus, split, opts, seed)?;
            all.extend(r2_pairs(corpus, split)?);
            all.extend(r3_pairs(corpus, split)?);
            (all, format!("r1_cap={cap}"))
        }
        Recipe::R3M => {
            let target = opts.target_count.ok_or_else(|| Error::Config("R3M requires a target count".into()))?;
            (r3_matched(&r3_pairs(corpus, split)?, target, seed)?, format!("target={target}"))
        }
    };
    Ok(PairSet { recipe, seed, params, pairs })
}
