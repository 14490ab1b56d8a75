use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Corpus;
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Validation, Partition::Test];

    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Partition::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown partition `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.8, validation: 0.1, test: 0.1 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = Self { train, validation, test };
        let parts = r.as_array();
        if parts.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::Config(format!("split ratios must be positive, got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios must sum to 1, got {parts:?}")));
        }
        Ok(r)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

/// A family-disjoint train/validation/test assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub assignment: BTreeMap<String, Partition>,
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl Split {
    pub fn partition_of(&self, doc_id: &str) -> Option<Partition> {
        self.assignment.get(doc_id).copied()
    }

    pub fn is_train(&self, doc_id: &str) -> bool {
        self.partition_of(doc_id) == Some(Partition::Train)
    }

    pub fn docs_in(&self, partition: Partition) -> impl Iterator<Item = &str> {
        self.assignment.iter().filter(move |(_, p)| **p == partition).map(|(d, _)| d.as_str())
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for p in self.assignment.values() {
            counts[p.index()] += 1;
        }
        counts
    }

    /// Realized document fractions per partition.
    pub fn fractions(&self) -> [f64; 3] {
        let n = self.assignment.len().max(1) as f64;
        self.counts().map(|c| c as f64 / n)
    }

    /// `doc-id  partition` TSV, sorted by doc id.
    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, |w| {
            writeln!(w, "doc-id\tpartition")?;
            for (doc, p) in &self.assignment {
                writeln!(w, "{doc}\t{p}")?;
            }
            Ok(())
        })
    }

    /// Reads a split file. Ratios are recomputed from the realized counts
    /// and the seed is unknown (0).
    pub fn load(path: &Path) -> Result<Split> {
        let mut assignment = BTreeMap::new();
        tsv::for_each_record(tsv::open(path)?, path, &["doc-id", "partition"], |line, f| {
            let p: Partition = f[1].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            if assignment.insert(f[0].to_string(), p).is_some() {
                return Err(Error::parse(path, line, format!("document `{}` assigned twice", f[0])));
            }
            Ok(())
        })?;
        let mut split = Split { assignment, ratios: SplitRatios::default(), seed: 0 };
        let [a, b, c] = split.fractions();
        split.ratios = SplitRatios { train: a, validation: b, test: c };
        Ok(split)
    }
}

/// Shuffles families with a seeded RNG, then hands each family whole to the
/// partition furthest below its document-count target (ties go to the
/// earlier partition).
pub fn family_disjoint_split(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<Split> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("cannot split an empty corpus".into()));
    }
    let ratios = SplitRatios::new(ratios.train, ratios.validation, ratios.test)?;
    let mut families: Vec<(&String, &Vec<usize>)> = corpus.families().iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    families.shuffle(&mut rng);

    let n = corpus.len() as f64;
    let targets = ratios.as_array().map(|r| r * n);
    let mut filled = [0usize; 3];
    let mut assignment = BTreeMap::new();
    for (_, members) in families {
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (i, target) in targets.iter().enumerate() {
            let deficit = target - filled[i] as f64;
            if deficit > best_deficit {
                best = i;
                best_deficit = deficit;
            }
        }
        filled[best] += members.len();
        let partition = Partition::ALL[best];
        for &doc in members {
            assignment.insert(corpus.docs()[doc].doc_id.clone(), partition);
        }
    }
    Ok(Split { assignment, ratios, seed })
}
