//! Line-oriented `key = value` run configuration.
//!
//! `#` starts a comment line. `include = other.conf` splices in another file
//! (relative to the including file); later assignments override earlier
//! ones. `embedding.<system> = path` lines build the embedding map.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::ViewSpec;
use crate::error::{Error, Result};
use crate::fusion::DEFAULT_POOL_DEPTH;
use crate::probes::{DEFAULT_C_GRID, KNN_KS};
use crate::recipes::DEFAULT_R1_CAP;
use crate::stats::{DEFAULT_RESAMPLES, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub citations: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub views: Vec<String>,
    pub query_sections: Vec<String>,
    pub embeddings: BTreeMap<String, PathBuf>,
    pub k: usize,
    pub depth: usize,
    pub pool_depth: usize,
    pub alphas: Vec<f64>,
    pub rrf_ks: Vec<usize>,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub bootstrap_b: usize,
    pub alpha: f64,
    pub seed: u64,
    pub split_ratios: Vec<f64>,
    pub r1_cap: usize,
    pub c_grid: Vec<f64>,
    pub knn_ks: Vec<usize>,
    /// 0 lets the thread pool decide.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            labels: None,
            citations: None,
            out_dir: PathBuf::from("patrank-out"),
            views: ViewSpec::CORPUS_VIEWS.iter().map(|s| s.to_string()).collect(),
            query_sections: ViewSpec::QUERY_SECTIONS.iter().map(|s| s.to_string()).collect(),
            embeddings: BTreeMap::new(),
            k: 10,
            depth: 1000,
            pool_depth: DEFAULT_POOL_DEPTH,
            alphas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            rrf_ks: vec![10, 60, 100],
            bm25_k1: 1.5,
            bm25_b: 0.75,
            bootstrap_b: DEFAULT_RESAMPLES,
            alpha: 0.05,
            seed: DEFAULT_SEED,
            split_ratios: vec![0.8, 0.1, 0.1],
            r1_cap: DEFAULT_R1_CAP,
            c_grid: DEFAULT_C_GRID.to_vec(),
            knn_ks: KNN_KS.to_vec(),
            threads: 0,
        }
    }
}

fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad list element `{s}`")))
        .collect()
}

fn one<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("bad value `{value}`"))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or(String::new(), |p| p.display().to_string())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_file(path, &mut HashSet::new())?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path, stack: &mut HashSet<PathBuf>) -> Result<()> {
        let canonical = path.canonicalize().map_err(|e| Error::io(path, e))?;
        if !stack.insert(canonical.clone()) {
            return Err(Error::Config(format!("include cycle at {}", path.display())));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "include" {
                self.apply_file(&base.join(value), stack)?;
                continue;
            }
            let value = if is_path_key(key) && !value.is_empty() {
                base.join(value).display().to_string()
            } else {
                value.to_string()
            };
            self.set(key, &value).map_err(|m| Error::parse(path, i + 1, m))?;
        }
        stack.remove(&canonical);
        Ok(())
    }

    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "corpus" => self.corpus = path(),
            "labels" => self.labels = path(),
            "citations" => self.citations = path(),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "views" => self.views = list(value)?,
            "query_sections" => self.query_sections = list(value)?,
            "k" => self.k = one(value)?,
            "depth" => self.depth = one(value)?,
            "pool_depth" => self.pool_depth = one(value)?,
            "fusion.alphas" => self.alphas = list(value)?,
            "fusion.rrf_k" => self.rrf_ks = list(value)?,
            "bm25.k1" => self.bm25_k1 = one(value)?,
            "bm25.b" => self.bm25_b = one(value)?,
            "bootstrap.B" => self.bootstrap_b = one(value)?,
            "bootstrap.alpha" => self.alpha = one(value)?,
            "seed" => self.seed = one(value)?,
            "split.ratios" => self.split_ratios = list(value)?,
            "recipes.r1_cap" => self.r1_cap = one(value)?,
            "probe.c_grid" => self.c_grid = list(value)?,
            "knn.k" => self.knn_ks = list(value)?,
            "threads" => self.threads = one(value)?,
            _ => match key.strip_prefix("embedding.") {
                Some(system) if !system.is_empty() => {
                    self.embeddings.insert(system.to_string(), PathBuf::from(value));
                }
                _ => return Err(format!("unknown key `{key}`")),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.depth < self.k {
            return Err(Error::Config(format!("depth {} is below k {}", self.depth, self.k)));
        }
        if self.bootstrap_b < 100 {
            return Err(Error::Config(format!("bootstrap.B must be at least 100, got {}", self.bootstrap_b)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("bootstrap.alpha {} outside (0, 1)", self.alpha)));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Config(format!("fusion alpha {a} outside [0, 1]")));
        }
        if self.rrf_ks.contains(&0) {
            return Err(Error::Config("fusion.rrf_k entries must be at least 1".into()));
        }
        if self.split_ratios.len() != 3 {
            return Err(Error::Config("split.ratios needs three values".into()));
        }
        for v in self.views.iter().chain(&self.query_sections) {
            ViewSpec::named(v)?;
        }
        let paths = [&self.corpus, &self.labels, &self.citations];
        for p in paths.into_iter().flatten().chain(self.embeddings.values()) {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("corpus", opt_path(&self.corpus));
        kv("labels", opt_path(&self.labels));
        kv("citations", opt_path(&self.citations));
        kv("out_dir", self.out_dir.display().to_string());
        kv("views", self.views.join(","));
        kv("query_sections", self.query_sections.join(","));
        kv("k", self.k.to_string());
        kv("depth", self.depth.to_string());
        kv("pool_depth", self.pool_depth.to_string());
        kv("fusion.alphas", join(&self.alphas));
        kv("fusion.rrf_k", join(&self.rrf_ks));
        kv("bm25.k1", self.bm25_k1.to_string());
        kv("bm25.b", self.bm25_b.to_string());
        kv("bootstrap.B", self.bootstrap_b.to_string());
        kv("bootstrap.alpha", self.alpha.to_string());
        kv("seed", self.seed.to_string());
        kv("split.ratios", join(&self.split_ratios));
        kv("recipes.r1_cap", self.r1_cap.to_string());
        kv("probe.c_grid", join(&self.c_grid));
        kv("knn.k", join(&self.knn_ks));
        kv("threads", self.threads.to_string());
        for (system, path) in &self.embeddings {
            kv(&format!("embedding.{system}"), path.display().to_string());
        }
        out
    }
}

fn is_path_key(key: &str) -> bool {
    matches!(key, "corpus" | "labels" | "citations" | "out_dir") || key.starts_with("embedding.")
}
