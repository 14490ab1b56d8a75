//! Query-section by corpus-view grid: every cell is a dense retrieval run
//! scored on the same qrels.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use crate::dense::{retrieve_dense, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::metrics::{EvalContext, Metric, MetricReport, Slice};
use crate::report::{fmt4, Table};

/// Where a system's embeddings live: one file per query section and one
/// per corpus view.
#[derive(Debug, Clone, Default)]
pub struct GridInputs {
    pub queries: BTreeMap<String, PathBuf>,
    pub docs: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone)]
pub struct AblationGrid {
    pub system: String,
    pub sections: Vec<String>,
    pub views: Vec<String>,
    pub cells: BTreeMap<(String, String), MetricReport>,
}

impl AblationGrid {
    pub fn cell(&self, section: &str, view: &str) -> Option<&MetricReport> {
        self.cells.get(&(section.to_string(), view.to_string()))
    }

    /// Highest ALL-slice cell in grid order (first wins ties).
    pub fn best_cell(&self, metric: Metric) -> Option<(&str, &str, f64)> {
        let mut best: Option<(&str, &str, f64)> = None;
        for s in &self.sections {
            for v in &self.views {
                let Some(value) = self.cell(s, v).and_then(|r| r.mean(Slice::All, metric)) else {
                    continue;
                };
                if best.is_none_or(|b| value > b.2) {
                    best = Some((s, v, value));
                }
            }
        }
        best
    }

    /// Sections as rows, views as columns.
    pub fn table(&self, metric: Metric) -> Table {
        let mut header = vec!["query".to_string()];
        header.extend(self.views.iter().cloned());
        let rows = self
            .sections
            .iter()
            .map(|s| {
                let mut row = vec![s.clone()];
                row.extend(self.views.iter().map(|v| fmt4(self.cell(s, v).and_then(|r| r.mean(Slice::All, metric)))));
                row
            })
            .collect();
        Table { header, rows }
    }
}

/// Runs every `(section, view)` cell. A cell whose embeddings are missing
/// or unreadable fails the whole grid with a config error naming it.
pub fn run_ablation_grid<S: AsRef<str> + Sync>(
    system: &str,
    sections: &[&str],
    views: &[&str],
    inputs: &GridInputs,
    query_ids: &[S],
    depth: usize,
    ctx: &EvalContext<'_>,
) -> Result<AblationGrid> {
    if sections.is_empty() || views.is_empty() {
        return Err(Error::Config("ablation grid needs at least one section and one view".into()));
    }
    let mut query_mats: HashMap<&str, EmbeddingMatrix> = HashMap::new();
    let mut doc_mats: HashMap<&str, EmbeddingMatrix> = HashMap::new();
    for &s in sections {
        for &v in views {
            let cell_err = |e: Error| Error::Config(format!("ablation cell ({s}, {v}): {e}"));
            load_once(&mut query_mats, &inputs.queries, s, "query section").map_err(cell_err)?;
            load_once(&mut doc_mats, &inputs.docs, v, "corpus view").map_err(cell_err)?;
        }
    }
    let mut cells = BTreeMap::new();
    for &s in sections {
        for &v in views {
            let run = retrieve_dense(system, &query_mats[s], &doc_mats[v], query_ids, depth, true)
                .map_err(|e| Error::Config(format!("ablation cell ({s}, {v}): {e}")))?
                .with_view(format!("{s}->{v}"));
            cells.insert((s.to_string(), v.to_string()), ctx.evaluate(&run));
        }
    }
    Ok(AblationGrid {
        system: system.to_string(),
        sections: sections.iter().map(|s| s.to_string()).collect(),
        views: views.iter().map(|s| s.to_string()).collect(),
        cells,
    })
}

fn load_once<'a>(
    loaded: &mut HashMap<&'a str, EmbeddingMatrix>,
    files: &BTreeMap<String, PathBuf>,
    name: &'a str,
    what: &str,
) -> Result<()> {
    if loaded.contains_key(name) {
        return Ok(());
    }
    let path = files.get(name).ok_or_else(|| Error::Config(format!("no embedding file for {what} `{name}`")))?;
    loaded.insert(name, EmbeddingMatrix::load(path)?.normalized());
    Ok(())
}
