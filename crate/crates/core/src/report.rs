//! Leaderboard tables rendered as TSV or aligned plain text.
//!
//! The wide table has one row per system: `model`, one column per view
//! (ALL slice), `Mean` over the views present, then `IN`, `OUT` and `Gap`
//! taken from the first view column. Numbers use four decimals; absent
//! cells render as `-`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport, Slice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Text,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Tsv => "tsv",
            ReportFormat::Text => "txt",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "text" | "txt" => Ok(ReportFormat::Text),
            _ => Err(Error::Config(format!("unknown report format `{s}`"))),
        }
    }
}

/// A rectangular table of strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn render(&self, format: ReportFormat) -> String {
        let mut out = String::new();
        match format {
            ReportFormat::Tsv => {
                for row in std::iter::once(&self.header).chain(&self.rows) {
                    out.push_str(&row.join("\t"));
                    out.push('\n');
                }
            }
            ReportFormat::Text => {
                let widths: Vec<usize> = (0..self.header.len())
                    .map(|c| {
                        std::iter::once(&self.header).chain(&self.rows).map(|r| r[c].chars().count()).max().unwrap_or(0)
                    })
                    .collect();
                let line = |out: &mut String, row: &[String]| {
                    let cells: Vec<String> = row
                        .iter()
                        .zip(&widths)
                        .enumerate()
                        .map(|(i, (cell, w))| if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                        .collect();
                    let _ = writeln!(out, "{}", cells.join("  ").trim_end());
                };
                line(&mut out, &self.header);
                let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
                let _ = writeln!(out, "{}", "-".repeat(total));
                for row in &self.rows {
                    line(&mut out, row);
                }
            }
        }
        out
    }
}

pub fn fmt4(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Systems by view for one metric. Systems and views keep first-seen order.
pub fn leaderboard(reports: &[MetricReport], metric: Metric) -> Result<Table> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no reports to tabulate".into()));
    }
    let systems = first_seen(reports.iter().map(|r| r.system.as_str()));
    let views = first_seen(reports.iter().map(|r| r.view.as_str()));
    let find = |s: &str, v: &str| reports.iter().find(|r| r.system == s && r.view == v);

    let mut header = vec!["model".to_string()];
    header.extend(views.iter().map(|v| if v.is_empty() { "-".to_string() } else { v.to_string() }));
    header.extend(["Mean", "IN", "OUT", "Gap"].map(String::from));

    let mut rows = Vec::new();
    for &s in &systems {
        let mut row = vec![s.to_string()];
        let mut present = Vec::new();
        for &v in &views {
            let m = find(s, v).and_then(|r| r.mean(Slice::All, metric));
            present.extend(m);
            row.push(fmt4(m));
        }
        let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        row.push(fmt4(mean));
        let reference = views.iter().find_map(|v| find(s, v));
        let inn = reference.and_then(|r| r.mean(Slice::In, metric));
        let out = reference.and_then(|r| r.mean(Slice::Out, metric));
        let gap = reference.and_then(|r| r.gap(metric));
        if let (Some(i), Some(o), Some(g)) = (inn, out, gap) {
            if (i - o - g).abs() > 1e-12 {
                return Err(Error::Integrity(format!("{s}: gap {g} differs from IN - OUT = {}", i - o)));
            }
        }
        row.extend([fmt4(inn), fmt4(out), fmt4(gap)]);
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// One row per (system, view, slice) with query counts and every metric.
pub fn slice_table(reports: &[MetricReport]) -> Result<Table> {
    let k = reports.first().ok_or_else(|| Error::EmptyInput("no reports to tabulate".into()))?.k;
    let mut header: Vec<String> = ["model", "view", "slice", "n"].map(String::from).to_vec();
    header.extend(Metric::ALL.iter().map(|m| m.label(k)));
    let mut rows = Vec::new();
    for r in reports {
        for (slice, res) in &r.slices {
            let mut row = vec![r.system.clone(), r.view.clone(), slice.to_string(), res.n_queries().to_string()];
            row.extend(Metric::ALL.iter().map(|&m| fmt4(res.mean(m))));
            rows.push(row);
        }
    }
    Ok(Table { header, rows })
}

/// Writes `<stem>.<ext>` into `dir` for each format.
pub fn emit_report(table: &Table, dir: &Path, stem: &str, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(format!("{stem}.{}", f.extension()));
            std::fs::write(&path, table.render(f)).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
