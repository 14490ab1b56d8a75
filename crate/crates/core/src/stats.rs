//! Paired bootstrap significance, percentile confidence intervals and
//! adjacency tiers.
//!
//! Resampling runs in fixed-size blocks; block `j` draws from stream `j` of
//! a ChaCha generator seeded with the caller's seed, so results do not depend
//! on the thread count.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tsv;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;
/// Size of the test family the Bonferroni footnote divides by.
pub const DEFAULT_FAMILY_SIZE: usize = 30;
const BLOCK: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Significance {
    P001,
    P01,
    P05,
    NotSignificant,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Significance::P001
        } else if p < 0.01 {
            Significance::P01
        } else if p < 0.05 {
            Significance::P05
        } else {
            Significance::NotSignificant
        }
    }

    pub fn marker(self) -> &'static str {
        match self {
            Significance::P001 => "***",
            Significance::P01 => "**",
            Significance::P05 => "*",
            Significance::NotSignificant => "n.s.",
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.marker())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub diff: f64,
    /// Fraction of resamples with `mean_a - mean_b <= 0`. When no resample
    /// qualifies this holds `1 / B` and `below_resolution` is set.
    pub p_value: f64,
    pub below_resolution: bool,
    pub resamples: usize,
    pub seed: u64,
    pub marker: Significance,
}

impl BootstrapResult {
    /// `p` at four decimals, or `< 1/B` when below resolution.
    pub fn p_display(&self) -> String {
        if self.below_resolution {
            format!("< {}", 1.0 / self.resamples as f64)
        } else {
            format!("{:.4}", self.p_value)
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Runs `resamples` draws of `n` indices with replacement and hands each
/// draw's index stream to `stat`; results come back in draw order.
fn resample<F>(n: usize, resamples: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&mut dyn FnMut() -> usize) -> f64 + Sync,
{
    let blocks = resamples.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut rng = block_rng(seed, j);
            let count = BLOCK.min(resamples - j * BLOCK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let mut draw = || rng.gen_range(0..n);
                out.push(stat(&mut draw));
            }
            out
        })
        .collect()
}

/// Paired bootstrap over per-query scores. `a` should be the system the
/// caller ranks higher; `p` estimates how often that order reverses or ties.
pub fn paired_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<BootstrapResult> {
    if a.len() != b.len() {
        return Err(Error::Pairing(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::Precondition(format!("bootstrap needs at least 2 paired scores, got {}", a.len())));
    }
    if resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite per-query score".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let sums = resample(n, resamples, seed, |draw| (0..n).map(|_| d[draw()]).sum());
    let hits = sums.iter().filter(|&&s| s <= 0.0).count();
    let below_resolution = hits == 0;
    let p_value = if below_resolution { 1.0 } else { hits as f64 } / resamples as f64;
    let (mean_a, mean_b) = (mean(a), mean(b));
    Ok(BootstrapResult {
        mean_a,
        mean_b,
        diff: mean_a - mean_b,
        p_value,
        below_resolution,
        resamples,
        seed,
        marker: Significance::from_p(p_value),
    })
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile interval of resampled means.
pub fn bootstrap_ci(scores: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    if scores.len() < 2 {
        return Err(Error::Precondition(format!("bootstrap needs at least 2 scores, got {}", scores.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level {level} outside (0, 1)")));
    }
    if resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    let n = scores.len();
    // offsets from the first score keep a constant vector's means exact
    let base = scores[0];
    let offsets: Vec<f64> = scores.iter().map(|s| s - base).collect();
    let mut means = resample(n, resamples, seed, |draw| base + (0..n).map(|_| offsets[draw()]).sum::<f64>() / n as f64);
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile(&means, tail), quantile(&means, 1.0 - tail)))
}

/// Splits an ordered list of names into tiers, starting a new tier wherever
/// the adjacent p-value (`p[i]` compares `names[i]` with `names[i + 1]`) is
/// below `alpha`.
///
/// Tiers are a presentation aid. Adjacent non-significance is not a
/// transitive equivalence relation, so a chain inside one tier does not make
/// its ends indistinguishable.
pub fn tiers_from_pvalues<S: Clone>(names: &[S], adjacent_p: &[f64], alpha: f64) -> Result<Vec<Vec<S>>> {
    if names.is_empty() {
        return Ok(Vec::new());
    }
    if adjacent_p.len() + 1 != names.len() {
        return Err(Error::Pairing(names.len().saturating_sub(1), adjacent_p.len()));
    }
    let mut tiers = vec![vec![names[0].clone()]];
    for (name, &p) in names[1..].iter().zip(adjacent_p) {
        if p < alpha {
            tiers.push(Vec::new());
        }
        tiers.last_mut().unwrap().push(name.clone());
    }
    Ok(tiers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub model_a: String,
    pub model_b: String,
    pub result: BootstrapResult,
}

/// Orders systems by mean descending (ties by name), runs the paired
/// bootstrap on each adjacent pair and groups the result into tiers.
pub fn tier_group(
    systems: &[(String, Vec<f64>)],
    alpha: f64,
    resamples: usize,
    seed: u64,
) -> Result<(Vec<Vec<String>>, Vec<SignificanceRow>)> {
    let rows = adjacent_tests(systems, resamples, seed)?;
    let mut names: Vec<String> = rows.iter().map(|r| r.model_a.clone()).collect();
    match rows.last() {
        Some(r) => names.push(r.model_b.clone()),
        None => names.extend(systems.first().map(|s| s.0.clone())),
    }
    let ps: Vec<f64> = rows.iter().map(|r| r.result.p_value).collect();
    Ok((tiers_from_pvalues(&names, &ps, alpha)?, rows))
}

/// Paired bootstrap between every adjacent pair after sorting by mean.
pub fn adjacent_tests(systems: &[(String, Vec<f64>)], resamples: usize, seed: u64) -> Result<Vec<SignificanceRow>> {
    let mut order: Vec<(&String, &Vec<f64>, f64)> =
        systems.iter().map(|(name, s)| (name, s, if s.is_empty() { f64::NEG_INFINITY } else { mean(s) })).collect();
    order.sort_by(|x, y| y.2.total_cmp(&x.2).then_with(|| x.0.cmp(y.0)));
    order
        .windows(2)
        .map(|w| {
            Ok(SignificanceRow {
                model_a: w[0].0.clone(),
                model_b: w[1].0.clone(),
                result: paired_bootstrap(w[0].1, w[1].1, resamples, seed)?,
            })
        })
        .collect()
}

/// Significance table: `model_a  model_b  mean_a  mean_b  diff  p  sig`,
/// followed by a `#` footnote with the Bonferroni threshold. Markers are not
/// corrected.
pub fn write_significance(rows: &[SignificanceRow], family_size: usize, path: &Path) -> Result<()> {
    tsv::write_file(path, |w| write_significance_to(rows, family_size, w))
}

pub fn write_significance_to(rows: &[SignificanceRow], family_size: usize, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "model_a\tmodel_b\tmean_a\tmean_b\tdiff\tp\tsig")?;
    for r in rows {
        let b = &r.result;
        writeln!(
            w,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}",
            tsv::escape(&r.model_a),
            tsv::escape(&r.model_b),
            b.mean_a,
            b.mean_b,
            b.diff,
            b.p_display(),
            b.marker
        )?;
    }
    let m = family_size.max(1);
    writeln!(w, "# uncorrected p-values; Bonferroni threshold 0.05/{m} = {:.4}", 0.05 / m as f64)
}
