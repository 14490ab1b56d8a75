//! L2-regularized logistic regression, one-vs-rest, fitted by full-batch
//! L-BFGS with a backtracking Armijo line search.
//!
//! Objective per class: `mean_i log(1 + exp(-s_i z_i)) + ||w||^2 / (2 C n)`
//! with `s_i` in {-1, +1} and an unregularized bias.

use rayon::prelude::*;

use super::{aligned_rows, macro_f1, rows_f64, LabelMatrix};
use crate::dense::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-6, max_iter: 1000, memory: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the objective gradient at the returned parameters.
    pub grad_max_norm: f64,
    /// Objective value after each accepted step, starting at the initial point.
    pub loss_trace: Vec<f64>,
}

impl BinaryFit {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub classes: Vec<String>,
    pub c: f64,
    pub fits: Vec<BinaryFit>,
    pub seed: u64,
    /// `(C, validation macro-F1)` for every grid point, ascending C.
    pub validation: Vec<(f64, f64)>,
}

impl ProbeModel {
    pub fn dim(&self) -> usize {
        self.fits.first().map_or(0, |f| f.weights.len())
    }

    pub fn converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }

    pub fn max_grad_norm(&self) -> f64 {
        self.fits.iter().map(|f| f.grad_max_norm).fold(0.0, f64::max)
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.fits.iter().map(|f| sigmoid(f.decision(x))).collect()
    }

    /// Positive for every class whose probability is at least 0.5.
    pub fn predict(&self, x: &EmbeddingMatrix, dataset: &str) -> Result<LabelMatrix> {
        if x.dim() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), found: x.dim() });
        }
        let sets = rows_f64(x)
            .par_iter()
            .map(|row| (0..self.fits.len()).filter(|&k| self.fits[k].decision(row) >= 0.0).collect())
            .collect();
        LabelMatrix::predictions(dataset, x.ids().to_vec(), self.classes.clone(), sets)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    sign: Vec<f64>,
    lambda: f64,
}

impl Problem<'_> {
    /// Parameters are `[w..., b]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = theta.len() - 1;
        let n = self.x.len() as f64;
        grad.fill(0.0);
        let mut loss = 0.0;
        for (row, &s) in self.x.iter().zip(&self.sign) {
            let z = dot(&theta[..d], row) + theta[d];
            loss += softplus(-s * z);
            let coef = -s * sigmoid(-s * z) / n;
            for (g, &v) in grad[..d].iter_mut().zip(row) {
                *g += coef * v;
            }
            grad[d] += coef;
        }
        let mut reg = 0.0;
        for (g, &w) in grad[..d].iter_mut().zip(&theta[..d]) {
            *g += self.lambda * w;
            reg += w * w;
        }
        loss / n + 0.5 * self.lambda * reg
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fits one binary classifier. `labels[i]` marks row `i` positive.
pub fn fit_binary(x: &[Vec<f64>], labels: &[bool], c: f64, opts: &FitOptions) -> Result<BinaryFit> {
    if x.is_empty() {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if x.len() != labels.len() {
        return Err(Error::Pairing(x.len(), labels.len()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("regularization strength C must be positive, got {c}")));
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Shape { expected: d, found: r.len() });
    }
    let problem = Problem {
        x,
        sign: labels.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect(),
        lambda: 1.0 / (c * x.len() as f64),
    };

    let p = d + 1;
    let mut theta = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut loss = problem.eval(&theta, &mut grad);
    let mut trace = vec![loss];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    let mut trial = vec![0.0; p];
    let mut trial_grad = vec![0.0; p];

    while max_norm(&grad) >= opts.grad_tol && iterations < opts.max_iter {
        let mut dir = two_loop(&grad, &s_hist, &y_hist);
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 || !slope.is_finite() {
            s_hist.clear();
            y_hist.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }
        let mut step = if s_hist.is_empty() { 1.0 / max_norm(&grad).max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..p {
                trial[i] = theta[i] + step * dir[i];
            }
            let f = problem.eval(&trial, &mut trial_grad);
            if f <= loss + 1e-4 * step * slope {
                accepted = Some(f);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            if s_hist.is_empty() {
                break;
            }
            s_hist.clear();
            y_hist.clear();
            continue;
        };
        let s: Vec<f64> = (0..p).map(|i| trial[i] - theta[i]).collect();
        let y: Vec<f64> = (0..p).map(|i| trial_grad[i] - grad[i]).collect();
        if dot(&s, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        loss = f_new;
        trace.push(loss);
        iterations += 1;
    }

    let grad_max_norm = max_norm(&grad);
    let bias = theta.pop().unwrap_or(0.0);
    Ok(BinaryFit {
        weights: theta,
        bias,
        iterations,
        converged: grad_max_norm < opts.grad_tol,
        grad_max_norm,
        loss_trace: trace,
    })
}

fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = vec![0.0; s_hist.len()];
    for j in (0..s_hist.len()).rev() {
        let rho = 1.0 / dot(&y_hist[j], &s_hist[j]);
        alphas[j] = rho * dot(&s_hist[j], &q);
        for (qi, yi) in q.iter_mut().zip(&y_hist[j]) {
            *qi -= alphas[j] * yi;
        }
    }
    if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for j in 0..s_hist.len() {
        let rho = 1.0 / dot(&y_hist[j], &s_hist[j]);
        let beta = rho * dot(&y_hist[j], &q);
        for (qi, si) in q.iter_mut().zip(&s_hist[j]) {
            *qi += (alphas[j] - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn fit_all(x: &[Vec<f64>], y: &LabelMatrix, c: f64, opts: &FitOptions) -> Result<Vec<BinaryFit>> {
    (0..y.n_classes())
        .into_par_iter()
        .map(|k| {
            let labels: Vec<bool> = (0..y.len()).map(|i| y.has(i, k)).collect();
            fit_binary(x, &labels, c, opts)
        })
        .collect()
}

/// Fits one-vs-rest models for every C in the grid, keeps the C with the
/// best validation macro-F1 (ties go to the smaller C).
pub fn train_linear_probe(
    x_train: &EmbeddingMatrix,
    y_train: &LabelMatrix,
    x_val: &EmbeddingMatrix,
    y_val: &LabelMatrix,
    c_grid: &[f64],
    seed: u64,
) -> Result<ProbeModel> {
    train_linear_probe_with(x_train, y_train, x_val, y_val, c_grid, seed, &FitOptions::default())
}

pub fn train_linear_probe_with(
    x_train: &EmbeddingMatrix,
    y_train: &LabelMatrix,
    x_val: &EmbeddingMatrix,
    y_val: &LabelMatrix,
    c_grid: &[f64],
    seed: u64,
    opts: &FitOptions,
) -> Result<ProbeModel> {
    let train = aligned_rows(x_train, y_train)?;
    aligned_rows(x_val, y_val)?;
    if x_train.dim() != x_val.dim() {
        return Err(Error::Shape { expected: x_train.dim(), found: x_val.dim() });
    }
    if y_train.n_classes() < 2 {
        return Err(Error::Data(format!("dataset `{}` needs at least two classes", y_train.dataset)));
    }
    if y_train.classes() != y_val.classes() {
        return Err(Error::Data("train and validation class lists differ".into()));
    }
    if let Some(k) = (0..y_train.n_classes()).find(|&k| y_train.positives(k) == 0) {
        return Err(Error::DegenerateClass(y_train.classes()[k].clone()));
    }
    let mut grid: Vec<f64> = c_grid.to_vec();
    if grid.is_empty() {
        return Err(Error::Config("empty C grid".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut best: Option<(f64, f64, Vec<BinaryFit>)> = None;
    let mut validation = Vec::with_capacity(grid.len());
    for &c in &grid {
        let fits = fit_all(&train, y_train, c, opts)?;
        let model = ProbeModel { classes: y_train.classes().to_vec(), c, fits, seed, validation: Vec::new() };
        let f1 = macro_f1(y_val, &model.predict(x_val, &y_val.dataset)?)?;
        validation.push((c, f1));
        if best.as_ref().is_none_or(|(_, b, _)| f1 > *b) {
            best = Some((c, f1, model.fits));
        }
    }
    let (c, _, fits) = best.expect("non-empty grid");
    Ok(ProbeModel { classes: y_train.classes().to_vec(), c, fits, seed, validation })
}

/// Macro-F1 of the model's thresholded predictions.
pub fn eval_probe(model: &ProbeModel, x_test: &EmbeddingMatrix, y_test: &LabelMatrix) -> Result<f64> {
    aligned_rows(x_test, y_test)?;
    let predicted = model.predict(x_test, &y_test.dataset)?;
    macro_f1(y_test, &predicted)
}
