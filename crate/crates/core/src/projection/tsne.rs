//! Exact t-SNE.
//!
//! Input affinities come from squared Euclidean distances between
//! L2-normalized rows, so neighborhoods agree with the cosine distances used
//! everywhere else on the map. The optimizer is the usual one: early
//! exaggeration, momentum switch and per-coordinate adaptive gains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PERPLEXITY_TOL: f64 = 1e-5;
const PERPLEXITY_STEPS: usize = 200;
const P_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;
const INIT_SIGMA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TsneInit {
    Gaussian,
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
    pub init: TsneInit,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 7,
            init: TsneInit::Gaussian,
        }
    }
}

impl TsneConfig {
    pub fn with_seed(seed: u64) -> Self {
        TsneConfig {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations < 250 {
            return Err(Error::InvalidArgument("t-SNE needs at least 250 iterations".into()));
        }
        if !(self.perplexity > 0.0 && self.learning_rate > 0.0 && self.early_exaggeration >= 1.0) {
            return Err(Error::InvalidArgument("t-SNE parameters must be positive".into()));
        }
        Ok(())
    }

    /// Perplexity after clamping to `(n - 1) / 3`.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n as f64 - 1.0) / 3.0)
    }
}

/// Everything produced by one optimization run.
#[derive(Debug, Clone)]
pub struct TsneRun {
    /// Final 2D coordinates.
    pub points: Vec<[f64; 2]>,
    /// Joint input affinities, `n * n`, row-major.
    pub affinities: Vec<f64>,
    /// Coordinates before the first gradient step.
    pub initial: Vec<[f64; 2]>,
}

fn l2_normalized(rows: &[f64], dims: usize) -> Vec<f64> {
    let mut out = rows.to_vec();
    for row in out.chunks_exact_mut(dims) {
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    out
}

fn squared_distances(rows: &[f64], n: usize, dims: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let a = &rows[i * dims..(i + 1) * dims];
        for (j, slot) in out.iter_mut().enumerate() {
            if i != j {
                let b = &rows[j * dims..(j + 1) * dims];
                *slot = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            }
        }
    });
    d
}

/// Conditional distribution of row `i` with precision `beta`; returns its
/// entropy (nats).
fn conditional_row(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    // Shifting by the nearest distance keeps the largest term at 1, so the
    // sum never underflows however sharp the kernel gets.
    let nearest = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold(f64::INFINITY, |m, (_, &d)| m.min(d));
    let mut sum = 0.0;
    for (j, (o, d)) in out.iter_mut().zip(dist).enumerate() {
        *o = if j == i { 0.0 } else { (-(d - nearest) * beta).exp() };
        sum += *o;
    }
    let mut weighted = 0.0;
    for (j, (o, d)) in out.iter_mut().zip(dist).enumerate() {
        if j != i {
            weighted += (d - nearest) * *o;
        }
        *o /= sum;
    }
    sum.ln() + beta * weighted / sum
}

/// Symmetrized joint affinities `P` for `n` rows of width `dims`.
pub fn joint_probabilities(rows: &[f64], n: usize, dims: usize, perplexity: f64) -> Vec<f64> {
    let normalized = l2_normalized(rows, dims);
    let dist = squared_distances(&normalized, n, dims);
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    cond.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let row = &dist[i * n..(i + 1) * n];
        let (mut beta, mut lo, mut hi) = (1.0f64, f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..PERPLEXITY_STEPS {
            let h = conditional_row(row, i, beta, out);
            let diff = h - target;
            if diff.abs() < PERPLEXITY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
            }
        }
        conditional_row(row, i, beta, out);
    });
    let denom = 2.0 * n as f64;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / denom).max(P_FLOOR);
            }
        }
    }
    p
}

#[inline]
fn kernel(y: &[[f64; 2]], i: usize, j: usize) -> f64 {
    let dx = y[i][0] - y[j][0];
    let dy = y[i][1] - y[j][1];
    1.0 / (1.0 + dx * dx + dy * dy)
}

fn kernel_sum(y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += kernel(y, i, j);
        }
    }
    2.0 * sum
}

/// `KL(P || Q)` for the layout `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let z = kernel_sum(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pij = p[i * n + j];
                let qij = (kernel(y, i, j) / z).max(P_FLOOR);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Gradient of the objective for affinities `p` scaled by `exaggeration`:
/// `4 * sum_j (e*p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)`.
fn gradient_into(p: &[f64], y: &[[f64; 2]], exaggeration: f64, grad: &mut [[f64; 2]]) {
    let n = y.len();
    let z = kernel_sum(y);
    for (i, g) in grad.iter_mut().enumerate() {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let k = kernel(y, i, j);
            let m = (exaggeration * p[i * n + j] - k / z) * k;
            gx += m * (y[i][0] - y[j][0]);
            gy += m * (y[i][1] - y[j][1]);
        }
        *g = [4.0 * gx, 4.0 * gy];
    }
}

/// Analytic gradient of `KL(P || Q)` with respect to the 2D coordinates.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut grad = vec![[0.0; 2]; y.len()];
    gradient_into(p, y, 1.0, &mut grad);
    grad
}

fn gaussian_init(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_SIGMA).expect("valid sigma");
    (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect()
}

/// First two principal components, scaled so the first has standard
/// deviation `INIT_SIGMA`.
fn pca_init(rows: &[f64], n: usize, dims: usize, seed: u64) -> Vec<[f64; 2]> {
    let normalized = l2_normalized(rows, dims);
    let mut mean = vec![0.0; dims];
    for row in normalized.chunks_exact(dims) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / n as f64);
    }
    let centered: Vec<f64> = normalized
        .chunks_exact(dims)
        .flat_map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect::<Vec<_>>())
        .collect();
    let project = |v: &[f64]| -> Vec<f64> {
        centered
            .chunks_exact(dims)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };
    let mut components: Vec<Vec<f64>> = Vec::new();
    let fallback = gaussian_init(n, seed);
    for c in 0..2 {
        let mut v: Vec<f64> = (0..dims).map(|d| 1.0 + ((d * 31 + c * 17) % 7) as f64).collect();
        for _ in 0..100 {
            // w = X^T X v, deflated against earlier components.
            let xv = project(&v);
            let mut w = vec![0.0; dims];
            for (row, s) in centered.chunks_exact(dims).zip(&xv) {
                w.iter_mut().zip(row).for_each(|(wi, r)| *wi += r * s);
            }
            for prev in &components {
                let d: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(prev).for_each(|(wi, p)| *wi -= d * p);
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return fallback;
            }
            v = w.into_iter().map(|x| x / norm).collect();
        }
        components.push(v);
    }
    let xs = project(&components[0]);
    let ys = project(&components[1]);
    let sd = (xs.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if sd == 0.0 {
        return fallback;
    }
    let scale = INIT_SIGMA / sd;
    xs.iter().zip(&ys).map(|(x, y)| [x * scale, y * scale]).collect()
}

fn check_input(rows: &[f64], n: usize, dims: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if dims == 0 || rows.len() != n * dims {
        return Err(Error::DimensionMismatch {
            expected: n * dims,
            got: rows.len(),
        });
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Runs t-SNE on `n` rows of width `dims` and keeps the affinities and the
/// starting layout alongside the result.
pub fn tsne_run(rows: &[f64], n: usize, dims: usize, config: &TsneConfig) -> Result<TsneRun> {
    check_input(rows, n, dims)?;
    config.validate()?;
    if n == 1 {
        return Ok(TsneRun {
            points: vec![[0.0, 0.0]],
            affinities: vec![0.0],
            initial: vec![[0.0, 0.0]],
        });
    }
    let init = match config.init {
        TsneInit::Gaussian => gaussian_init(n, config.seed),
        TsneInit::Pca => pca_init(rows, n, dims, config.seed),
    };
    if n == 2 {
        return Ok(TsneRun {
            points: init.clone(),
            affinities: vec![0.0, 0.5, 0.5, 0.0],
            initial: init,
        });
    }
    let perplexity = config.effective_perplexity(n);
    if perplexity < 2.0 {
        return Err(Error::PerplexityInfeasible {
            n,
            perplexity: config.perplexity,
        });
    }
    let p = joint_probabilities(rows, n, dims, perplexity);

    let mut y = init.clone();
    let mut grad = vec![[0.0; 2]; n];
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iterations {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch {
            config.initial_momentum
        } else {
            config.final_momentum
        };
        gradient_into(&p, &y, exaggeration, &mut grad);
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (update[i][d] > 0.0);
                gains[i][d] = if same_sign {
                    (gains[i][d] * 0.8).max(MIN_GAIN)
                } else {
                    gains[i][d] + 0.2
                };
                update[i][d] = momentum * update[i][d] - config.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += update[i][d];
            }
        }
        let (mx, my) = y
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        y.iter_mut().for_each(|p| {
            p[0] -= mx;
            p[1] -= my;
        });
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(TsneRun {
        points: y,
        affinities: p,
        initial: init,
    })
}

/// 2D coordinates for each input row.
pub fn tsne_project(rows: &[f64], n: usize, dims: usize, config: &TsneConfig) -> Result<Vec<[f64; 2]>> {
    Ok(tsne_run(rows, n, dims, config)?.points)
}
