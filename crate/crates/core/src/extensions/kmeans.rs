//! Seeded k-means with k-means++ seeding and the elbow rule for picking k.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const MAX_ELBOW_K: usize = 10;
pub const RUNS_PER_K: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
    /// WCSS after every Lloyd iteration.
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            // Every remaining point coincides with a centroid.
            (0..n).find(|i| !chosen.contains(i)).expect("n >= k")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn update_centroids(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dims = points[0].len();
    let mut sums = vec![vec![0.0; dims]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        sums[c].iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    for (s, &count) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= count as f64);
    }
    sums
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(points: &[Vec<f64>], assignments: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    let mut counts = vec![0usize; k];
    for &c in assignments.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let victim = (0..points.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .map(|i| (i, sq_dist(&points[i], &centroids[assignments[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .expect("n >= k leaves a cluster with two members")
            .0;
        counts[assignments[victim]] -= 1;
        assignments[victim] = empty;
        counts[empty] = 1;
    }
}

fn wcss_of(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

/// Lloyd's algorithm from k-means++ seeds until the assignment stops
/// changing or [`MAX_LLOYD_ITERATIONS`] is reached.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    let n = points.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints { n, k });
    }
    let dims = points[0].len();
    if points.iter().any(|p| p.len() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            got: points.iter().map(Vec::len).find(|&l| l != dims).unwrap(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(points, &mut next, &centroids, k);
        let converged = next == assignments;
        assignments = next;
        centroids = update_centroids(points, &assignments, k);
        trace.push(wcss_of(points, &assignments, &centroids));
        if converged {
            break;
        }
    }
    Ok(KMeans {
        wcss: *trace.last().unwrap(),
        assignments,
        centroids,
        trace,
    })
}

/// Largest k worth trying for `n` points.
pub fn elbow_k_max(n: usize) -> usize {
    MAX_ELBOW_K.min(n / 10 + 1)
}

/// Best of [`RUNS_PER_K`] seeded runs for every k in `1..=k_max`, run in
/// parallel over k.
pub fn best_runs(points: &[Vec<f64>], k_max: usize, seed: u64) -> Result<Vec<KMeans>> {
    (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut best: Option<KMeans> = None;
            for run in 0..RUNS_PER_K {
                let r = kmeans(points, k, seed.wrapping_add(run).wrapping_add(1000 * k as u64))?;
                if best.as_ref().is_none_or(|b| r.wcss < b.wcss) {
                    best = Some(r);
                }
            }
            Ok(best.unwrap())
        })
        .collect()
}

/// Elbow of a WCSS curve given for k = 1, 2, ...: the k whose point lies
/// farthest from the chord through the first and last points. Ties, and
/// curves with no bend at all, resolve to the smallest k.
pub fn elbow_k(curve: &[f64]) -> Result<usize> {
    let m = curve.len();
    if m == 0 {
        return Err(Error::CurveTooShort);
    }
    if m == 1 {
        return Ok(1);
    }
    let (x1, y1) = (1.0, curve[0]);
    let (x2, y2) = (m as f64, curve[m - 1]);
    let (dx, dy) = (x2 - x1, y2 - y1);
    let len = (dx * dx + dy * dy).sqrt();
    let tol = 1e-12 * curve.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut best = (1, 0.0);
    for (i, &y) in curve.iter().enumerate() {
        let x = (i + 1) as f64;
        let d = (dy * (x - x1) - dx * (y - y1)).abs() / len;
        if d > best.1 + tol {
            best = (i + 1, d);
        }
    }
    Ok(best.0)
}
