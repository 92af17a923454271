//! Shortest Hamiltonian path over the street graph.
//!
//! Subset DP with free endpoints. The table is filled from the end of the
//! path: `cost[mask][j]` is the cheapest way to visit every video outside
//! `mask` starting at `j`, where `mask` already holds `j` and everything
//! visited before it. That is the usual "cheapest path over `mask` ending at
//! `j`" recurrence read backwards, and it lets the optimal route be rebuilt
//! front to back, taking the smallest video id whenever several choices
//! tie. O(2^n * n^2) time, O(2^n * n) memory.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::streets::Street;
use crate::error::{Error, Result};
use crate::mapmodel::TransitionEdge;
use crate::VideoId;

pub const MAX_ROUTE_VIDEOS: usize = 20;
const CANCEL_CHECK_MASK: usize = 0x3ff;

/// Cooperative cancellation flag for long-running planning.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub lens: String,
    pub order: Vec<VideoId>,
    /// `transitions[i]` leaves `order[i]` and enters `order[i + 1]`.
    pub transitions: Vec<TransitionEdge>,
    pub total_weight: f64,
}

impl Route {
    pub(crate) fn from_order(lens: &str, order: Vec<VideoId>, streets: &[&Street]) -> Self {
        let transitions: Vec<TransitionEdge> = order
            .windows(2)
            .zip(streets)
            .map(|(pair, street)| street.edge_from(&pair[0]))
            .collect();
        let total_weight = streets.iter().map(|s| s.weight).sum();
        Route {
            lens: lens.to_owned(),
            order,
            transitions,
            total_weight,
        }
    }
}

pub(crate) fn check_route_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewVideos(n));
    }
    if n > MAX_ROUTE_VIDEOS {
        return Err(Error::TooManyVideos(n));
    }
    Ok(())
}

/// Minimum-weight ordering of `weights` (symmetric, `n x n`). Returns the
/// vertex order and its DP cost. Among equal-cost orders the
/// lexicographically smallest vertex sequence wins.
pub fn shortest_hamiltonian_path(weights: &[Vec<f64>], cancel: &CancelToken) -> Result<(Vec<usize>, f64)> {
    let n = weights.len();
    check_route_size(n)?;
    let full = (1usize << n) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * n];
    for j in 0..n {
        cost[full * n + j] = 0.0;
    }
    for mask in (1..full).rev() {
        if mask & CANCEL_CHECK_MASK == 0 && cancel.is_cancelled() {
            return Err(Error::Cancelled);
        }
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for k in 0..n {
                if mask & (1 << k) == 0 {
                    let c = weights[j][k] + cost[(mask | 1 << k) * n + k];
                    if c < best {
                        best = c;
                    }
                }
            }
            cost[mask * n + j] = best;
        }
    }
    if cancel.is_cancelled() {
        return Err(Error::Cancelled);
    }

    let mut start = 0;
    for j in 1..n {
        if cost[(1 << j) * n + j] < cost[(1 << start) * n + start] {
            start = j;
        }
    }
    let total = cost[(1 << start) * n + start];
    let mut order = vec![start];
    let (mut mask, mut cur) = (1usize << start, start);
    while mask != full {
        let target = cost[mask * n + cur];
        let next = (0..n)
            .find(|&k| mask & (1 << k) == 0 && weights[cur][k] + cost[(mask | 1 << k) * n + k] == target)
            .expect("DP table is consistent");
        order.push(next);
        mask |= 1 << next;
        cur = next;
    }
    Ok((order, total))
}

/// Shortest route through every video in `video_ids`, free endpoints.
pub fn plan_route(streets: &[Street], video_ids: &[VideoId], cancel: &CancelToken) -> Result<Route> {
    check_route_size(video_ids.len())?;
    let mut ids: Vec<VideoId> = video_ids.to_vec();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateVideo(w[0].to_string()));
    }
    let n = ids.len();
    let mut street_of: Vec<Vec<Option<&Street>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = streets
                .iter()
                .find(|s| s.connects(&ids[i], &ids[j]))
                .ok_or_else(|| Error::MissingStreet(ids[i].to_string(), ids[j].to_string()))?;
            street_of[i][j] = Some(s);
            street_of[j][i] = Some(s);
        }
    }
    let weights: Vec<Vec<f64>> = street_of
        .iter()
        .map(|row| row.iter().map(|s| s.map_or(0.0, |s| s.weight)).collect())
        .collect();
    let (order, _) = shortest_hamiltonian_path(&weights, cancel)?;
    let used: Vec<&Street> = order
        .windows(2)
        .map(|w| street_of[w[0]][w[1]].unwrap())
        .collect();
    let lens = used.first().map(|s| s.lens.clone()).unwrap_or_default();
    Ok(Route::from_order(
        &lens,
        order.into_iter().map(|i| ids[i].clone()).collect(),
        &used,
    ))
}
