use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapmodel::TransitionEdge;
use crate::project::MapProject;
use crate::vectors::LensMatrix;
use crate::VideoId;

/// Best transition between two videos. Undirected: one street per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Street {
    pub lens: String,
    pub video_a: VideoId,
    pub video_b: VideoId,
    /// Runs from a frame of `video_a` to a frame of `video_b`.
    pub best_edge: TransitionEdge,
    pub weight: f64,
}

impl Street {
    pub fn connects(&self, a: &VideoId, b: &VideoId) -> bool {
        (&self.video_a == a && &self.video_b == b) || (&self.video_a == b && &self.video_b == a)
    }

    /// `best_edge` oriented to leave `from`.
    pub fn edge_from(&self, from: &VideoId) -> TransitionEdge {
        if &self.video_a == from {
            self.best_edge.clone()
        } else {
            self.best_edge.reversed()
        }
    }
}

pub(crate) fn check_video_list(project: &MapProject, ids: &[VideoId]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        project.catalog.asset(id)?;
        if !seen.insert(id) {
            return Err(Error::DuplicateVideo(id.to_string()));
        }
    }
    Ok(())
}

/// Matrix rows of `video`'s frames with `frame_index % stride == 0`.
fn strided_rows(project: &MapProject, matrix: &LensMatrix, lens: &str, video: &VideoId, stride: usize) -> Result<Vec<usize>> {
    project
        .catalog
        .frames_of(video)?
        .iter()
        .filter(|f| f.frame_index as usize % stride == 0)
        .map(|f| {
            matrix.index_of(&f.key()).ok_or_else(|| Error::MissingVectors {
                lens: lens.to_owned(),
                video_id: video.to_string(),
                frame_index: f.frame_index,
            })
        })
        .collect()
}

/// Exhaustive minimum over all (strided) frame pairs of two videos.
/// Pairs are scanned in `(frame_a, frame_b)` order and only a strictly
/// smaller distance replaces the incumbent, so ties keep the
/// lexicographically smallest pair.
pub fn best_pair(matrix: &LensMatrix, rows_a: &[usize], rows_b: &[usize]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for &ra in rows_a {
        let (va, na) = (matrix.row_f64(ra), matrix.norm(ra));
        if na == 0.0 {
            continue;
        }
        for &rb in rows_b {
            let nb = matrix.norm(rb);
            if nb == 0.0 {
                continue;
            }
            let d = crate::vectors::cosine_distance_normed(va, matrix.row_f64(rb), na, nb);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((ra, rb, d));
            }
        }
    }
    best
}

pub(crate) fn street_between(
    project: &MapProject,
    lens: &str,
    a: &VideoId,
    b: &VideoId,
    stride: usize,
) -> Result<Street> {
    let matrix = &project.lens(lens)?.vectors;
    let rows_a = strided_rows(project, matrix, lens, a, stride)?;
    let rows_b = strided_rows(project, matrix, lens, b, stride)?;
    let (ra, rb, d) = best_pair(matrix, &rows_a, &rows_b)
        .ok_or_else(|| Error::MissingStreet(a.to_string(), b.to_string()))?;
    Ok(Street {
        lens: lens.to_owned(),
        video_a: a.clone(),
        video_b: b.clone(),
        best_edge: TransitionEdge {
            lens: lens.to_owned(),
            from: matrix.key(ra).clone(),
            to: matrix.key(rb).clone(),
            distance: d,
        },
        weight: d,
    })
}

/// One street for every unordered pair of `video_ids`, in
/// `(i, j), i < j` order of the input list.
pub fn build_streets(project: &MapProject, lens: &str, video_ids: &[VideoId], stride: usize) -> Result<Vec<Street>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    project.lens(lens)?;
    check_video_list(project, video_ids)?;
    if video_ids.len() < 2 {
        return Err(Error::TooFewVideos(video_ids.len()));
    }
    let pairs: Vec<(usize, usize)> = (0..video_ids.len())
        .flat_map(|i| (i + 1..video_ids.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| street_between(project, lens, &video_ids[i], &video_ids[j], stride))
        .collect()
}
