//! Districts, landmarks, node details and transition paths.
//!
//! Everything here works on a lens's original vectors. Display coordinates
//! never feed a distance computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::project::MapProject;
use crate::vectors::{cosine_distance_normed, norm, LensMatrix};
use crate::{FrameKey, VideoId};

pub const PALETTE_SIZE: usize = 20;
pub const DEFAULT_PATHS_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistrictKind {
    PerVideo,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct District {
    pub id: String,
    pub members: Vec<FrameKey>,
    pub color_index: usize,
    pub kind: DistrictKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub district_id: String,
    pub anchor: FrameKey,
    pub thumbnail_ref: String,
}

/// A candidate cut between frames of two different videos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEdge {
    pub lens: String,
    pub from: FrameKey,
    pub to: FrameKey,
    pub distance: f64,
}

impl TransitionEdge {
    /// The same edge traversed the other way.
    pub fn reversed(&self) -> Self {
        TransitionEdge {
            lens: self.lens.clone(),
            from: self.to.clone(),
            to: self.from.clone(),
            distance: self.distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDetails {
    pub video_id: VideoId,
    pub frame_index: u32,
    pub thumbnail_ref: String,
    pub filename: String,
    pub time_s: f64,
    pub timecode: String,
}

/// `HH:MM:SS.mmm`, rounded to the millisecond.
pub fn format_timecode(time_s: f64) -> String {
    let total_ms = (time_s.max(0.0) * 1000.0).round() as u64;
    let (h, rem) = (total_ms / 3_600_000, total_ms % 3_600_000);
    let (m, rem) = (rem / 60_000, rem % 60_000);
    let (s, ms) = (rem / 1000, rem % 1000);
    format!("{h:02}:{m:02}:{s:02}.{ms:03}")
}

/// One district per video, colored by ingest order.
pub fn build_districts(project: &MapProject, lens: &str) -> Result<Vec<District>> {
    project.lens(lens)?;
    Ok(project
        .catalog
        .assets
        .iter()
        .enumerate()
        .map(|(pos, asset)| District {
            id: asset.id.to_string(),
            members: project.catalog.frames[&asset.id]
                .iter()
                .map(|f| f.key())
                .collect(),
            color_index: pos % PALETTE_SIZE,
            kind: DistrictKind::PerVideo,
        })
        .collect())
}

/// Member closest (cosine) to the mean of the members' vectors. Ties go to
/// the smallest `FrameKey`.
pub fn landmark_anchor(matrix: &LensMatrix, lens: &str, members: &[FrameKey]) -> Result<FrameKey> {
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rows = members
        .iter()
        .map(|k| {
            matrix.index_of(k).ok_or_else(|| Error::MissingVectors {
                lens: lens.to_owned(),
                video_id: k.video_id.to_string(),
                frame_index: k.frame_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dims = matrix.dims();
    let mut centroid = vec![0.0; dims];
    for &r in &rows {
        centroid
            .iter_mut()
            .zip(matrix.row_f64(r))
            .for_each(|(c, v)| *c += v);
    }
    centroid.iter_mut().for_each(|c| *c /= rows.len() as f64);
    let centroid_norm = norm(&centroid);

    let mut best: Option<(f64, usize)> = None;
    for &r in &rows {
        let d = if centroid_norm == 0.0 || matrix.norm(r) == 0.0 {
            f64::INFINITY
        } else {
            cosine_distance_normed(matrix.row_f64(r), &centroid, matrix.norm(r), centroid_norm)
        };
        let better = match best {
            None => true,
            Some((bd, br)) => d < bd || (d == bd && matrix.key(r) < matrix.key(br)),
        };
        if better {
            best = Some((d, r));
        }
    }
    Ok(matrix.key(best.expect("members nonempty").1).clone())
}

pub fn compute_landmark(project: &MapProject, district: &District, lens: &str) -> Result<Landmark> {
    let matrix = &project.lens(lens)?.vectors;
    let anchor = landmark_anchor(matrix, lens, &district.members)?;
    Ok(Landmark {
        district_id: district.id.clone(),
        thumbnail_ref: project.catalog.frame(&anchor)?.thumbnail_ref.clone(),
        anchor,
    })
}

/// The `k` nearest frames (cosine) to `query` among frames for which
/// `eligible` holds, ascending by distance then `FrameKey`. Zero-norm rows
/// never qualify.
pub fn nearest_where(
    matrix: &LensMatrix,
    query: &[f64],
    k: usize,
    mut eligible: impl FnMut(&FrameKey) -> bool,
) -> Vec<(usize, f64)> {
    let query_norm = norm(query);
    if k == 0 || query_norm == 0.0 {
        return Vec::new();
    }
    let mut scored: Vec<(usize, f64)> = (0..matrix.len())
        .filter(|&i| matrix.norm(i) > 0.0 && eligible(matrix.key(i)))
        .map(|i| {
            (
                i,
                cosine_distance_normed(matrix.row_f64(i), query, matrix.norm(i), query_norm),
            )
        })
        .collect();
    // Row order is FrameKey order, so the index is the tie-break.
    let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored
}

/// Transition paths from `query` to its `k` nearest frames in other videos.
pub fn nearest_paths(project: &MapProject, lens: &str, query: &FrameKey, k: usize) -> Result<Vec<TransitionEdge>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let matrix = &project.lens(lens)?.vectors;
    project.catalog.frame(query)?;
    let qi = matrix.index_of(query).ok_or_else(|| Error::MissingVectors {
        lens: lens.to_owned(),
        video_id: query.video_id.to_string(),
        frame_index: query.frame_index,
    })?;
    let hits = nearest_where(matrix, matrix.row_f64(qi), k, |key| key.video_id != query.video_id);
    Ok(hits
        .into_iter()
        .map(|(i, distance)| TransitionEdge {
            lens: lens.to_owned(),
            from: query.clone(),
            to: matrix.key(i).clone(),
            distance,
        })
        .collect())
}

pub fn node_details(project: &MapProject, key: &FrameKey) -> Result<NodeDetails> {
    let record = project.catalog.frame(key)?;
    let asset = project.catalog.asset(&key.video_id)?;
    Ok(NodeDetails {
        video_id: key.video_id.clone(),
        frame_index: key.frame_index,
        thumbnail_ref: record.thumbnail_ref.clone(),
        filename: asset.filename().to_owned(),
        time_s: record.time_s,
        timecode: format_timecode(record.time_s),
    })
}
