use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{FrameKey, VideoId};

pub const DEFAULT_SPACING_FRACTION: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint2D {
    pub video_id: VideoId,
    pub frame_index: u32,
    /// t-SNE output.
    pub raw_xy: [f64; 2],
    /// Position on the displayed map.
    pub display_xy: [f64; 2],
}

impl MapPoint2D {
    pub fn new(key: FrameKey, raw_xy: [f64; 2]) -> Self {
        MapPoint2D {
            video_id: key.video_id,
            frame_index: key.frame_index,
            raw_xy,
            display_xy: raw_xy,
        }
    }

    pub fn key(&self) -> FrameKey {
        FrameKey::new(self.video_id.clone(), self.frame_index)
    }
}

/// Horizontal extent of the raw layout. Falls back to the vertical extent,
/// then to 1, so rows never collapse onto a single point.
fn raw_width(points: &[MapPoint2D]) -> f64 {
    let extent = |axis: usize| {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.raw_xy[axis]), hi.max(p.raw_xy[axis]))
        });
        hi - lo
    };
    [extent(0), extent(1)]
        .into_iter()
        .find(|w| *w > 0.0)
        .unwrap_or(1.0)
}

/// Lays each video's frames out as a horizontal row through its raw
/// centroid, one `spacing_fraction * map width` apart, earliest frame on
/// the left. `raw_xy` is left untouched.
pub fn rearrange_by_video(points: &[MapPoint2D], spacing_fraction: f64) -> Result<Vec<MapPoint2D>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(spacing_fraction > 0.0 && spacing_fraction.is_finite()) {
        return Err(Error::InvalidArgument("spacing fraction must be positive".into()));
    }
    rearrange_with_spacing(points, spacing_fraction * raw_width(points))
}

/// Same as [`rearrange_by_video`] with an absolute inter-frame spacing.
pub fn rearrange_with_spacing(points: &[MapPoint2D], spacing: f64) -> Result<Vec<MapPoint2D>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_video: BTreeMap<&VideoId, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        by_video.entry(&p.video_id).or_default().push(i);
    }
    let mut out = points.to_vec();
    for members in by_video.values_mut() {
        members.sort_by_key(|&i| points[i].frame_index);
        let m = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            (sx + points[i].raw_xy[0], sy + points[i].raw_xy[1])
        });
        let (cx, cy) = (sx / m, sy / m);
        for (rank, &i) in members.iter().enumerate() {
            out[i].display_xy = [cx + (rank as f64 - (m - 1.0) / 2.0) * spacing, cy];
        }
    }
    Ok(out)
}
