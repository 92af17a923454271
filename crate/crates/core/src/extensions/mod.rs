//! Summaries from semantic districts, photo highlights and story edits.

mod kmeans;

pub use kmeans::{best_runs, elbow_k, elbow_k_max, kmeans, KMeans, MAX_ELBOW_K, MAX_LLOYD_ITERATIONS, RUNS_PER_K};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lens::LensRegistry;
use crate::mapmodel::{self, nearest_where, District, DistrictKind, Landmark, PALETTE_SIZE};
use crate::project::MapProject;
use crate::routing::{chain_in_order, route_to_cutlist, CutList, Route, Segment, CUTLIST_VERSION};
use crate::vectors::widen;
use crate::{FrameKey, VideoId};

pub const SUMMARY_CLIP_S: f64 = 3.0;
pub const HIGHLIGHT_CLIP_S: f64 = 5.0;
/// Nearest frame plus the next nine.
pub const HIGHLIGHT_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticDistrictSet {
    pub video_id: VideoId,
    pub lens: String,
    pub k: usize,
    pub districts: Vec<District>,
    /// `landmarks[i]` belongs to `districts[i]`.
    pub landmarks: Vec<Landmark>,
    /// WCSS for k = 1..=k_max.
    pub wcss_curve: Vec<f64>,
}

/// Clusters one video's frames in embedding space, picking k by the elbow
/// of the WCSS curve.
pub fn semantic_districts(project: &MapProject, lens: &str, video: &VideoId, seed: u64) -> Result<SemanticDistrictSet> {
    let matrix = &project.lens(lens)?.vectors;
    let frames = project.catalog.frames_of(video)?;
    let keys: Vec<FrameKey> = frames.iter().map(|f| f.key()).collect();
    let points = keys
        .iter()
        .map(|k| {
            matrix
                .index_of(k)
                .map(|i| matrix.row_f64(i).to_vec())
                .ok_or_else(|| Error::MissingVectors {
                    lens: lens.to_owned(),
                    video_id: video.to_string(),
                    frame_index: k.frame_index,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let runs = best_runs(&points, elbow_k_max(points.len()), seed)?;
    let wcss_curve: Vec<f64> = runs.iter().map(|r| r.wcss).collect();
    let k = elbow_k(&wcss_curve)?;
    let chosen = &runs[k - 1];

    // Number clusters by their first frame so ids do not depend on labels.
    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    for &c in &chosen.assignments {
        if relabel[c] == usize::MAX {
            relabel[c] = next;
            next += 1;
        }
    }
    let mut members = vec![Vec::new(); k];
    for (key, &c) in keys.iter().zip(&chosen.assignments) {
        members[relabel[c]].push(key.clone());
    }
    let districts: Vec<District> = members
        .into_iter()
        .enumerate()
        .map(|(j, members)| District {
            id: format!("{video}/semantic-{j}"),
            members,
            color_index: j % PALETTE_SIZE,
            kind: DistrictKind::Semantic,
        })
        .collect();
    let landmarks = districts
        .iter()
        .map(|d| mapmodel::compute_landmark(project, d, lens))
        .collect::<Result<Vec<_>>>()?;
    Ok(SemanticDistrictSet {
        video_id: video.clone(),
        lens: lens.to_owned(),
        k,
        districts,
        landmarks,
        wcss_curve,
    })
}

/// A `length` window centered on `center`, shifted to fit in
/// `[0, duration]`. Videos shorter than the window play whole.
pub fn clip_window(center: f64, length: f64, duration: f64) -> (f64, f64) {
    if duration <= length {
        return (0.0, duration);
    }
    let start = (center - length / 2.0).clamp(0.0, duration - length);
    (start, start + length)
}

/// A 3 s forward clip around each selected landmark, in the given order.
pub fn summarize(project: &MapProject, set: &SemanticDistrictSet, landmark_order: &[usize]) -> Result<CutList> {
    if landmark_order.is_empty() {
        return Err(Error::EmptySelection);
    }
    let asset = project.catalog.asset(&set.video_id)?;
    let segments = landmark_order
        .iter()
        .map(|&i| {
            let landmark = set.landmarks.get(i).ok_or(Error::LandmarkNotFound(i))?;
            let t = project.catalog.frame(&landmark.anchor)?.time_s;
            let (start, end) = clip_window(t, SUMMARY_CLIP_S, asset.duration_s);
            Ok(Segment::new(asset.id.clone(), asset.path.clone(), start, end))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CutList {
        version: CUTLIST_VERSION,
        lens: set.lens.clone(),
        segments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomLandmark {
    pub vector: Vec<f32>,
    /// Empty when no thumbnail was stored.
    pub thumbnail_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub video_id: VideoId,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub frame: FrameKey,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightResult {
    pub lens: String,
    pub custom_landmark: CustomLandmark,
    pub nearest_frame: FrameKey,
    pub distance: f64,
    pub clip: Clip,
    /// The frames after the nearest one, closest first.
    pub neighbors: Vec<Neighbor>,
}

/// Highlight for an already embedded photo. Every frame of every video is
/// a candidate.
pub fn highlight_for_vector(project: &MapProject, lens: &str, vector: Vec<f32>, thumbnail_ref: String) -> Result<HighlightResult> {
    let matrix = &project.lens(lens)?.vectors;
    if vector.len() != matrix.dims() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dims(),
            got: vector.len(),
        });
    }
    let hits = nearest_where(matrix, &widen(&vector), HIGHLIGHT_NEIGHBORS, |_| true);
    let (first, distance) = *hits.first().ok_or(Error::EmptyInput)?;
    let nearest = matrix.key(first).clone();
    let asset = project.catalog.asset(&nearest.video_id)?;
    let t = project.catalog.frame(&nearest)?.time_s;
    let (start_s, end_s) = clip_window(t, HIGHLIGHT_CLIP_S, asset.duration_s);
    Ok(HighlightResult {
        lens: lens.to_owned(),
        custom_landmark: CustomLandmark { vector, thumbnail_ref },
        clip: Clip {
            video_id: nearest.video_id.clone(),
            start_s,
            end_s,
        },
        nearest_frame: nearest,
        distance,
        neighbors: hits[1..]
            .iter()
            .map(|&(i, distance)| Neighbor {
                frame: matrix.key(i).clone(),
                distance,
            })
            .collect(),
    })
}

/// Embeds `photo` under `lens` and finds its highlight. The photo's
/// thumbnail is stored with the project's other thumbnails.
pub fn find_highlight(project: &MapProject, registry: &LensRegistry, lens: &str, photo: &RgbImage) -> Result<HighlightResult> {
    project.lens(lens)?;
    if photo.width() == 0 || photo.height() == 0 {
        return Err(Error::UndecodableImage("empty image".into()));
    }
    let vector = registry.embed_image(lens, photo)?;
    let thumb = crate::ingest::store_thumbnail(project.root(), photo)?;
    highlight_for_vector(project, lens, vector, thumb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryEdit {
    pub order: Vec<VideoId>,
    pub route: Route,
    pub cutlist: CutList,
}

/// Sentence-matched videos chained in story order.
pub fn story_edit(project: &MapProject, registry: &LensRegistry, lens: &str, sentences: &[String]) -> Result<StoryEdit> {
    let order = crate::search::match_story(project, registry, lens, sentences)?;
    let route = chain_in_order(project, lens, &order, project.config.street_stride)?;
    let cutlist = route_to_cutlist(&route, project, project.config.min_segment_s)?;
    Ok(StoryEdit { order, route, cutlist })
}
