//! Text prompts against frame embeddings.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lens::LensRegistry;
use crate::project::MapProject;
use crate::vectors::{dot, norm, widen};
use crate::{FrameKey, VideoId};

pub const DEFAULT_SEARCH_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptResult {
    pub prompt: String,
    pub lens: String,
    /// Best cosine similarity of any frame of each video.
    pub per_video_scores: BTreeMap<VideoId, f64>,
    /// Top videos, best first.
    pub highlighted: Vec<VideoId>,
    pub best_frame: BTreeMap<VideoId, FrameKey>,
}

/// Per-video maximum similarity to `query` and the frame that attains it
/// (earliest frame on ties). Zero vectors score 0.
pub fn video_scores(project: &MapProject, lens: &str, query: &[f32]) -> Result<BTreeMap<VideoId, (f64, FrameKey)>> {
    let matrix = &project.lens(lens)?.vectors;
    if query.len() != matrix.dims() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dims(),
            got: query.len(),
        });
    }
    let query = widen(query);
    let query_norm = norm(&query);
    let mut scores: BTreeMap<VideoId, (f64, FrameKey)> = BTreeMap::new();
    for (i, key) in matrix.keys().iter().enumerate() {
        let denom = matrix.norm(i) * query_norm;
        let sim = if denom > 0.0 {
            dot(matrix.row_f64(i), &query) / denom
        } else {
            0.0
        };
        match scores.get_mut(&key.video_id) {
            Some(best) if sim > best.0 => *best = (sim, key.clone()),
            Some(_) => {}
            None => {
                scores.insert(key.video_id.clone(), (sim, key.clone()));
            }
        }
    }
    Ok(scores)
}

/// Video ids by descending score, ties by id.
fn ranked<'a>(scores: impl Iterator<Item = (&'a VideoId, f64)>) -> Vec<VideoId> {
    let mut order: Vec<(&VideoId, f64)> = scores.collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    order.into_iter().map(|(id, _)| id.clone()).collect()
}

/// Scores an already embedded prompt.
pub fn search_vector(project: &MapProject, lens: &str, prompt: &str, query: &[f32], k: usize) -> Result<PromptResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let scores = video_scores(project, lens, query)?;
    let mut highlighted = ranked(scores.iter().map(|(id, (s, _))| (id, *s)));
    highlighted.truncate(k);
    Ok(PromptResult {
        prompt: prompt.to_owned(),
        lens: lens.to_owned(),
        per_video_scores: scores.iter().map(|(id, (s, _))| (id.clone(), *s)).collect(),
        highlighted,
        best_frame: scores.into_iter().map(|(id, (_, key))| (id, key)).collect(),
    })
}

pub fn prompt_search(
    project: &MapProject,
    registry: &LensRegistry,
    lens: &str,
    prompt: &str,
    k: usize,
) -> Result<PromptResult> {
    project.lens(lens)?;
    let query = registry.embed_text(lens, prompt)?;
    search_vector(project, lens, prompt.trim(), &query, k)
}

/// One video per sentence, in sentence order. Each sentence takes the best
/// scoring video that no earlier sentence has claimed.
pub fn match_story(project: &MapProject, registry: &LensRegistry, lens: &str, sentences: &[String]) -> Result<Vec<VideoId>> {
    project.lens(lens)?;
    let id = registry.lens(lens)?;
    if !id.supports_text {
        return Err(Error::TextNotSupported(lens.to_owned()));
    }
    if sentences.len() < 2 {
        return Err(Error::InvalidArgument("a story needs at least two sentences".into()));
    }
    let videos = project.catalog.assets.len();
    if sentences.len() > videos {
        return Err(Error::MoreSentencesThanVideos {
            sentences: sentences.len(),
            videos,
        });
    }
    let queries = sentences
        .iter()
        .map(|s| registry.embed_text(lens, s))
        .collect::<Result<Vec<_>>>()?;
    assign_greedy(project, lens, &queries)
}

/// Greedy sentence-to-video assignment over embedded sentences.
pub fn assign_greedy(project: &MapProject, lens: &str, queries: &[Vec<f32>]) -> Result<Vec<VideoId>> {
    let mut taken = HashSet::new();
    let mut out = Vec::with_capacity(queries.len());
    for query in queries {
        let scores = video_scores(project, lens, query)?;
        let pick = ranked(scores.iter().map(|(id, (s, _))| (id, *s)))
            .into_iter()
            .find(|id| !taken.contains(id))
            .ok_or(Error::MoreSentencesThanVideos {
                sentences: queries.len(),
                videos: scores.len(),
            })?;
        taken.insert(pick.clone());
        out.push(pick);
    }
    Ok(out)
}
