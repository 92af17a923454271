use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hamiltonian::Route;
use crate::error::{Error, Result};
use crate::project::MapProject;
use crate::VideoId;

pub const CUTLIST_VERSION: u32 = 1;
pub const DEFAULT_MIN_SEGMENT_S: f64 = 2.0;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub video_id: VideoId,
    pub source_path: String,
    pub entry_time_s: f64,
    pub exit_time_s: f64,
    pub direction: Direction,
    /// Sampled frame the route enters on, when this end is a transition.
    #[serde(skip)]
    pub entry_frame: Option<u32>,
    #[serde(skip)]
    pub exit_frame: Option<u32>,
}

impl Segment {
    /// Direction follows from the times: reverse iff `entry > exit`.
    pub fn new(video_id: impl Into<VideoId>, source_path: impl Into<String>, entry_time_s: f64, exit_time_s: f64) -> Self {
        Segment {
            video_id: video_id.into(),
            source_path: source_path.into(),
            entry_time_s,
            exit_time_s,
            direction: if entry_time_s > exit_time_s {
                Direction::Reverse
            } else {
                Direction::Forward
            },
            entry_frame: None,
            exit_frame: None,
        }
    }

    pub fn duration_s(&self) -> f64 {
        (self.exit_time_s - self.entry_time_s).abs()
    }

    /// `(start, end)` in source time, whatever the direction.
    pub fn span(&self) -> (f64, f64) {
        (
            self.entry_time_s.min(self.exit_time_s),
            self.entry_time_s.max(self.exit_time_s),
        )
    }

    fn pinned(mut self, entry_frame: Option<u32>, exit_frame: Option<u32>) -> Self {
        self.entry_frame = entry_frame;
        self.exit_frame = exit_frame;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutList {
    pub version: u32,
    pub lens: String,
    pub segments: Vec<Segment>,
}

impl CutList {
    pub fn total_duration_s(&self) -> f64 {
        self.segments.iter().map(Segment::duration_s).sum()
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        crate::canonical::to_vec_pretty(self).expect("cut lists are always serializable")
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| Error::InvalidArgument(format!("cut list: {e}")))?;
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != CUTLIST_VERSION as u64 {
            return Err(Error::UnsupportedVersion(version as u32));
        }
        serde_json::from_value(value).map_err(|e| Error::InvalidArgument(format!("cut list: {e}")))
    }

    /// Copy with relative source paths joined onto `root`.
    pub fn resolved_against(&self, root: &Path) -> CutList {
        let mut out = self.clone();
        for seg in &mut out.segments {
            if Path::new(&seg.source_path).is_relative() {
                seg.source_path = root.join(&seg.source_path).to_string_lossy().into_owned();
            }
        }
        out
    }
}

struct Pin {
    time_s: f64,
    frame: u32,
}

/// Segments for a video with at most one pinned end.
///
/// The default plays from the start of the video to the exit pin, or from
/// the entry pin to the end. When that falls short of `min_s` the clip runs
/// the other way from the pin instead, for `min_s` or as far as the video
/// allows, and the longer of the two is kept.
fn one_pinned(video: &VideoId, path: &str, duration: f64, entry: Option<&Pin>, exit: Option<&Pin>, min_s: f64) -> Segment {
    match (entry, exit) {
        (None, Some(out)) => {
            let default = Segment::new(video.clone(), path, 0.0, out.time_s);
            let alt = Segment::new(video.clone(), path, (out.time_s + min_s).min(duration), out.time_s);
            pick(default, alt, min_s).pinned(None, Some(out.frame))
        }
        (Some(inc), None) => {
            let default = Segment::new(video.clone(), path, inc.time_s, duration);
            let alt = Segment::new(video.clone(), path, inc.time_s, (inc.time_s - min_s).max(0.0));
            pick(default, alt, min_s).pinned(Some(inc.frame), None)
        }
        _ => Segment::new(video.clone(), path, 0.0, duration),
    }
}

fn pick(default: Segment, alt: Segment, min_s: f64) -> Segment {
    if default.duration_s() + EPS >= min_s || alt.duration_s() <= default.duration_s() {
        default
    } else {
        alt
    }
}

/// Segments for a video entered at `inc` and left at `out`.
///
/// Both times are fixed by the transitions. If the span between them is
/// shorter than `min_s`, the clip bounces: it overshoots one pin by half the
/// missing time and plays back, giving two segments of the same video. The
/// overshoot goes before the entry pin when the video has room there,
/// otherwise past the exit pin.
fn both_pinned(video: &VideoId, path: &str, duration: f64, inc: &Pin, out: &Pin, min_s: f64) -> Vec<Segment> {
    let direct = Segment::new(video.clone(), path, inc.time_s, out.time_s).pinned(Some(inc.frame), Some(out.frame));
    let span = direct.duration_s();
    if span + EPS >= min_s {
        return vec![direct];
    }
    let half = (min_s - span) / 2.0;
    let forward = inc.time_s <= out.time_s;
    let clamp = |t: f64| t.clamp(0.0, duration);
    // Turning points behind the entry pin and beyond the exit pin.
    let behind = clamp(if forward { inc.time_s - half } else { inc.time_s + half });
    let beyond = clamp(if forward { out.time_s + half } else { out.time_s - half });
    let bounce = |turn: f64| {
        vec![
            Segment::new(video.clone(), path, inc.time_s, turn).pinned(Some(inc.frame), None),
            Segment::new(video.clone(), path, turn, out.time_s).pinned(None, Some(out.frame)),
        ]
    };
    let total = |segs: &[Segment]| segs.iter().map(Segment::duration_s).sum::<f64>();
    let a = bounce(behind);
    let b = bounce(beyond);
    let (ta, tb) = (total(&a), total(&b));
    let chosen = if ta + EPS >= min_s || ta >= tb { a } else { b };
    let chosen: Vec<Segment> = chosen.into_iter().filter(|s| s.duration_s() > EPS).collect();
    if chosen.is_empty() {
        vec![direct]
    } else {
        chosen
    }
}

/// Turns a route into an ordered edit. Every transition frame is kept
/// exactly; only the free ends at the very start and end of the route, or
/// the bounce described on [`both_pinned`], add extra footage.
pub fn route_to_cutlist(route: &Route, project: &MapProject, min_segment_s: f64) -> Result<CutList> {
    if !(min_segment_s >= 0.0) {
        return Err(Error::InvalidArgument("min_segment_s must be non-negative".into()));
    }
    if route.order.is_empty() {
        return Err(Error::EmptyInput);
    }
    if route.transitions.len() + 1 != route.order.len() {
        return Err(Error::InvalidArgument("route has inconsistent transitions".into()));
    }
    let pin = |key: &crate::FrameKey| -> Result<Pin> {
        Ok(Pin {
            time_s: project.catalog.frame(key)?.time_s,
            frame: key.frame_index,
        })
    };
    let mut segments = Vec::new();
    for (i, video) in route.order.iter().enumerate() {
        let asset = project.catalog.asset(video)?;
        let entry = if i > 0 { Some(pin(&route.transitions[i - 1].to)?) } else { None };
        let exit = match route.transitions.get(i) {
            Some(t) => Some(pin(&t.from)?),
            None => None,
        };
        match (&entry, &exit) {
            (Some(inc), Some(out)) => segments.extend(both_pinned(
                video,
                &asset.path,
                asset.duration_s,
                inc,
                out,
                min_segment_s,
            )),
            _ => segments.push(one_pinned(
                video,
                &asset.path,
                asset.duration_s,
                entry.as_ref(),
                exit.as_ref(),
                min_segment_s,
            )),
        }
    }
    Ok(CutList {
        version: CUTLIST_VERSION,
        lens: route.lens.clone(),
        segments,
    })
}
