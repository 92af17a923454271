use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable identifier of an ingested video, unique within one project.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VideoId(pub String);

impl VideoId {
    pub fn new(id: impl Into<String>) -> Self {
        VideoId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VideoId {
    fn from(s: &str) -> Self {
        VideoId(s.to_owned())
    }
}

/// One sampled frame: `(video_id, frame_index)`.
///
/// Ordering is by video id, then frame index. Vector matrices, sidecars and
/// every tie-break in the engine use this order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameKey {
    pub video_id: VideoId,
    pub frame_index: u32,
}

impl FrameKey {
    pub fn new(video_id: impl Into<VideoId>, frame_index: u32) -> Self {
        FrameKey {
            video_id: video_id.into(),
            frame_index,
        }
    }
}

impl From<String> for VideoId {
    fn from(s: String) -> Self {
        VideoId(s)
    }
}

impl fmt::Display for FrameKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.video_id, self.frame_index)
    }
}
