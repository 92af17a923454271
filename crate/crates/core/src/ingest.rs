//! Frame sampling, thumbnails and the asset catalog.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{imageops, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::media::MediaTool;
use crate::{FrameKey, VideoId};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1.0;
pub const THUMBNAIL_LONG_EDGE: u32 = 256;
const THUMBNAIL_QUALITY: u8 = 85;
pub const THUMBS_DIR: &str = "thumbs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAsset {
    pub id: VideoId,
    /// Source location, relative to the project directory when possible.
    pub path: String,
    pub duration_s: f64,
    pub fps: f64,
    /// Number of sampled frames.
    pub frame_count: u32,
    pub width: u32,
    pub height: u32,
}

impl VideoAsset {
    pub fn filename(&self) -> &str {
        Path::new(&self.path)
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or(&self.path)
    }

    /// Absolute (or cwd-relative) location of the source file.
    pub fn resolve_path(&self, project_dir: &Path) -> PathBuf {
        let p = Path::new(&self.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            project_dir.join(p)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub video_id: VideoId,
    pub frame_index: u32,
    pub time_s: f64,
    /// Thumbnail path relative to the project directory.
    pub thumbnail_ref: String,
}

impl FrameRecord {
    pub fn key(&self) -> FrameKey {
        FrameKey::new(self.video_id.clone(), self.frame_index)
    }
}

/// Timestamps of the sampled frames: `i / rate` for
/// `i < max(1, floor(duration * rate))`. The trailing partial interval
/// contributes no frame, but every video yields at least one.
pub fn sample_times(duration_s: f64, rate_hz: f64) -> Vec<f64> {
    let count = ((duration_s * rate_hz + 1e-9).floor() as u64).max(1);
    (0..count).map(|i| i as f64 / rate_hz).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Native,
    /// Exact output size; both axes are scaled independently.
    Size(u32, u32),
}

/// Scales both axes to `(w, h)`.
pub fn resize_exact(image: &RgbImage, w: u32, h: u32) -> RgbImage {
    if image.dimensions() == (w, h) {
        return image.clone();
    }
    imageops::resize(image, w, h, imageops::FilterType::Triangle)
}

fn thumbnail_bytes(frame: &RgbImage) -> Result<Vec<u8>> {
    let (w, h) = frame.dimensions();
    let scale = THUMBNAIL_LONG_EDGE as f64 / w.max(h) as f64;
    let thumb = if scale < 1.0 {
        let tw = ((w as f64 * scale).round() as u32).max(1);
        let th = ((h as f64 * scale).round() as u32).max(1);
        resize_exact(frame, tw, th)
    } else {
        frame.clone()
    };
    let mut buf = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut buf, THUMBNAIL_QUALITY)
        .encode_image(&thumb)
        .map_err(|e| Error::MediaTool(format!("thumbnail encoding failed: {e}")))?;
    Ok(buf)
}

/// Writes the thumbnail under its content hash and returns its reference.
pub(crate) fn store_thumbnail(project_dir: &Path, frame: &RgbImage) -> Result<String> {
    let bytes = thumbnail_bytes(frame)?;
    let name = format!("{}.jpg", hex::encode(Sha256::digest(&bytes)));
    let rel = format!("{THUMBS_DIR}/{name}");
    let path = project_dir.join(THUMBS_DIR).join(&name);
    if !path.exists() {
        let dir = project_dir.join(THUMBS_DIR);
        fs::create_dir_all(&dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        std::io::Write::write_all(&mut tmp, &bytes)?;
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
    }
    Ok(rel)
}

/// A decoded video that has not been registered yet.
#[derive(Debug, Clone)]
pub struct PreparedVideo {
    canonical: PathBuf,
    stored_path: String,
    duration_s: f64,
    fps: f64,
    width: u32,
    height: u32,
    /// `(time_s, thumbnail_ref)` per sampled frame.
    samples: Vec<(f64, String)>,
}

/// Probes and samples one file, persisting its thumbnails. Pure with
/// respect to the catalog, so distinct files can be prepared in parallel.
pub fn prepare_video(
    media: &dyn MediaTool,
    project_dir: &Path,
    path: &Path,
    sample_rate_hz: f64,
) -> Result<PreparedVideo> {
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let canonical = path.canonicalize().map_err(|e| Error::UndecodableFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let info = media.probe(&canonical)?;
    if !(info.duration_s > 0.0) {
        return Err(Error::ZeroDurationVideo(path.to_path_buf()));
    }
    fs::create_dir_all(project_dir)?;
    let project_root = project_dir.canonicalize()?;
    let stored_path = pathdiff::diff_paths(&canonical, &project_root)
        .unwrap_or_else(|| canonical.clone())
        .to_string_lossy()
        .into_owned();

    let samples = sample_times(info.duration_s, sample_rate_hz)
        .into_iter()
        .map(|t| {
            let frame = media.decode_frame(&canonical, t)?;
            Ok((t, store_thumbnail(project_dir, &frame)?))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PreparedVideo {
        canonical,
        stored_path,
        duration_s: info.duration_s,
        fps: info.fps,
        width: info.width,
        height: info.height,
        samples,
    })
}

/// Assets in ingest order plus their sampled frames.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub assets: Vec<VideoAsset>,
    pub frames: BTreeMap<VideoId, Vec<FrameRecord>>,
}

impl Catalog {
    pub fn asset(&self, id: &VideoId) -> Result<&VideoAsset> {
        self.assets
            .iter()
            .find(|a| &a.id == id)
            .ok_or_else(|| Error::UnknownVideo(id.to_string()))
    }

    pub fn frames_of(&self, id: &VideoId) -> Result<&[FrameRecord]> {
        self.frames
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownVideo(id.to_string()))
    }

    pub fn frame(&self, key: &FrameKey) -> Result<&FrameRecord> {
        self.frames
            .get(&key.video_id)
            .and_then(|f| f.get(key.frame_index as usize))
            .ok_or_else(|| Error::frame_not_found(key))
    }

    /// Every frame key in `(video_id, frame_index)` order.
    pub fn keys(&self) -> Vec<FrameKey> {
        self.frames
            .values()
            .flat_map(|fs| fs.iter().map(FrameRecord::key))
            .collect()
    }

    pub fn frame_total(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    /// Position of `id` in ingest order.
    pub fn ingest_position(&self, id: &VideoId) -> Option<usize> {
        self.assets.iter().position(|a| &a.id == id)
    }

    /// Catalog of `(id, sampled frame count)` videos with no backing files:
    /// frames at `i / rate`, each video exactly as long as its samples,
    /// source path `<id>.vmv`. Useful for building projects from
    /// precomputed vectors.
    pub fn synthetic(videos: &[(VideoId, usize)], sample_rate_hz: f64) -> Self {
        let mut cat = Catalog::default();
        for (id, count) in videos {
            let count = (*count).max(1);
            cat.assets.push(VideoAsset {
                id: id.clone(),
                path: format!("{id}.vmv"),
                duration_s: count as f64 / sample_rate_hz,
                fps: sample_rate_hz,
                frame_count: count as u32,
                width: 1,
                height: 1,
            });
            cat.frames.insert(
                id.clone(),
                (0..count)
                    .map(|i| FrameRecord {
                        video_id: id.clone(),
                        frame_index: i as u32,
                        time_s: i as f64 / sample_rate_hz,
                        thumbnail_ref: String::new(),
                    })
                    .collect(),
            );
        }
        cat
    }

    fn next_id(&self) -> VideoId {
        let max = self
            .assets
            .iter()
            .filter_map(|a| a.id.as_str().strip_prefix('v')?.parse::<u32>().ok())
            .max()
            .unwrap_or(0);
        VideoId(format!("v{}", max + 1))
    }

    /// Registers a prepared video, assigning the next free id.
    pub fn register(&mut self, project_dir: &Path, prepared: PreparedVideo) -> Result<&VideoAsset> {
        for asset in &self.assets {
            let existing = asset.resolve_path(project_dir).canonicalize().ok();
            if existing.as_deref() == Some(prepared.canonical.as_path()) {
                return Err(Error::DuplicatePath(prepared.canonical));
            }
        }
        let id = self.next_id();
        let frames: Vec<FrameRecord> = prepared
            .samples
            .into_iter()
            .enumerate()
            .map(|(i, (time_s, thumbnail_ref))| FrameRecord {
                video_id: id.clone(),
                frame_index: i as u32,
                time_s,
                thumbnail_ref,
            })
            .collect();
        self.assets.push(VideoAsset {
            id: id.clone(),
            path: prepared.stored_path,
            duration_s: prepared.duration_s,
            fps: prepared.fps,
            frame_count: frames.len() as u32,
            width: prepared.width,
            height: prepared.height,
        });
        self.frames.insert(id, frames);
        Ok(self.assets.last().unwrap())
    }

    /// Samples and registers one video.
    pub fn ingest_video(
        &mut self,
        media: &dyn MediaTool,
        project_dir: &Path,
        path: &Path,
        sample_rate_hz: f64,
    ) -> Result<(VideoAsset, Vec<FrameRecord>)> {
        let canonical = path.canonicalize().ok();
        if let Some(c) = &canonical {
            if self
                .assets
                .iter()
                .any(|a| a.resolve_path(project_dir).canonicalize().ok().as_ref() == Some(c))
            {
                return Err(Error::DuplicatePath(c.clone()));
            }
        }
        let prepared = prepare_video(media, project_dir, path, sample_rate_hz)?;
        let asset = self.register(project_dir, prepared)?.clone();
        let frames = self.frames[&asset.id].clone();
        Ok((asset, frames))
    }

    /// Ingests several files: decoding runs in parallel, registration
    /// happens in the order given.
    pub fn ingest_many(
        &mut self,
        media: &dyn MediaTool,
        project_dir: &Path,
        paths: &[PathBuf],
        sample_rate_hz: f64,
    ) -> Result<Vec<VideoId>> {
        let prepared: Vec<Result<PreparedVideo>> = paths
            .par_iter()
            .map(|p| prepare_video(media, project_dir, p, sample_rate_hz))
            .collect();
        let mut ids = Vec::with_capacity(paths.len());
        for p in prepared {
            ids.push(self.register(project_dir, p?)?.id.clone());
        }
        Ok(ids)
    }

    /// Decoded pixels of a sampled frame.
    pub fn frame_image(
        &self,
        media: &dyn MediaTool,
        project_dir: &Path,
        key: &FrameKey,
        resolution: Resolution,
    ) -> Result<RgbImage> {
        let record = self.frame(key)?;
        let asset = self.asset(&key.video_id)?;
        let native = media.decode_frame(&asset.resolve_path(project_dir), record.time_s)?;
        Ok(match resolution {
            Resolution::Native => native,
            Resolution::Size(w, h) => {
                if w == 0 || h == 0 {
                    return Err(Error::InvalidArgument("resolution must be nonzero".into()));
                }
                resize_exact(&native, w, h)
            }
        })
    }
}
