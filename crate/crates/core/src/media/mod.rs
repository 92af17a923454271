//! Access to the external media-processing executable.
//!
//! The engine never links a codec. It asks a media tool for stream metadata,
//! for raw RGB24 frame buffers at a timestamp, and for rendering a cut list.
//! Two executables are understood:
//!
//! * any program speaking the `videomap-media` protocol:
//!   `probe <path>` prints `{"duration_s","fps","width","height"}` as JSON;
//!   `frame <path> <time_s>` writes `width*height*3` bytes of RGB24 to stdout;
//!   `render <cutlist.json> <out>` prints `{"duration_s","frames"}`.
//! * `ffmpeg` (with its sibling `ffprobe`), detected by file name.
//!
//! The executable comes from `VIDEOMAP_MEDIA_BIN`, then the project config,
//! then `ffmpeg` on `PATH`.

pub mod vmv;

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::Mutex;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::routing::{CutList, Direction};

pub const MEDIA_BIN_ENV: &str = "VIDEOMAP_MEDIA_BIN";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediaInfo {
    pub duration_s: f64,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderReport {
    pub duration_s: f64,
    pub frames: u64,
}

pub trait MediaTool: Send + Sync {
    fn probe(&self, path: &Path) -> Result<MediaInfo>;

    /// Native-resolution RGB frame shown at `time_s`.
    fn decode_frame(&self, path: &Path, time_s: f64) -> Result<RgbImage>;

    /// Renders `cutlist` to `out`. Segment source paths must be resolvable
    /// from the current directory.
    fn render(&self, cutlist: &CutList, out: &Path) -> Result<RenderReport>;
}

/// Picks the media tool for `bin`, falling back to the environment and then
/// to `ffmpeg` on `PATH`.
pub fn resolve(bin: Option<&Path>) -> Box<dyn MediaTool> {
    let bin = std::env::var_os(MEDIA_BIN_ENV)
        .map(PathBuf::from)
        .or_else(|| bin.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("ffmpeg"));
    let is_ffmpeg = bin
        .file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with("ffmpeg"));
    if is_ffmpeg {
        Box::new(FfmpegTool::new(bin))
    } else {
        Box::new(ProtocolTool::new(bin))
    }
}

fn run(cmd: &mut Command) -> Result<Output> {
    let output = cmd
        .stdin(Stdio::null())
        .output()
        .map_err(|e| Error::MediaTool(format!("cannot run {:?}: {e}", cmd.get_program())))?;
    Ok(output)
}

fn stderr_tail(output: &Output) -> String {
    let text = String::from_utf8_lossy(&output.stderr);
    text.lines().last().unwrap_or("").trim().to_owned()
}

fn check_frame_len(path: &Path, buf: Vec<u8>, info: &MediaInfo) -> Result<RgbImage> {
    RgbImage::from_raw(info.width, info.height, buf).ok_or_else(|| Error::UndecodableFile {
        path: path.to_path_buf(),
        reason: "media tool returned a short frame buffer".into(),
    })
}

/// Client for executables implementing the `videomap-media` protocol.
#[derive(Debug)]
pub struct ProtocolTool {
    bin: PathBuf,
    info_cache: Mutex<HashMap<PathBuf, MediaInfo>>,
}

impl ProtocolTool {
    pub fn new(bin: impl Into<PathBuf>) -> Self {
        ProtocolTool {
            bin: bin.into(),
            info_cache: Mutex::new(HashMap::new()),
        }
    }
}

impl MediaTool for ProtocolTool {
    fn probe(&self, path: &Path) -> Result<MediaInfo> {
        if let Some(info) = self.info_cache.lock().unwrap().get(path) {
            return Ok(*info);
        }
        let output = run(Command::new(&self.bin).arg("probe").arg(path))?;
        if !output.status.success() {
            return Err(Error::UndecodableFile {
                path: path.to_path_buf(),
                reason: stderr_tail(&output),
            });
        }
        let info: MediaInfo = serde_json::from_slice(&output.stdout)
            .map_err(|e| Error::MediaTool(format!("bad probe output: {e}")))?;
        self.info_cache
            .lock()
            .unwrap()
            .insert(path.to_path_buf(), info);
        Ok(info)
    }

    fn decode_frame(&self, path: &Path, time_s: f64) -> Result<RgbImage> {
        let info = self.probe(path)?;
        let output = run(Command::new(&self.bin)
            .arg("frame")
            .arg(path)
            .arg(format!("{time_s}")))?;
        if !output.status.success() {
            return Err(Error::UndecodableFile {
                path: path.to_path_buf(),
                reason: stderr_tail(&output),
            });
        }
        check_frame_len(path, output.stdout, &info)
    }

    fn render(&self, cutlist: &CutList, out: &Path) -> Result<RenderReport> {
        let mut spec = tempfile::NamedTempFile::new()?;
        spec.write_all(&cutlist.to_json_bytes())?;
        spec.flush()?;
        let output = run(Command::new(&self.bin).arg("render").arg(spec.path()).arg(out))?;
        if !output.status.success() {
            return Err(Error::MediaTool(format!("render failed: {}", stderr_tail(&output))));
        }
        serde_json::from_slice(&output.stdout)
            .map_err(|e| Error::MediaTool(format!("bad render output: {e}")))
    }
}

/// In-process decoder for `.vmv` files. Same behavior as the
/// `videomap-media` executable without the subprocess.
#[derive(Debug, Default, Clone, Copy)]
pub struct VmvTool;

impl MediaTool for VmvTool {
    fn probe(&self, path: &Path) -> Result<MediaInfo> {
        vmv::probe(path)
    }

    fn decode_frame(&self, path: &Path, time_s: f64) -> Result<RgbImage> {
        vmv::decode_frame(path, time_s)
    }

    fn render(&self, cutlist: &CutList, out: &Path) -> Result<RenderReport> {
        vmv::render(cutlist, out)
    }
}

/// `ffmpeg`/`ffprobe` adapter.
#[derive(Debug)]
pub struct FfmpegTool {
    ffmpeg: PathBuf,
    ffprobe: PathBuf,
    info_cache: Mutex<HashMap<PathBuf, MediaInfo>>,
}

#[derive(Deserialize)]
struct ProbeStream {
    width: Option<u32>,
    height: Option<u32>,
    avg_frame_rate: Option<String>,
    duration: Option<String>,
}

#[derive(Deserialize)]
struct ProbeFormat {
    duration: Option<String>,
}

#[derive(Deserialize)]
struct ProbeOutput {
    #[serde(default)]
    streams: Vec<ProbeStream>,
    format: Option<ProbeFormat>,
}

fn parse_rate(rate: &str) -> Option<f64> {
    match rate.split_once('/') {
        Some((n, d)) => {
            let (n, d): (f64, f64) = (n.parse().ok()?, d.parse().ok()?);
            (d != 0.0).then_some(n / d)
        }
        None => rate.parse().ok(),
    }
}

impl FfmpegTool {
    pub fn new(ffmpeg: impl Into<PathBuf>) -> Self {
        let ffmpeg = ffmpeg.into();
        let ffprobe = match ffmpeg.parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.join("ffprobe"),
            _ => PathBuf::from("ffprobe"),
        };
        FfmpegTool {
            ffmpeg,
            ffprobe,
            info_cache: Mutex::new(HashMap::new()),
        }
    }

    fn parse_probe(path: &Path, json: &[u8]) -> Result<MediaInfo> {
        let bad = |reason: &str| Error::UndecodableFile {
            path: path.to_path_buf(),
            reason: reason.to_owned(),
        };
        let parsed: ProbeOutput =
            serde_json::from_slice(json).map_err(|_| bad("unreadable ffprobe output"))?;
        let stream = parsed.streams.first().ok_or_else(|| bad("no video stream"))?;
        let duration_s = stream
            .duration
            .as_deref()
            .or(parsed.format.as_ref().and_then(|f| f.duration.as_deref()))
            .and_then(|d| d.parse::<f64>().ok())
            .unwrap_or(0.0);
        Ok(MediaInfo {
            duration_s,
            fps: stream
                .avg_frame_rate
                .as_deref()
                .and_then(parse_rate)
                .unwrap_or(0.0),
            width: stream.width.ok_or_else(|| bad("missing width"))?,
            height: stream.height.ok_or_else(|| bad("missing height"))?,
        })
    }

    /// Arguments for rendering `cutlist` with a trim/reverse/concat filter graph.
    pub fn render_args(cutlist: &CutList, out: &Path, info: &MediaInfo) -> Vec<String> {
        let mut args = vec!["-v".into(), "error".into(), "-y".into()];
        for seg in &cutlist.segments {
            args.push("-i".into());
            args.push(seg.source_path.clone());
        }
        let mut graph = String::new();
        for (i, seg) in cutlist.segments.iter().enumerate() {
            let (start, end) = seg.span();
            graph.push_str(&format!(
                "[{i}:v]trim=start={start}:end={end},setpts=PTS-STARTPTS"
            ));
            if seg.direction == Direction::Reverse {
                graph.push_str(",reverse");
            }
            graph.push_str(&format!(
                ",scale={}:{},fps={},setsar=1[v{i}];",
                info.width, info.height, info.fps
            ));
        }
        for i in 0..cutlist.segments.len() {
            graph.push_str(&format!("[v{i}]"));
        }
        graph.push_str(&format!("concat=n={}:v=1:a=0[out]", cutlist.segments.len()));
        args.extend([
            "-filter_complex".into(),
            graph,
            "-map".into(),
            "[out]".into(),
            "-an".into(),
            out.to_string_lossy().into_owned(),
        ]);
        args
    }
}

impl MediaTool for FfmpegTool {
    fn probe(&self, path: &Path) -> Result<MediaInfo> {
        if let Some(info) = self.info_cache.lock().unwrap().get(path) {
            return Ok(*info);
        }
        let output = run(Command::new(&self.ffprobe)
            .args(["-v", "error", "-select_streams", "v:0"])
            .args(["-show_entries", "stream=width,height,avg_frame_rate,duration:format=duration"])
            .args(["-of", "json"])
            .arg(path))?;
        if !output.status.success() {
            return Err(Error::UndecodableFile {
                path: path.to_path_buf(),
                reason: stderr_tail(&output),
            });
        }
        let info = Self::parse_probe(path, &output.stdout)?;
        self.info_cache
            .lock()
            .unwrap()
            .insert(path.to_path_buf(), info);
        Ok(info)
    }

    fn decode_frame(&self, path: &Path, time_s: f64) -> Result<RgbImage> {
        let info = self.probe(path)?;
        let output = run(Command::new(&self.ffmpeg)
            .args(["-v", "error", "-ss", &format!("{time_s}"), "-i"])
            .arg(path)
            .args(["-frames:v", "1", "-f", "rawvideo", "-pix_fmt", "rgb24", "-"]))?;
        if !output.status.success() {
            return Err(Error::UndecodableFile {
                path: path.to_path_buf(),
                reason: stderr_tail(&output),
            });
        }
        check_frame_len(path, output.stdout, &info)
    }

    fn render(&self, cutlist: &CutList, out: &Path) -> Result<RenderReport> {
        let first = cutlist.segments.first().ok_or(Error::EmptyInput)?;
        let info = self.probe(Path::new(&first.source_path))?;
        let output = run(Command::new(&self.ffmpeg).args(Self::render_args(cutlist, out, &info)))?;
        if !output.status.success() {
            return Err(Error::MediaTool(format!("ffmpeg render failed: {}", stderr_tail(&output))));
        }
        self.info_cache.lock().unwrap().remove(out);
        let rendered = self.probe(out)?;
        Ok(RenderReport {
            duration_s: rendered.duration_s,
            frames: (rendered.duration_s * rendered.fps).round() as u64,
        })
    }
}
