//! `.vmv`: a minimal uncompressed video container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "VMV1"
//! width      u32
//! height     u32
//! fps_num    u32
//! fps_den    u32
//! frames     u32
//! body       frames * width * height * 3 bytes, packed RGB24, row-major
//! ```
//!
//! It exists so the reference media tool (`videomap-media`) can decode and
//! render without a codec stack, which keeps fixture corpora and golden
//! files reproducible byte-for-byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use image::{imageops, RgbImage};

use super::{MediaInfo, RenderReport};
use crate::error::{Error, Result};
use crate::routing::{CutList, Direction};

pub const MAGIC: &[u8; 4] = b"VMV1";
const HEADER_LEN: u64 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VmvHeader {
    pub width: u32,
    pub height: u32,
    pub fps_num: u32,
    pub fps_den: u32,
    pub frames: u32,
}

impl VmvHeader {
    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }

    pub fn duration_s(&self) -> f64 {
        self.frames as f64 * self.fps_den as f64 / self.fps_num as f64
    }

    fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * 3
    }

    pub fn info(&self) -> MediaInfo {
        MediaInfo {
            duration_s: self.duration_s(),
            fps: self.fps(),
            width: self.width,
            height: self.height,
        }
    }
}

fn undecodable(path: &Path, reason: impl Into<String>) -> Error {
    Error::UndecodableFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

pub fn read_header(path: &Path) -> Result<VmvHeader> {
    let mut file = File::open(path).map_err(|e| undecodable(path, e.to_string()))?;
    let mut buf = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut buf)
        .map_err(|_| undecodable(path, "short header"))?;
    if &buf[0..4] != MAGIC {
        return Err(undecodable(path, "not a VMV1 file"));
    }
    let header = VmvHeader {
        width: u32_at(&buf, 4),
        height: u32_at(&buf, 8),
        fps_num: u32_at(&buf, 12),
        fps_den: u32_at(&buf, 16),
        frames: u32_at(&buf, 20),
    };
    if header.width == 0 || header.height == 0 || header.fps_num == 0 || header.fps_den == 0 {
        return Err(undecodable(path, "degenerate header"));
    }
    let expected = HEADER_LEN + header.frames as u64 * header.frame_len() as u64;
    let actual = file.metadata()?.len();
    if actual < expected {
        return Err(undecodable(path, "truncated frame data"));
    }
    Ok(header)
}

pub fn probe(path: &Path) -> Result<MediaInfo> {
    Ok(read_header(path)?.info())
}

/// Index of the stored frame displayed at `time_s`.
pub fn frame_at(header: &VmvHeader, time_s: f64) -> u32 {
    let idx = (time_s * header.fps() + 1e-9).floor();
    if idx <= 0.0 {
        0
    } else {
        (idx as u32).min(header.frames.saturating_sub(1))
    }
}

pub fn read_frame(path: &Path, header: &VmvHeader, index: u32) -> Result<RgbImage> {
    let len = header.frame_len();
    let mut file = File::open(path)?;
    file.seek(SeekFrom::Start(HEADER_LEN + index as u64 * len as u64))?;
    let mut pixels = vec![0u8; len];
    file.read_exact(&mut pixels)
        .map_err(|_| undecodable(path, "truncated frame data"))?;
    Ok(RgbImage::from_raw(header.width, header.height, pixels).expect("frame length checked"))
}

pub fn decode_frame(path: &Path, time_s: f64) -> Result<RgbImage> {
    let header = read_header(path)?;
    if header.frames == 0 {
        return Err(undecodable(path, "no frames"));
    }
    read_frame(path, &header, frame_at(&header, time_s))
}

pub struct VmvWriter {
    out: BufWriter<File>,
    header: VmvHeader,
    written: u32,
}

impl VmvWriter {
    /// Starts a file; the frame count in the header is patched by `finish`.
    pub fn create(path: &Path, width: u32, height: u32, fps_num: u32, fps_den: u32) -> Result<Self> {
        if width == 0 || height == 0 || fps_num == 0 || fps_den == 0 {
            return Err(Error::InvalidArgument("vmv dimensions and rate must be nonzero".into()));
        }
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MAGIC)?;
        for v in [width, height, fps_num, fps_den, 0] {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(VmvWriter {
            out,
            header: VmvHeader {
                width,
                height,
                fps_num,
                fps_den,
                frames: 0,
            },
            written: 0,
        })
    }

    pub fn push(&mut self, frame: &RgbImage) -> Result<()> {
        if frame.width() != self.header.width || frame.height() != self.header.height {
            return Err(Error::InvalidArgument(format!(
                "frame is {}x{}, stream is {}x{}",
                frame.width(),
                frame.height(),
                self.header.width,
                self.header.height
            )));
        }
        self.out.write_all(frame.as_raw())?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<VmvHeader> {
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(20))?;
        file.write_all(&self.written.to_le_bytes())?;
        file.sync_all()?;
        Ok(VmvHeader {
            frames: self.written,
            ..self.header
        })
    }
}

/// Renders a cut list into a new `.vmv` file.
///
/// Output geometry and rate follow the first segment's source. Frame counts
/// are assigned from the cumulative segment duration so the rendered length
/// stays within half an output frame of the cut list's total duration.
pub fn render(cutlist: &CutList, out: &Path) -> Result<RenderReport> {
    let first = cutlist.segments.first().ok_or(Error::EmptyInput)?;
    let first_header = read_header(Path::new(&first.source_path))?;
    let (fps_num, fps_den) = (first_header.fps_num, first_header.fps_den);
    let fps = first_header.fps();
    let mut writer = VmvWriter::create(out, first_header.width, first_header.height, fps_num, fps_den)?;

    let mut cumulative_s = 0.0;
    let mut emitted: u64 = 0;
    for segment in &cutlist.segments {
        let path = Path::new(&segment.source_path);
        let header = read_header(path)?;
        let mut reader = BufReader::new(File::open(path)?);
        cumulative_s += segment.duration_s();
        let target = (cumulative_s * fps).round() as u64;
        let count = target.saturating_sub(emitted);
        let sign = match segment.direction {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        };
        for k in 0..count {
            let t = segment.entry_time_s + sign * (k as f64 / fps);
            let index = frame_at(&header, t.max(0.0));
            reader.seek(SeekFrom::Start(HEADER_LEN + index as u64 * header.frame_len() as u64))?;
            let mut pixels = vec![0u8; header.frame_len()];
            reader.read_exact(&mut pixels)?;
            let mut frame = RgbImage::from_raw(header.width, header.height, pixels).unwrap();
            if header.width != first_header.width || header.height != first_header.height {
                frame = imageops::resize(
                    &frame,
                    first_header.width,
                    first_header.height,
                    imageops::FilterType::Triangle,
                );
            }
            writer.push(&frame)?;
        }
        emitted = target;
    }
    let header = writer.finish()?;
    Ok(RenderReport {
        duration_s: header.duration_s(),
        frames: header.frames as u64,
    })
}
