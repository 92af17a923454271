//! On-disk project format.
//!
//! ```text
//! <dir>/manifest.json            canonical JSON, everything except vectors
//! <dir>/vectors/<lens>-<h>.vmap  one sidecar per lens, named by content hash
//! <dir>/thumbs/<sha256>.jpg      frame thumbnails
//! <dir>/.lock                    present while a save is running
//! ```
//!
//! Sidecar layout, little-endian:
//!
//! ```text
//! "VMAP" | version u16 | dims u16 | count u32 | name_len u16 | name utf-8
//! | count * dims f32, rows in (video_id, frame_index) order
//! ```
//!
//! Sidecars are written under fresh names before the manifest is swapped in
//! by rename, so a reader sees either the old project or the new one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::Catalog;
use crate::lens::LensId;
use crate::mapmodel::{District, Landmark};
use crate::project::{LensData, MapProject, ProjectConfig, SCHEMA_VERSION};
use crate::projection::MapPoint2D;
use crate::vectors::LensMatrix;

pub const MANIFEST: &str = "manifest.json";
pub const VECTORS_DIR: &str = "vectors";
pub const LOCK_FILE: &str = ".lock";
pub const SIDECAR_MAGIC: &[u8; 4] = b"VMAP";
pub const SIDECAR_VERSION: u16 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    config: ProjectConfig,
    catalog: Catalog,
    lenses: BTreeMap<String, LensEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LensEntry {
    id: LensId,
    vectors: SidecarRef,
    layout: Vec<MapPoint2D>,
    districts: Vec<District>,
    landmarks: Vec<Landmark>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarRef {
    file: String,
    dims: usize,
    count: usize,
}

pub fn encode_sidecar(lens: &str, matrix: &LensMatrix) -> Result<Vec<u8>> {
    let dims = u16::try_from(matrix.dims())
        .map_err(|_| Error::InvalidArgument(format!("{} dimensions do not fit a sidecar", matrix.dims())))?;
    let count = u32::try_from(matrix.len()).map_err(|_| Error::InvalidArgument("too many vectors".into()))?;
    let name = lens.as_bytes();
    let mut out = Vec::with_capacity(14 + name.len() + matrix.values().len() * 4);
    out.extend_from_slice(SIDECAR_MAGIC);
    out.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
    out.extend_from_slice(&dims.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name);
    for v in matrix.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decoded sidecar: lens name, dims and the flat row-major values.
pub fn decode_sidecar(path: &Path, bytes: &[u8]) -> Result<(String, usize, Vec<f32>)> {
    let truncated = || Error::TruncatedSidecar(path.to_owned());
    if bytes.len() < 4 {
        return Err(truncated());
    }
    if &bytes[..4] != SIDECAR_MAGIC {
        return Err(Error::MagicMismatch(path.to_owned()));
    }
    if bytes.len() < 14 {
        return Err(truncated());
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let version = u16_at(4);
    if version != SIDECAR_VERSION {
        return Err(Error::UnsupportedVersion(version as u32));
    }
    let dims = u16_at(6) as usize;
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let name_len = u16_at(12) as usize;
    let body = 14 + name_len;
    if bytes.len() < body {
        return Err(truncated());
    }
    let name = std::str::from_utf8(&bytes[14..body])
        .map_err(|_| Error::CorruptManifest(format!("{}: lens name is not UTF-8", path.display())))?
        .to_owned();
    let expected = body + dims * count * 4;
    if bytes.len() < expected {
        return Err(truncated());
    }
    if bytes.len() > expected {
        return Err(Error::CorruptManifest(format!("{}: trailing bytes", path.display())));
    }
    let values = bytes[body..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((name, dims, values))
}

/// Exclusive hold on a project directory for the duration of a save.
struct WriteLock(PathBuf);

impl WriteLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WriteLock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::ProjectLocked(dir.to_owned())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("target has a parent directory");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// `path` (relative to `from`) re-expressed relative to `to`.
fn rebase(path: &str, from: &Path, to: &Path) -> String {
    let p = Path::new(path);
    if p.is_absolute() {
        return path.to_owned();
    }
    let abs = from.join(p);
    let abs = fs::canonicalize(&abs).unwrap_or(abs);
    pathdiff::diff_paths(&abs, to)
        .unwrap_or(abs)
        .to_string_lossy()
        .into_owned()
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

/// Writes `project` into `dir` and makes `dir` its root. Saving to a new
/// directory rebases asset paths and copies thumbnails along.
pub fn save_project(project: &mut MapProject, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join(VECTORS_DIR))?;
    let _lock = WriteLock::acquire(dir)?;

    let mut catalog = project.catalog.clone();
    if !same_dir(project.root(), dir) {
        let target = fs::canonicalize(dir)?;
        for asset in &mut catalog.assets {
            asset.path = rebase(&asset.path, project.root(), &target);
        }
        let thumbs: BTreeSet<&str> = catalog
            .frames
            .values()
            .flatten()
            .map(|f| f.thumbnail_ref.as_str())
            .filter(|r| !r.is_empty())
            .collect();
        for rel in thumbs {
            let (src, dst) = (project.root().join(rel), dir.join(rel));
            if src.exists() && !dst.exists() {
                fs::create_dir_all(dst.parent().unwrap())?;
                fs::copy(&src, &dst)?;
            }
        }
    }

    let mut lenses = BTreeMap::new();
    let mut keep = BTreeSet::new();
    for (name, data) in &project.lenses {
        let bytes = encode_sidecar(name, &data.vectors)?;
        let hash = hex::encode(Sha256::digest(&bytes));
        let file = format!("{VECTORS_DIR}/{name}-{}.vmap", &hash[..16]);
        let path = dir.join(&file);
        if !path.exists() {
            write_atomic(&path, &bytes)?;
        }
        keep.insert(path.file_name().unwrap().to_owned());
        lenses.insert(
            name.clone(),
            LensEntry {
                id: data.id.clone(),
                vectors: SidecarRef {
                    file,
                    dims: data.vectors.dims(),
                    count: data.vectors.len(),
                },
                layout: data.layout.clone(),
                districts: data.districts.clone(),
                landmarks: data.landmarks.clone(),
            },
        );
    }
    let manifest = Manifest {
        schema_version: project.schema_version,
        config: project.config.clone(),
        catalog: catalog.clone(),
        lenses,
    };
    write_atomic(&dir.join(MANIFEST), &crate::canonical::to_vec_pretty(&manifest)?)?;

    for entry in fs::read_dir(dir.join(VECTORS_DIR))? {
        let entry = entry?;
        let name = entry.file_name();
        if name.to_string_lossy().ends_with(".vmap") && !keep.contains(&name) {
            let _ = fs::remove_file(entry.path());
        }
    }
    project.catalog = catalog;
    project.set_root(dir.to_owned());
    Ok(())
}

pub fn load_project(dir: &Path) -> Result<MapProject> {
    let manifest_path = dir.join(MANIFEST);
    let bytes = match fs::read(&manifest_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::CorruptManifest(format!("{} not found", manifest_path.display())))
        }
        Err(e) => return Err(e.into()),
    };
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| Error::CorruptManifest(e.to_string()))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    match version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(Error::UnsupportedVersion(v as u32)),
        None => return Err(Error::CorruptManifest("schema_version missing".into())),
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| Error::CorruptManifest(e.to_string()))?;

    let mut project = MapProject::new(manifest.catalog).with_root(dir);
    project.config = manifest.config;
    let keys = project.catalog.keys();
    for (name, entry) in manifest.lenses {
        let path = dir.join(&entry.vectors.file);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::CorruptManifest(format!(
                    "lens {name}: sidecar {} is missing",
                    entry.vectors.file
                )))
            }
            Err(e) => return Err(e.into()),
        };
        let (sidecar_name, dims, values) = decode_sidecar(&path, &bytes)?;
        if sidecar_name != name || dims != entry.id.dims || dims != entry.vectors.dims {
            return Err(Error::CorruptManifest(format!("lens {name}: sidecar header disagrees with manifest")));
        }
        if values.len() != keys.len() * dims || entry.vectors.count != keys.len() {
            return Err(Error::CorruptManifest(format!(
                "lens {name}: sidecar covers {} frames, catalog has {}",
                values.len() / dims.max(1),
                keys.len()
            )));
        }
        let matrix = LensMatrix::new(dims, keys.clone(), values)
            .map_err(|e| Error::CorruptManifest(format!("lens {name}: {e}")))?;
        for key in entry.layout.iter().map(MapPoint2D::key) {
            project
                .catalog
                .frame(&key)
                .map_err(|_| Error::CorruptManifest(format!("lens {name}: layout references unknown frame {key}")))?;
        }
        project.lenses.insert(
            name,
            LensData {
                id: entry.id,
                vectors: matrix,
                layout: entry.layout,
                districts: entry.districts,
                landmarks: entry.landmarks,
            },
        );
    }
    Ok(project)
}
