//! The project snapshot served to every query.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Catalog, DEFAULT_SAMPLE_RATE_HZ};
use crate::lens::{provider_for, LensId, LensRegistry};
use crate::mapmodel::{self, District, Landmark, DEFAULT_PATHS_K};
use crate::projection::{project_matrix, MapPoint2D, TsneConfig, DEFAULT_SPACING_FRACTION};
use crate::routing::DEFAULT_MIN_SEGMENT_S;
use crate::search::DEFAULT_SEARCH_K;
use crate::vectors::LensMatrix;
use crate::VideoId;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    pub sample_rate_hz: f64,
    pub tsne: TsneConfig,
    pub spacing_fraction: f64,
    pub paths_k: usize,
    pub search_k: usize,
    pub min_segment_s: f64,
    pub street_stride: usize,
    pub kmeans_seed: u64,
    /// Media executable; `VIDEOMAP_MEDIA_BIN` takes precedence.
    pub media_bin: Option<String>,
    /// Provider per model-backed lens: an embedding-service URL.
    pub providers: BTreeMap<String, String>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            tsne: TsneConfig::default(),
            spacing_fraction: DEFAULT_SPACING_FRACTION,
            paths_k: DEFAULT_PATHS_K,
            search_k: DEFAULT_SEARCH_K,
            min_segment_s: DEFAULT_MIN_SEGMENT_S,
            street_stride: 1,
            kmeans_seed: 7,
            media_bin: None,
            providers: BTreeMap::new(),
        }
    }
}

/// Everything known about one lens.
#[derive(Debug, Clone, PartialEq)]
pub struct LensData {
    pub id: LensId,
    pub vectors: LensMatrix,
    /// Empty until the lens has been projected.
    pub layout: Vec<MapPoint2D>,
    pub districts: Vec<District>,
    pub landmarks: Vec<Landmark>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapProject {
    pub schema_version: u32,
    pub config: ProjectConfig,
    pub catalog: Catalog,
    pub lenses: BTreeMap<String, LensData>,
    root: PathBuf,
}

impl MapProject {
    pub fn new(catalog: Catalog) -> Self {
        MapProject {
            schema_version: SCHEMA_VERSION,
            config: ProjectConfig::default(),
            catalog,
            lenses: BTreeMap::new(),
            root: PathBuf::from("."),
        }
    }

    pub fn with_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.root = root.into();
        self
    }

    pub(crate) fn set_root(&mut self, root: PathBuf) {
        self.root = root;
    }

    /// Directory against which asset paths and thumbnail refs resolve.
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn lens(&self, name: &str) -> Result<&LensData> {
        self.lenses
            .get(name)
            .ok_or_else(|| Error::LensNotFound(name.to_owned()))
    }

    pub fn video_ids(&self) -> Vec<VideoId> {
        self.catalog.assets.iter().map(|a| a.id.clone()).collect()
    }

    /// Installs a lens's vectors. The matrix must cover exactly the
    /// catalog's frames. Any previous layout for the lens is dropped.
    pub fn set_vectors(&mut self, id: LensId, vectors: LensMatrix) -> Result<()> {
        if vectors.dims() != id.dims {
            return Err(Error::DimensionMismatch {
                expected: id.dims,
                got: vectors.dims(),
            });
        }
        let expected = self.catalog.keys();
        if vectors.keys() != expected.as_slice() {
            let missing = expected
                .iter()
                .find(|k| vectors.index_of(k).is_none())
                .or_else(|| vectors.keys().iter().find(|k| self.catalog.frame(k).is_err()))
                .cloned()
                .unwrap_or_else(|| expected[0].clone());
            return Err(Error::MissingVectors {
                lens: id.name,
                video_id: missing.video_id.to_string(),
                frame_index: missing.frame_index,
            });
        }
        self.lenses.insert(
            id.name.clone(),
            LensData {
                id,
                vectors,
                layout: Vec::new(),
                districts: Vec::new(),
                landmarks: Vec::new(),
            },
        );
        Ok(())
    }

    /// Lens registry for this project. Each model-backed lens gets the
    /// provider at `override_location` if given, else the one configured
    /// for it; lenses with neither are declared without a provider.
    pub fn registry(&self, override_location: Option<&str>) -> Result<LensRegistry> {
        let mut registry = LensRegistry::default();
        for data in self.lenses.values().filter(|d| !d.id.is_color()) {
            let location = override_location.or(self.config.providers.get(&data.id.name).map(String::as_str));
            match location {
                Some(loc) => {
                    let provider = provider_for(loc, data.id.supports_text)?;
                    registry.register(data.id.clone(), provider)?;
                }
                None => registry.declare(data.id.clone()),
            }
        }
        Ok(registry)
    }

    /// Districts and landmarks for a lens (no projection needed).
    pub fn build_districts(&mut self, lens: &str) -> Result<()> {
        let districts = mapmodel::build_districts(self, lens)?;
        let landmarks = districts
            .iter()
            .map(|d| mapmodel::compute_landmark(self, d, lens))
            .collect::<Result<Vec<_>>>()?;
        let data = self.lenses.get_mut(lens).expect("lens checked above");
        data.districts = districts;
        data.landmarks = landmarks;
        Ok(())
    }

    /// t-SNE layout, per-video rows, districts and landmarks for one lens.
    pub fn build_map(&mut self, lens: &str, tsne: &TsneConfig) -> Result<()> {
        let layout = project_matrix(&self.lens(lens)?.vectors, tsne, self.config.spacing_fraction)?;
        self.build_districts(lens)?;
        self.lenses.get_mut(lens).unwrap().layout = layout;
        Ok(())
    }
}
