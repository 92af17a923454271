//! Lenses: ways of turning a frame into a vector.
//!
//! `color` is computed in-process. `semantic` and `shape` (and any
//! user-registered lens) are backed by an [`EmbeddingProvider`].

pub mod color;
pub mod provider;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use color::{color_vector, color_vector_rgb, COLOR_DIMS};
pub use provider::{provider_for, EmbeddingProvider, HttpProvider, ModelFileProvider, PlantedProvider};

use crate::error::{Error, Result};
use crate::ingest::Catalog;
use crate::media::MediaTool;
use crate::vectors::LensMatrix;

pub const COLOR: &str = "color";
pub const SEMANTIC: &str = "semantic";
pub const SHAPE: &str = "shape";
pub const BUILTIN_DIMS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LensId {
    pub name: String,
    pub dims: usize,
    pub supports_text: bool,
}

impl LensId {
    pub fn new(name: impl Into<String>, dims: usize, supports_text: bool) -> Result<Self> {
        let name = name.into();
        if dims < 2 {
            return Err(Error::InvalidArgument(format!("lens {name} needs at least 2 dims")));
        }
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::InvalidArgument(format!("invalid lens name {name:?}")));
        }
        Ok(LensId {
            name,
            dims,
            supports_text,
        })
    }

    pub fn color() -> Self {
        LensId {
            name: COLOR.into(),
            dims: COLOR_DIMS,
            supports_text: false,
        }
    }

    /// Built-in lens definitions; `None` for user-defined names.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            COLOR => Some(Self::color()),
            SEMANTIC => Some(LensId {
                name: SEMANTIC.into(),
                dims: BUILTIN_DIMS,
                supports_text: true,
            }),
            SHAPE => Some(LensId {
                name: SHAPE.into(),
                dims: BUILTIN_DIMS,
                supports_text: false,
            }),
            _ => None,
        }
    }

    pub fn is_color(&self) -> bool {
        self.name == COLOR
    }
}

struct RegisteredLens {
    id: LensId,
    provider: Option<Arc<dyn EmbeddingProvider>>,
}

/// The lenses available to one session, with their providers.
pub struct LensRegistry {
    lenses: BTreeMap<String, RegisteredLens>,
}

impl Default for LensRegistry {
    fn default() -> Self {
        let mut lenses = BTreeMap::new();
        lenses.insert(
            COLOR.to_owned(),
            RegisteredLens {
                id: LensId::color(),
                provider: None,
            },
        );
        LensRegistry { lenses }
    }
}

impl LensRegistry {
    /// Registers a model-backed lens. Text support is kept only when the
    /// provider actually exposes a text encoder.
    pub fn register(&mut self, mut id: LensId, provider: Arc<dyn EmbeddingProvider>) -> Result<()> {
        if id.is_color() {
            return Err(Error::InvalidArgument("the color lens is built in".into()));
        }
        id.supports_text &= provider.has_text_encoder();
        self.lenses.insert(
            id.name.clone(),
            RegisteredLens {
                id,
                provider: Some(provider),
            },
        );
        Ok(())
    }

    /// Makes a lens known without a provider. Stored vectors stay usable;
    /// embedding calls report the provider as unavailable.
    pub fn declare(&mut self, id: LensId) {
        if !id.is_color() {
            self.lenses.insert(id.name.clone(), RegisteredLens { id, provider: None });
        }
    }

    pub fn lens(&self, name: &str) -> Result<&LensId> {
        self.lenses
            .get(name)
            .map(|l| &l.id)
            .ok_or_else(|| Error::LensNotFound(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.lenses.keys().map(String::as_str)
    }

    fn provider(&self, name: &str) -> Result<(&LensId, &dyn EmbeddingProvider)> {
        let lens = self
            .lenses
            .get(name)
            .ok_or_else(|| Error::LensNotFound(name.to_owned()))?;
        let provider = lens
            .provider
            .as_deref()
            .ok_or_else(|| Error::ProviderUnavailable(format!("no provider configured for lens {name}")))?;
        Ok((&lens.id, provider))
    }

    fn check_dims(lens: &LensId, values: Vec<f32>) -> Result<Vec<f32>> {
        if values.len() != lens.dims {
            return Err(Error::DimensionMismatch {
                expected: lens.dims,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(values)
    }

    pub fn embed_image(&self, lens: &str, image: &RgbImage) -> Result<Vec<f32>> {
        if lens == COLOR {
            return color_vector_rgb(image);
        }
        let (id, provider) = self.provider(lens)?;
        Self::check_dims(id, provider.embed_image(lens, image)?)
    }

    pub fn embed_text(&self, lens: &str, prompt: &str) -> Result<Vec<f32>> {
        let id = self.lens(lens)?;
        if !id.supports_text {
            return Err(Error::TextNotSupported(lens.to_owned()));
        }
        let prompt = prompt.trim();
        if prompt.is_empty() {
            return Err(Error::EmptyPrompt);
        }
        let (id, provider) = self.provider(lens)?;
        Self::check_dims(id, provider.embed_text(lens, prompt)?)
    }

    /// Embeds every sampled frame in the catalog, in parallel.
    pub fn embed_catalog(
        &self,
        lens: &str,
        catalog: &Catalog,
        media: &dyn MediaTool,
        project_dir: &Path,
    ) -> Result<LensMatrix> {
        let id = self.lens(lens)?.clone();
        let rows = catalog
            .keys()
            .into_par_iter()
            .map(|key| {
                let record = catalog.frame(&key)?;
                let asset = catalog.asset(&key.video_id)?;
                let image = media.decode_frame(&asset.resolve_path(project_dir), record.time_s)?;
                Ok((key, self.embed_image(lens, &image)?))
            })
            .collect::<Result<Vec<_>>>()?;
        LensMatrix::from_rows(id.dims, rows)
    }
}
