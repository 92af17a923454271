//! Model-backed lens providers.
//!
//! Out-of-process providers speak a small HTTP protocol: the engine sends
//! `POST {base}/embed` with a JSON [`EmbedRequest`] and expects a binary body
//! of `dims: u32` followed by `dims` little-endian `f32` values. Any non-200
//! status is reported as `ProviderUnavailable`.

use std::collections::HashMap;
use std::io::Cursor;
use std::time::Duration;

use base64::Engine as _;
use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PROVIDER_URL_ENV: &str = "VIDEOMAP_PROVIDER_URL";

/// Source of embeddings for a model-backed lens.
pub trait EmbeddingProvider: Send + Sync {
    fn embed_image(&self, lens: &str, image: &RgbImage) -> Result<Vec<f32>>;

    fn embed_text(&self, lens: &str, prompt: &str) -> Result<Vec<f32>>;

    fn has_text_encoder(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Image,
    Text,
}

/// Body of `POST /embed`. `payload` is base64: PNG bytes for images,
/// UTF-8 for text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub lens_name: String,
    pub payload_kind: PayloadKind,
    pub payload: String,
}

impl EmbedRequest {
    pub fn image(lens: &str, image: &RgbImage) -> Result<Self> {
        Ok(EmbedRequest {
            lens_name: lens.to_owned(),
            payload_kind: PayloadKind::Image,
            payload: base64::engine::general_purpose::STANDARD.encode(encode_png(image)?),
        })
    }

    pub fn text(lens: &str, prompt: &str) -> Self {
        EmbedRequest {
            lens_name: lens.to_owned(),
            payload_kind: PayloadKind::Text,
            payload: base64::engine::general_purpose::STANDARD.encode(prompt.as_bytes()),
        }
    }

    pub fn payload_bytes(&self) -> Result<Vec<u8>> {
        base64::engine::general_purpose::STANDARD
            .decode(&self.payload)
            .map_err(|e| Error::InvalidArgument(format!("payload is not base64: {e}")))
    }
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| Error::UndecodableImage(e.to_string()))?;
    Ok(buf.into_inner())
}

/// Wire encoding of an embedding response.
pub fn encode_vector(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * values.len());
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_vector(body: &[u8]) -> Result<Vec<f32>> {
    let malformed = || Error::ProviderUnavailable("malformed embedding response".into());
    let dims = u32::from_le_bytes(body.get(..4).ok_or_else(malformed)?.try_into().unwrap()) as usize;
    let rest = &body[4..];
    if rest.len() != dims * 4 {
        return Err(malformed());
    }
    Ok(rest
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Client for an embedding service.
pub struct HttpProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
    text: bool,
}

impl HttpProvider {
    pub fn new(base_url: &str, text_encoder: bool) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::ProviderUnavailable(e.to_string()))?;
        Ok(HttpProvider {
            endpoint: format!("{}/embed", base_url.trim_end_matches('/')),
            client,
            text: text_encoder,
        })
    }

    fn call(&self, request: &EmbedRequest) -> Result<Vec<f32>> {
        let body = serde_json::to_vec(request).expect("request serializes");
        let response = self
            .client
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(|e| Error::ProviderUnavailable(format!("{}: {e}", self.endpoint)))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::ProviderUnavailable(format!("{} returned {status}", self.endpoint)));
        }
        let bytes = response
            .bytes()
            .map_err(|e| Error::ProviderUnavailable(e.to_string()))?;
        decode_vector(&bytes)
    }
}

impl EmbeddingProvider for HttpProvider {
    fn embed_image(&self, lens: &str, image: &RgbImage) -> Result<Vec<f32>> {
        self.call(&EmbedRequest::image(lens, image)?)
    }

    fn embed_text(&self, lens: &str, prompt: &str) -> Result<Vec<f32>> {
        self.call(&EmbedRequest::text(lens, prompt))
    }

    fn has_text_encoder(&self) -> bool {
        self.text
    }
}

/// Stand-in for an in-process model file. This build has no model
/// runtime, so every call reports the asset as unusable.
pub struct ModelFileProvider {
    path: String,
    text: bool,
}

impl ModelFileProvider {
    pub fn new(path: &str, text_encoder: bool) -> Self {
        ModelFileProvider {
            path: path.to_owned(),
            text: text_encoder,
        }
    }

    fn missing(&self) -> Error {
        if std::path::Path::new(&self.path).exists() {
            Error::ModelAssetMissing(format!("{}: no in-process model runtime in this build", self.path))
        } else {
            Error::ModelAssetMissing(format!("{} not found", self.path))
        }
    }
}

impl EmbeddingProvider for ModelFileProvider {
    fn embed_image(&self, _: &str, _: &RgbImage) -> Result<Vec<f32>> {
        Err(self.missing())
    }

    fn embed_text(&self, _: &str, _: &str) -> Result<Vec<f32>> {
        Err(self.missing())
    }

    fn has_text_encoder(&self) -> bool {
        self.text
    }
}

/// Provider for a configured location: `http(s)://` URLs reach an
/// embedding service, anything else names a model file.
pub fn provider_for(location: &str, text_encoder: bool) -> Result<std::sync::Arc<dyn EmbeddingProvider>> {
    if location.starts_with("http://") || location.starts_with("https://") {
        Ok(std::sync::Arc::new(HttpProvider::new(location, text_encoder)?))
    } else {
        Ok(std::sync::Arc::new(ModelFileProvider::new(location, text_encoder)))
    }
}

/// Content key of an image for planted lookups.
pub fn image_digest(image: &RgbImage) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(image.width().to_le_bytes());
    h.update(image.height().to_le_bytes());
    h.update(image.as_raw());
    h.finalize().into()
}

/// Deterministic in-memory provider.
///
/// Planted images (matched by pixel content) and prompts return their planted
/// vectors; anything else gets a pseudo-random vector seeded by its content,
/// so identical inputs always embed identically. Used for offline tests and
/// demos where no model service is running.
#[derive(Debug, Clone)]
pub struct PlantedProvider {
    dims: usize,
    images: HashMap<[u8; 32], Vec<f32>>,
    texts: HashMap<String, Vec<f32>>,
}

impl PlantedProvider {
    pub fn new(dims: usize) -> Self {
        PlantedProvider {
            dims,
            images: HashMap::new(),
            texts: HashMap::new(),
        }
    }

    pub fn plant_image(&mut self, image: &RgbImage, vector: Vec<f32>) -> &mut Self {
        self.images.insert(image_digest(image), vector);
        self
    }

    pub fn plant_text(&mut self, prompt: &str, vector: Vec<f32>) -> &mut Self {
        self.texts.insert(prompt.trim().to_owned(), vector);
        self
    }

    fn fallback(&self, seed: [u8; 32]) -> Vec<f32> {
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dims).map(|_| rng.random_range(-1.0f32..1.0)).collect()
    }
}

impl EmbeddingProvider for PlantedProvider {
    fn embed_image(&self, _lens: &str, image: &RgbImage) -> Result<Vec<f32>> {
        let digest = image_digest(image);
        Ok(self
            .images
            .get(&digest)
            .cloned()
            .unwrap_or_else(|| self.fallback(digest)))
    }

    fn embed_text(&self, _lens: &str, prompt: &str) -> Result<Vec<f32>> {
        let prompt = prompt.trim();
        Ok(self.texts.get(prompt).cloned().unwrap_or_else(|| {
            let mut seed: [u8; 32] = Sha256::digest(prompt.as_bytes()).into();
            seed[0] ^= 0x5a;
            self.fallback(seed)
        }))
    }

    fn has_text_encoder(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_wire_format() {
        let bytes = encode_vector(&[1.0, -2.5]);
        assert_eq!(&bytes[..4], &2u32.to_le_bytes());
        assert_eq!(&bytes[4..8], &1.0f32.to_le_bytes());
        assert_eq!(decode_vector(&bytes).unwrap(), vec![1.0, -2.5]);
        assert!(decode_vector(&bytes[..7]).is_err());
        assert!(decode_vector(&[1, 0]).is_err());
    }

    #[test]
    fn request_json_shape() {
        let req = EmbedRequest::text("semantic", "dog");
        let json = serde_json::to_value(&req).unwrap();
        assert_eq!(json["lens_name"], "semantic");
        assert_eq!(json["payload_kind"], "text");
        assert_eq!(req.payload_bytes().unwrap(), b"dog");
    }

    #[test]
    fn planted_lookup_and_fallback_determinism() {
        let img = RgbImage::from_pixel(2, 2, image::Rgb([1, 2, 3]));
        let mut p = PlantedProvider::new(4);
        p.plant_image(&img, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.embed_image("semantic", &img).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let other = RgbImage::from_pixel(2, 2, image::Rgb([3, 2, 1]));
        let a = p.embed_image("semantic", &other).unwrap();
        let b = p.embed_image("semantic", &other).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        assert_eq!(p.embed_text("s", "cat").unwrap(), p.embed_text("s", " cat ").unwrap());
    }

    #[test]
    fn unreachable_service() {
        // Port 9 (discard) on localhost is closed in the sandbox and on CI.
        let p = HttpProvider::new("http://127.0.0.1:9", true).unwrap();
        let err = p.embed_text("semantic", "x").unwrap_err();
        assert_eq!(err.code(), "ProviderUnavailable");
    }
}
