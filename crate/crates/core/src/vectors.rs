//! Per-lens vector matrices and cosine distance.
//!
//! Vectors are kept as `f32` at rest (that is what providers emit and what
//! sidecars store); all distance arithmetic runs in `f64` over a cached
//! widened copy.

use crate::error::{Error, Result};
use crate::FrameKey;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 - a.b / (|a| |b|)` given precomputed norms.
#[inline]
pub fn cosine_distance_normed(a: &[f64], b: &[f64], norm_a: f64, norm_b: f64) -> f64 {
    1.0 - dot(a, b) / (norm_a * norm_b)
}

/// Cosine distance in `[0, 2]`. Undefined (NaN) when either vector is zero.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    cosine_distance_normed(a, b, norm(a), norm(b))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine_distance(a, b)
}

pub fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// All vectors of one lens, one row per frame, rows in `FrameKey` order.
#[derive(Debug, Clone)]
pub struct LensMatrix {
    dims: usize,
    keys: Vec<FrameKey>,
    values: Vec<f32>,
    wide: Vec<f64>,
    norms: Vec<f64>,
}

impl PartialEq for LensMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.keys == other.keys
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl LensMatrix {
    /// `keys` must be strictly increasing; `values` holds `keys.len() * dims`
    /// finite numbers.
    pub fn new(dims: usize, keys: Vec<FrameKey>, values: Vec<f32>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidArgument("vector dimensionality must be positive".into()));
        }
        if values.len() != keys.len() * dims {
            return Err(Error::DimensionMismatch {
                expected: keys.len() * dims,
                got: values.len(),
            });
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("matrix keys must be sorted and unique".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let wide = widen(&values);
        let norms = wide.chunks_exact(dims).map(norm).collect();
        Ok(LensMatrix {
            dims,
            keys,
            values,
            wide,
            norms,
        })
    }

    /// Builds a matrix from unordered `(key, vector)` rows.
    pub fn from_rows(dims: usize, mut rows: Vec<(FrameKey, Vec<f32>)>) -> Result<Self> {
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut keys = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * dims);
        for (key, v) in rows {
            if v.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: v.len(),
                });
            }
            keys.push(key);
            values.extend(v);
        }
        Self::new(dims, keys, values)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[FrameKey] {
        &self.keys
    }

    pub fn key(&self, i: usize) -> &FrameKey {
        &self.keys[i]
    }

    /// Raw `f32` storage, row-major.
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn row_f64(&self, i: usize) -> &[f64] {
        &self.wide[i * self.dims..(i + 1) * self.dims]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn index_of(&self, key: &FrameKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }

    /// Rows whose cosine distance is undefined.
    pub fn zero_norm_rows(&self) -> Vec<&FrameKey> {
        self.norms
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0.0)
            .map(|(i, _)| &self.keys[i])
            .collect()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        cosine_distance_normed(self.row_f64(i), self.row_f64(j), self.norms[i], self.norms[j])
    }
}
