//! Native color lens: a flattened 8x8x8 RGB histogram.

use image::{DynamicImage, RgbImage};

use crate::error::{Error, Result};

pub const BINS_PER_CHANNEL: usize = 8;
pub const COLOR_DIMS: usize = BINS_PER_CHANNEL * BINS_PER_CHANNEL * BINS_PER_CHANNEL;
const BIN_WIDTH: u8 = (256 / BINS_PER_CHANNEL) as u8;

/// Flattened bin index of one pixel: `r_bin * 64 + g_bin * 8 + b_bin`.
#[inline]
pub fn bin_index(rgb: [u8; 3]) -> usize {
    let [r, g, b] = rgb.map(|c| (c / BIN_WIDTH) as usize);
    r * BINS_PER_CHANNEL * BINS_PER_CHANNEL + g * BINS_PER_CHANNEL + b
}

/// L1-normalized color histogram of an RGB image.
pub fn color_vector_rgb(image: &RgbImage) -> Result<Vec<f32>> {
    let pixels = image.width() as u64 * image.height() as u64;
    if pixels == 0 {
        return Err(Error::EmptyImage);
    }
    let mut counts = [0u64; COLOR_DIMS];
    for p in image.pixels() {
        counts[bin_index(p.0)] += 1;
    }
    let total = pixels as f64;
    Ok(counts.iter().map(|&c| (c as f64 / total) as f32).collect())
}

/// Color vector of an arbitrary decoded image. Only 3-channel images are
/// accepted; 16-bit and float RGB are reduced to 8 bits first.
pub fn color_vector(image: &DynamicImage) -> Result<Vec<f32>> {
    let channels = image.color().channel_count();
    if channels != 3 {
        return Err(Error::NonColorImage(channels));
    }
    match image {
        DynamicImage::ImageRgb8(rgb) => color_vector_rgb(rgb),
        other => color_vector_rgb(&other.to_rgb8()),
    }
}
