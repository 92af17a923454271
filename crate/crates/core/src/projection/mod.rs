//! 2D map layouts: t-SNE over a lens's vectors, then a per-video
//! chronological re-layout for display.

pub mod layout;
pub mod tsne;

pub use layout::{rearrange_by_video, rearrange_with_spacing, MapPoint2D, DEFAULT_SPACING_FRACTION};
pub use tsne::{joint_probabilities, kl_divergence, kl_gradient, tsne_project, tsne_run, TsneConfig, TsneInit, TsneRun};

use crate::error::Result;
use crate::vectors::LensMatrix;

/// Projects every row of `matrix` and applies the per-video layout.
pub fn project_matrix(
    matrix: &LensMatrix,
    config: &TsneConfig,
    spacing_fraction: f64,
) -> Result<Vec<MapPoint2D>> {
    let n = matrix.len();
    let rows: Vec<f64> = (0..n).flat_map(|i| matrix.row_f64(i).to_vec()).collect();
    let raw = tsne_project(&rows, n, matrix.dims(), config)?;
    let points: Vec<MapPoint2D> = matrix
        .keys()
        .iter()
        .zip(raw)
        .map(|(k, xy)| MapPoint2D::new(k.clone(), xy))
        .collect();
    rearrange_by_video(&points, spacing_fraction)
}
