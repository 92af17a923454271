#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use videomap_core::ingest::Catalog;
use videomap_core::lens::LensId;
use videomap_core::project::MapProject;
use videomap_core::vectors::LensMatrix;
use videomap_core::{FrameKey, VideoId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, dims: usize) -> Vec<f32> {
    (0..dims).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect()
}

/// Project with `frames[i]` frames for video `v{i+1}` and one lens of
/// Gaussian random vectors.
pub fn random_project(rng: &mut ChaCha8Rng, frames: &[usize], lens: &str, dims: usize) -> MapProject {
    let videos: Vec<(VideoId, usize)> = frames
        .iter()
        .enumerate()
        .map(|(i, &n)| (VideoId::from(format!("v{}", i + 1)), n))
        .collect();
    let rows = videos
        .iter()
        .flat_map(|(id, n)| (0..*n).map(move |f| FrameKey::new(id.clone(), f as u32)))
        .map(|k| (k, gaussian_vec(rng, dims)))
        .collect();
    project_from_rows(&videos, lens, dims, rows)
}

pub fn project_from_rows(videos: &[(VideoId, usize)], lens: &str, dims: usize, rows: Vec<(FrameKey, Vec<f32>)>) -> MapProject {
    let mut project = MapProject::new(Catalog::synthetic(videos, 1.0));
    project
        .set_vectors(LensId::new(lens, dims, false).unwrap(), LensMatrix::from_rows(dims, rows).unwrap())
        .unwrap();
    project
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut d, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        d += x * y;
        na += x * x;
        nb += y * y;
    }
    1.0 - d / (na.sqrt() * nb.sqrt())
}

/// Every permutation of `0..n`, in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
