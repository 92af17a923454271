//! Video map engine: frame sampling, embedding lenses, t-SNE layout,
//! match-cut paths, route planning and the applications built on them.
//!
//! A [`project::MapProject`] is the snapshot every query reads. Build one
//! with [`ingest::Catalog`] and [`lens::LensRegistry`], persist it with
//! [`store`], then ask it for paths, routes, searches and summaries.

pub mod canonical;
pub mod error;
pub mod extensions;
mod ids;
pub mod ingest;
pub mod lens;
pub mod mapmodel;
pub mod media;
pub mod project;
pub mod projection;
pub mod routing;
pub mod search;
pub mod store;
pub mod vectors;

pub use error::{Error, Result};
pub use ids::{FrameKey, VideoId};
