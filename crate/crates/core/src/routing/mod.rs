//! Streets between videos, route planning and cut lists.

mod cutlist;
mod hamiltonian;
mod streets;

pub use cutlist::{route_to_cutlist, CutList, Direction, Segment, CUTLIST_VERSION, DEFAULT_MIN_SEGMENT_S};
pub use hamiltonian::{plan_route, shortest_hamiltonian_path, CancelToken, Route, MAX_ROUTE_VIDEOS};
pub use streets::{best_pair, build_streets, Street};

use crate::error::Result;
use crate::project::MapProject;
use crate::VideoId;

/// Route visiting `ordered` in exactly the given order. Only the streets
/// between neighbours are computed.
pub fn chain_in_order(project: &MapProject, lens: &str, ordered: &[VideoId], stride: usize) -> Result<Route> {
    if stride == 0 {
        return Err(crate::Error::InvalidArgument("stride must be at least 1".into()));
    }
    project.lens(lens)?;
    streets::check_video_list(project, ordered)?;
    if ordered.len() < 2 {
        return Err(crate::Error::TooFewVideos(ordered.len()));
    }
    let links = ordered
        .windows(2)
        .map(|w| streets::street_between(project, lens, &w[0], &w[1], stride))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Street> = links.iter().collect();
    Ok(Route::from_order(lens, ordered.to_vec(), &refs))
}

/// Streets over `video_ids` followed by the optimal route through them.
pub fn plan_route_for(
    project: &MapProject,
    lens: &str,
    video_ids: &[VideoId],
    cancel: &CancelToken,
) -> Result<Route> {
    hamiltonian::check_route_size(video_ids.len())?;
    let streets = build_streets(project, lens, video_ids, project.config.street_stride)?;
    plan_route(&streets, video_ids, cancel)
}
