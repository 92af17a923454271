//! One function per subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use videomap_core::extensions::{self, SemanticDistrictSet};
use videomap_core::lens::{provider_for, LensId, LensRegistry, COLOR, SEMANTIC, SHAPE};
use videomap_core::media::{self, MediaTool};
use videomap_core::project::MapProject;
use videomap_core::routing::{self, CancelToken, CutList, Route};
use videomap_core::store::{load_project, save_project, MANIFEST};
use videomap_core::{mapmodel, search, Error, FrameKey, Result, VideoId};

use crate::output::Output;
use crate::{Command, ProviderArg};

const VIDEO_EXTENSIONS: &[&str] = &["avi", "m4v", "mkv", "mov", "mp4", "mpg", "vmv", "webm"];

pub fn run(dir: &Path, command: Command, out: &Output) -> Result<()> {
    match command {
        Command::Ingest { dir: source, rate } => ingest(dir, &source, rate, out),
        Command::Embed { lens, provider } => embed(dir, &lens, &provider, out),
        Command::Project { lens, seed } => project(dir, &lens, seed, out),
        Command::Paths { video, frame, lens, k } => paths(dir, &video, frame, &lens, k, out),
        Command::Route {
            videos,
            lens,
            in_order,
            min_segment,
            out: file,
        } => route(dir, &videos, &lens, in_order, min_segment, file.as_deref(), out),
        Command::Search { prompt, lens, k, provider } => search(dir, &prompt, &lens, k, &provider, out),
        Command::Summarize {
            video,
            lens,
            seed,
            landmarks,
            out: file,
        } => summarize(dir, &video, &lens, seed, &landmarks, file.as_deref(), out),
        Command::Highlight { photo, lens, provider } => highlight(dir, &photo, &lens, &provider, out),
        Command::Story {
            sentences,
            lens,
            out: file,
            provider,
        } => story(dir, &sentences, &lens, file.as_deref(), &provider, out),
        Command::Render { cutlist, out: file } => render(dir, &cutlist, &file, out),
        Command::Serve {
            addr,
            cors_origin,
            workers,
            provider,
        } => serve(dir, addr, cors_origin, workers, &provider),
    }
}

fn media_tool(project: &MapProject) -> Box<dyn MediaTool> {
    media::resolve(project.config.media_bin.as_deref().map(Path::new))
}

fn registry(project: &MapProject, provider: &ProviderArg) -> Result<LensRegistry> {
    project.registry(provider.provider.as_deref())
}

fn write_cutlist(path: &Path, cutlist: &CutList) -> Result<()> {
    fs::write(path, cutlist.to_json_bytes())?;
    Ok(())
}

fn ingest(dir: &Path, source: &Path, rate: f64, out: &Output) -> Result<()> {
    let mut project = if dir.join(MANIFEST).exists() {
        load_project(dir)?
    } else {
        fs::create_dir_all(dir)?;
        MapProject::new(Default::default()).with_root(dir)
    };
    let mut files: Vec<PathBuf> = fs::read_dir(source)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| VIDEO_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyInput);
    }
    let media = media_tool(&project);
    project.config.sample_rate_hz = rate;
    let ids = project.catalog.ingest_many(media.as_ref(), dir, &files, rate)?;
    if !project.lenses.is_empty() {
        out.warn("new videos invalidate existing vectors; run `embed` and `project` again");
        project.lenses.clear();
    }
    save_project(&mut project, dir)?;

    let assets: Vec<_> = ids.iter().map(|id| project.catalog.asset(id).unwrap()).collect();
    out.emit(&assets, || {
        let mut rows = vec![format!("{:<6} {:>9} {:>7}  {}", "video", "duration", "frames", "path")];
        rows.extend(assets.iter().map(|a| {
            format!(
                "{:<6} {:>8.3}s {:>7}  {}",
                a.id.as_str(),
                a.duration_s,
                project.catalog.frames[&a.id].len(),
                a.path
            )
        }));
        rows
    })
}

/// Provider location for a model lens: flag or environment first, then the
/// project config.
fn provider_location(project: &MapProject, lens: &str, provider: &ProviderArg) -> Option<String> {
    provider
        .provider
        .clone()
        .or_else(|| project.config.providers.get(lens).cloned())
}

#[derive(Serialize)]
struct EmbedSummary {
    lens: String,
    dims: usize,
    frames: usize,
}

fn embed(dir: &Path, lens: &str, provider: &ProviderArg, out: &Output) -> Result<()> {
    let mut project = load_project(dir)?;
    let names: Vec<&str> = if lens == "all" { vec![COLOR, SEMANTIC, SHAPE] } else { vec![lens] };
    let mut registry = LensRegistry::default();
    let mut selected = Vec::new();
    for name in names {
        let id = LensId::builtin(name).ok_or_else(|| Error::LensNotFound(name.to_owned()))?;
        if id.is_color() {
            selected.push(name);
            continue;
        }
        match provider_location(&project, name, provider) {
            Some(location) => {
                registry.register(id.clone(), provider_for(&location, id.supports_text)?)?;
                project.config.providers.insert(name.to_owned(), location);
                selected.push(name);
            }
            None if lens == "all" => out.warn(&format!("skipping lens {name}: no provider configured")),
            None => {
                return Err(Error::ProviderUnavailable(format!(
                    "lens {name} needs --provider or VIDEOMAP_PROVIDER_URL"
                )))
            }
        }
    }
    let media = media_tool(&project);
    let mut done = Vec::new();
    for name in selected {
        let matrix = registry.embed_catalog(name, &project.catalog, media.as_ref(), project.root())?;
        let id = registry.lens(name)?.clone();
        done.push(EmbedSummary {
            lens: name.to_owned(),
            dims: id.dims,
            frames: matrix.len(),
        });
        project.set_vectors(id, matrix)?;
        project.build_districts(name)?;
    }
    save_project(&mut project, dir)?;
    out.emit(&done, || {
        done.iter()
            .map(|d| format!("{:<10} {} frames x {} dims", d.lens, d.frames, d.dims))
            .collect()
    })
}

fn lens_names(project: &MapProject, lens: &str) -> Result<Vec<String>> {
    if lens == "all" {
        if project.lenses.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(project.lenses.keys().cloned().collect())
    } else {
        project.lens(lens)?;
        Ok(vec![lens.to_owned()])
    }
}

#[derive(Serialize)]
struct ProjectSummary {
    lens: String,
    points: usize,
    districts: usize,
    seed: u64,
}

fn project(dir: &Path, lens: &str, seed: Option<u64>, out: &Output) -> Result<()> {
    let mut project = load_project(dir)?;
    if let Some(seed) = seed {
        project.config.tsne.seed = seed;
    }
    let tsne = project.config.tsne.clone();
    let mut done = Vec::new();
    for name in lens_names(&project, lens)? {
        project.build_map(&name, &tsne)?;
        let data = project.lens(&name)?;
        done.push(ProjectSummary {
            points: data.layout.len(),
            districts: data.districts.len(),
            lens: name,
            seed: tsne.seed,
        });
    }
    save_project(&mut project, dir)?;
    out.emit(&done, || {
        done.iter()
            .map(|d| format!("{:<10} {} points, {} districts (seed {})", d.lens, d.points, d.districts, d.seed))
            .collect()
    })
}

#[derive(Serialize)]
struct PathRow {
    rank: usize,
    to: FrameKey,
    time_s: f64,
    timecode: String,
    distance: f64,
}

fn paths(dir: &Path, video: &str, frame: u32, lens: &str, k: Option<usize>, out: &Output) -> Result<()> {
    let project = load_project(dir)?;
    let key = FrameKey::new(video, frame);
    let k = k.unwrap_or(project.config.paths_k);
    let edges = mapmodel::nearest_paths(&project, lens, &key, k)?;
    let rows = edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let time_s = project.catalog.frame(&e.to)?.time_s;
            Ok(PathRow {
                rank: i + 1,
                to: e.to.clone(),
                time_s,
                timecode: mapmodel::format_timecode(time_s),
                distance: e.distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.emit(&rows, || {
        let mut lines = vec![format!("{:>4}  {:<6} {:>6}  {:<12}  {}", "rank", "video", "frame", "time", "distance")];
        lines.extend(rows.iter().map(|r| {
            format!(
                "{:>4}  {:<6} {:>6}  {:<12}  {:.9}",
                r.rank,
                r.to.video_id.as_str(),
                r.to.frame_index,
                r.timecode,
                r.distance
            )
        }));
        lines
    })
}

fn route_lines(route: &Route) -> Vec<String> {
    let order: Vec<&str> = route.order.iter().map(VideoId::as_str).collect();
    let mut lines = vec![format!("order: {}", order.join(" -> "))];
    for t in &route.transitions {
        lines.push(format!("  {} -> {}  distance {:.9}", t.from, t.to, t.distance));
    }
    lines.push(format!("total weight: {:.9}", route.total_weight));
    lines
}

fn cutlist_lines(cutlist: &CutList) -> Vec<String> {
    let mut lines: Vec<String> = cutlist
        .segments
        .iter()
        .map(|s| {
            format!(
                "  {:<6} {:>9.3} -> {:>9.3}  {:?}",
                s.video_id.as_str(),
                s.entry_time_s,
                s.exit_time_s,
                s.direction
            )
        })
        .collect();
    lines.push(format!("duration: {:.3}s", cutlist.total_duration_s()));
    lines
}

#[derive(Serialize)]
struct RouteOutput<'a> {
    route: &'a Route,
    cutlist: &'a CutList,
}

fn route(
    dir: &Path,
    videos: &[String],
    lens: &str,
    in_order: bool,
    min_segment: Option<f64>,
    file: Option<&Path>,
    out: &Output,
) -> Result<()> {
    let project = load_project(dir)?;
    let ids: Vec<VideoId> = videos.iter().map(VideoId::new).collect();
    let route = if in_order {
        routing::chain_in_order(&project, lens, &ids, project.config.street_stride)?
    } else {
        routing::plan_route_for(&project, lens, &ids, &CancelToken::new())?
    };
    let cutlist = routing::route_to_cutlist(&route, &project, min_segment.unwrap_or(project.config.min_segment_s))?;
    if let Some(path) = file {
        write_cutlist(path, &cutlist)?;
    }
    out.emit(
        &RouteOutput {
            route: &route,
            cutlist: &cutlist,
        },
        || {
            let mut lines = route_lines(&route);
            lines.push("cut list:".into());
            lines.extend(cutlist_lines(&cutlist));
            lines
        },
    )
}

fn search(dir: &Path, prompt: &str, lens: &str, k: Option<usize>, provider: &ProviderArg, out: &Output) -> Result<()> {
    let project = load_project(dir)?;
    let registry = registry(&project, provider)?;
    let k = k.unwrap_or(project.config.search_k);
    let result = search::prompt_search(&project, &registry, lens, prompt, k)?;
    out.emit(&result, || {
        result
            .highlighted
            .iter()
            .enumerate()
            .map(|(i, v)| {
                format!(
                    "{:>3}  {:<6} score {:.6}  best frame {}",
                    i + 1,
                    v.as_str(),
                    result.per_video_scores[v],
                    result.best_frame[v].frame_index
                )
            })
            .collect()
    })
}

#[derive(Serialize)]
struct SummaryOutput<'a> {
    districts: &'a SemanticDistrictSet,
    cutlist: &'a CutList,
}

fn summarize(
    dir: &Path,
    video: &str,
    lens: &str,
    seed: Option<u64>,
    landmarks: &[usize],
    file: Option<&Path>,
    out: &Output,
) -> Result<()> {
    let project = load_project(dir)?;
    let seed = seed.unwrap_or(project.config.kmeans_seed);
    let set = extensions::semantic_districts(&project, lens, &VideoId::new(video), seed)?;
    let order: Vec<usize> = if landmarks.is_empty() { (0..set.k).collect() } else { landmarks.to_vec() };
    let cutlist = extensions::summarize(&project, &set, &order)?;
    if let Some(path) = file {
        write_cutlist(path, &cutlist)?;
    }
    out.emit(
        &SummaryOutput {
            districts: &set,
            cutlist: &cutlist,
        },
        || {
            let mut lines = vec![format!("{} semantic districts (seed {seed})", set.k)];
            for (i, (d, l)) in set.districts.iter().zip(&set.landmarks).enumerate() {
                lines.push(format!("  [{i}] {} frames, landmark frame {}", d.members.len(), l.anchor.frame_index));
            }
            lines.push("cut list:".into());
            lines.extend(cutlist_lines(&cutlist));
            lines
        },
    )
}

fn highlight(dir: &Path, photo: &Path, lens: &str, provider: &ProviderArg, out: &Output) -> Result<()> {
    let project = load_project(dir)?;
    let registry = registry(&project, provider)?;
    let image = image::open(photo)
        .map_err(|e| Error::UndecodableImage(format!("{}: {e}", photo.display())))?
        .to_rgb8();
    let result = extensions::find_highlight(&project, &registry, lens, &image)?;
    out.emit(&result, || {
        let mut lines = vec![
            format!("nearest frame {} (distance {:.6})", result.nearest_frame, result.distance),
            format!(
                "clip {} {:.3}s -> {:.3}s",
                result.clip.video_id.as_str(),
                result.clip.start_s,
                result.clip.end_s
            ),
        ];
        lines.extend(result.neighbors.iter().map(|n| format!("  {} {:.6}", n.frame, n.distance)));
        lines
    })
}

fn story(dir: &Path, sentences: &Path, lens: &str, file: Option<&Path>, provider: &ProviderArg, out: &Output) -> Result<()> {
    let project = load_project(dir)?;
    let registry = registry(&project, provider)?;
    let text = fs::read_to_string(sentences)?;
    let lines: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    let edit = extensions::story_edit(&project, &registry, lens, &lines)?;
    if let Some(path) = file {
        write_cutlist(path, &edit.cutlist)?;
    }
    out.emit(&edit, || {
        let mut rows: Vec<String> = lines
            .iter()
            .zip(&edit.order)
            .map(|(s, v)| format!("{:<6} {s}", v.as_str()))
            .collect();
        rows.push("cut list:".into());
        rows.extend(cutlist_lines(&edit.cutlist));
        rows
    })
}

fn render(dir: &Path, cutlist: &Path, file: &Path, out: &Output) -> Result<()> {
    let project = load_project(dir)?;
    let cl = CutList::from_json_bytes(&fs::read(cutlist)?)?;
    let report = media_tool(&project).render(&cl.resolved_against(project.root()), file)?;
    out.emit(&report, || {
        vec![format!(
            "wrote {} ({} frames, {:.3}s)",
            file.display(),
            report.frames,
            report.duration_s
        )]
    })
}

fn serve(
    dir: &Path,
    addr: std::net::SocketAddr,
    cors_origin: Option<String>,
    workers: Option<usize>,
    provider: &ProviderArg,
) -> Result<()> {
    let project = load_project(dir)?;
    let registry = registry(&project, provider)?;
    let media: Arc<dyn MediaTool> = Arc::from(media_tool(&project));
    let mut options = videomap_api::ServeOptions {
        cors_origin,
        ..Default::default()
    };
    if let Some(w) = workers {
        options.workers = w;
    }
    let state = videomap_api::AppState::new(project, registry, media, options)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(videomap_api::serve(state, addr))?;
    Ok(())
}
