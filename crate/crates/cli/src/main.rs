//! `videomap`: builds and queries a video map project from the shell.
//!
//! Exit codes: 0 success, 2 usage, 3 engine error, 4 provider error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Output;

#[derive(Parser)]
#[command(name = "videomap", version, about = "Map, route and cut video collections by visual similarity")]
struct Cli {
    /// Project directory.
    #[arg(long, global = true, default_value = ".")]
    project: PathBuf,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

/// Embedding service or model file for model-backed lenses.
#[derive(Args, Clone, Default)]
struct ProviderArg {
    #[arg(long, env = "VIDEOMAP_PROVIDER_URL")]
    provider: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample every video in a directory into the project catalog.
    Ingest {
        dir: PathBuf,
        /// Frames sampled per second.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Compute frame vectors for one lens or `all`.
    Embed {
        #[arg(long, default_value = "all")]
        lens: String,
        #[command(flatten)]
        provider: ProviderArg,
    },
    /// t-SNE layout, per-video rows, districts and landmarks.
    Project {
        #[arg(long, default_value = "all")]
        lens: String,
        /// t-SNE seed; the project's stored seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Nearest cross-video frames of one frame.
    Paths {
        video: String,
        frame: u32,
        #[arg(long)]
        lens: String,
        #[arg(short, long)]
        k: Option<usize>,
    },
    /// Shortest route through videos, optionally written as a cut list.
    Route {
        #[arg(required = true, num_args = 2..)]
        videos: Vec<String>,
        #[arg(long)]
        lens: String,
        /// Keep the given order instead of optimizing it.
        #[arg(long)]
        in_order: bool,
        #[arg(long)]
        min_segment: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank videos by similarity to a text prompt.
    Search {
        prompt: String,
        #[arg(long, default_value = "semantic")]
        lens: String,
        #[arg(short, long)]
        k: Option<usize>,
        #[command(flatten)]
        provider: ProviderArg,
    },
    /// Cluster a video into semantic districts and cut a summary.
    Summarize {
        video: String,
        #[arg(long, default_value = "semantic")]
        lens: String,
        /// k-means seed; the project's stored seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Landmark indices in play order; all of them when omitted.
        #[arg(long, value_delimiter = ',')]
        landmarks: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the clip that best matches a photo.
    Highlight {
        photo: PathBuf,
        #[arg(long, default_value = "semantic")]
        lens: String,
        #[command(flatten)]
        provider: ProviderArg,
    },
    /// Rough cut following one sentence per line.
    Story {
        sentences: PathBuf,
        #[arg(long, default_value = "semantic")]
        lens: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArg,
    },
    /// Render a cut list with the media tool.
    Render {
        cutlist: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the project over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Allowed CORS origin; any origin when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
        /// Route-planning and render workers; CPU count when omitted.
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        provider: ProviderArg,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = Output::new(cli.json);
    match commands::run(&cli.project, cli.command, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.error(&e);
            ExitCode::from(if e.is_provider_error() { 4 } else { 3 })
        }
    }
}
