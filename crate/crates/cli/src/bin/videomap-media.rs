//! `videomap-media`: reference media tool for `.vmv` files.
//!
//! Speaks the protocol the engine expects from any media executable
//! (`probe`, `frame`, `render`) and adds `synth` for making test clips.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use image::{Rgb, RgbImage};
use videomap_core::media::vmv::{self, VmvWriter};
use videomap_core::routing::CutList;
use videomap_core::Result;

#[derive(Parser)]
#[command(name = "videomap-media", version, about = "Decode, render and synthesize .vmv clips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print `{"duration_s","fps","width","height"}`.
    Probe { path: PathBuf },
    /// Write the frame shown at `time_s` to stdout as raw RGB24.
    Frame { path: PathBuf, time_s: f64 },
    /// Render a cut list and print `{"duration_s","frames"}`.
    Render { cutlist: PathBuf, out: PathBuf },
    /// Write a clip whose colors blend from `--from` to `--to` over time,
    /// with a horizontal brightness ramp and a band that sweeps across.
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 8.0)]
        seconds: f64,
        #[arg(long, default_value_t = 10)]
        fps: u32,
        #[arg(long, default_value_t = 32)]
        width: u32,
        #[arg(long, default_value_t = 18)]
        height: u32,
        #[arg(long, value_parser = parse_rgb)]
        from: [u8; 3],
        #[arg(long, value_parser = parse_rgb)]
        to: [u8; 3],
    },
}

fn parse_rgb(s: &str) -> std::result::Result<[u8; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected R,G,B, got {s:?}"));
    }
    let mut rgb = [0u8; 3];
    for (c, p) in rgb.iter_mut().zip(parts) {
        *c = p.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(rgb)
}

fn synth_frame(width: u32, height: u32, from: [u8; 3], to: [u8; 3], t: f64) -> RgbImage {
    let band = (t * width as f64).floor() as u32;
    RgbImage::from_fn(width, height, |x, y| {
        let ramp = 0.55 + 0.45 * x as f64 / (width.max(2) - 1) as f64;
        let mut px = [0u8; 3];
        for c in 0..3 {
            let base = from[c] as f64 + (to[c] as f64 - from[c] as f64) * t;
            px[c] = (base * ramp).round().clamp(0.0, 255.0) as u8;
        }
        if x == band && y < height / 2 {
            px = [255, 255, 255];
        }
        Rgb(px)
    })
}

fn run(command: Command) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match command {
        Command::Probe { path } => {
            let info = vmv::probe(&path)?;
            stdout.write_all(&videomap_core::canonical::to_vec(&info)?)?;
        }
        Command::Frame { path, time_s } => {
            stdout.write_all(vmv::decode_frame(&path, time_s)?.as_raw())?;
        }
        Command::Render { cutlist, out } => {
            let cl = CutList::from_json_bytes(&std::fs::read(&cutlist)?)?;
            let report = vmv::render(&cl, &out)?;
            stdout.write_all(&videomap_core::canonical::to_vec(&report)?)?;
        }
        Command::Synth {
            out,
            seconds,
            fps,
            width,
            height,
            from,
            to,
        } => {
            let frames = (seconds * fps as f64).round() as u32;
            let mut writer = VmvWriter::create(&out, width, height, fps, 1)?;
            for i in 0..frames {
                let t = i as f64 / frames.max(2).saturating_sub(1) as f64;
                writer.push(&synth_frame(width, height, from, to, t))?;
            }
            writer.finish()?;
        }
    }
    stdout.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(3)
        }
    }
}
