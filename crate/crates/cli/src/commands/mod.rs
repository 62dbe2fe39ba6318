//! Subcommand implementations.

pub mod fit;
pub mod isoflop;
pub mod plan;
pub mod report;
pub mod simulate;

use std::path::PathBuf;

use crate::artifacts::Emitter;
use crate::config::WorkspaceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Ctx {
    pub config: WorkspaceConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub format: Format,
}

impl Ctx {
    pub fn emitter(&self) -> ditscale::Result<Emitter> {
        Emitter::new(
            &self.out,
            crate::artifacts::Provenance {
                tool: "ditscale",
                version: env!("CARGO_PKG_VERSION"),
                config_hash: self.config.hash(),
                seed: self.seed,
            },
        )
    }
}

/// Resolves a surface argument: a preset name or a path to a law JSON.
pub fn resolve_surface(arg: &str) -> ditscale::Result<ditscale::surface::LossSurface> {
    match arg {
        "video-optimal" => Ok(ditscale::presets::surface_video_optimal()),
        "video-fixed" => Ok(ditscale::presets::surface_video_fixed()),
        "image" => Ok(ditscale::presets::surface_image()),
        path => {
            let text = std::fs::read_to_string(path)?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            ditscale::surface::LossSurface::from_law_json(&value)
        }
    }
}
