//! Command-line front end for the geolocation pipeline.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use args::Cli;
use commands::Ctx;
use config::{parse_override, RunConfig};
use error::CliError;

pub const ENV_OUTPUT_DIR: &str = "GEOLOC_OUTPUT_DIR";
pub const ENV_WORKERS: &str = "GEOLOC_WORKERS";

/// Config overrides in increasing precedence: environment, `--set`,
/// dedicated global flags, then subcommand flags.
pub fn collect_overrides(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<Vec<(String, String)>, CliError> {
    let g = &cli.global;
    let mut out = Vec::new();
    if let Some(dir) = env(ENV_OUTPUT_DIR).filter(|v| !v.is_empty()) {
        out.push(("run.output_dir".into(), dir));
    }
    if let Some(w) = env(ENV_WORKERS).filter(|v| !v.is_empty()) {
        out.push(("run.workers".into(), w));
    }
    let mut bad = Vec::new();
    for raw in &g.overrides {
        match parse_override(raw) {
            Ok(kv) => out.push(kv),
            Err(e) => bad.push(e),
        }
    }
    if !bad.is_empty() {
        return Err(CliError::invalid_config(bad));
    }
    if let Some(dir) = &g.output_dir {
        out.push(("run.output_dir".into(), dir.display().to_string()));
    }
    if let Some(seed) = g.seed {
        out.push(("run.seed".into(), seed.to_string()));
    }
    if let Some(w) = g.workers {
        out.push(("run.workers".into(), w.to_string()));
    }
    out.extend(cli.command.overrides());
    Ok(out)
}

/// Resolves the configuration, runs the command and returns the paths of
/// the artifacts it wrote.
pub fn run(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<Vec<PathBuf>, CliError> {
    let overrides = collect_overrides(cli, env)?;
    let cfg = RunConfig::load(cli.global.config.as_deref(), &overrides)?;
    if let Some(n) = cfg.workers {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised");
        }
    }
    let mut ctx = Ctx::new(cfg, cli.global.media, cli.command.name());
    if let Some(path) = cli.global.config.as_deref() {
        ctx.manifest.add_input(path)?;
    }
    commands::execute(&cli.command, &mut ctx)
}
