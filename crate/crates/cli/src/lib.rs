//! Command-line front end: configuration files in, CSV/JSON artifacts out.

pub mod config;
pub mod error;
pub mod presets;
pub mod svg;
pub mod tasks;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{RunConfig, TaskKind};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dcomp",
    version,
    about = "Decision-competition simulations, basins, design campaigns and regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Configuration file, or the name of a shipped preset.
    #[arg(long, short)]
    pub config: Option<String>,
    /// `key=value` override; dotted keys address nested sections.
    #[arg(long = "override", short = 'o', value_name = "K=V")]
    pub overrides: Vec<String>,
    /// Artifact directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also render heatmaps as SVG.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the task named in a configuration.
    Run {
        #[arg(value_name = "CONFIG")]
        file: String,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate one scenario and optionally a phase ensemble.
    Simulate(Common),
    /// Fixed points and their stability for a reduced model.
    FixedPoints(Common),
    /// One-parameter sweep of fixed points and attractors.
    Sweep(Common),
    /// Blue-win basin fraction over initial conditions.
    Basin(Common),
    /// Basin fraction over a two-parameter grid.
    Heatmap(Common),
    /// Adaptive design campaign over basin outcomes.
    Doe(Common),
    /// Binomial regression, deviance table and feature importance on a log.
    Glm(Common),
    /// List the shipped configurations.
    Presets {
        /// Write each preset as `<name>.json` into this directory.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

/// Resolve the configuration for one invocation. Flags win over overrides,
/// which win over the file.
pub fn resolve_config(source: Option<&str>, task: Option<TaskKind>, common: &Common) -> Result<RunConfig> {
    let doc = match source {
        Some(s) => config::load(s)?,
        None => serde_json::Value::Object(Default::default()),
    };
    let mut overrides = common.overrides.clone();
    if let Some(t) = task {
        overrides.push(format!("task={}", t.name()));
    }
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &common.out {
        overrides.push(format!("output={}", serde_json::to_string(out)?));
    }
    config::resolve(doc, &overrides)
}

/// SHA-256 of the resolved configuration, ignoring the output directory.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let text = serde_json::to_string(&RunConfig {
        output: None,
        ..cfg.clone()
    })?;
    Ok(Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

pub fn default_output(cfg: &RunConfig) -> PathBuf {
    cfg.output
        .clone()
        .unwrap_or_else(|| PathBuf::from("dcomp-out").join(cfg.task.name()))
}

/// Validate, build the model, run the task and write its artifacts plus
/// `config.resolved.json` and `metadata.json` into `out`. Nothing is
/// written when validation fails.
pub fn execute(cfg: &RunConfig, out: &Path, svg: bool) -> Result<Vec<String>> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    tasks::check(cfg, &model)?;
    let hash = config_hash(cfg)?;

    fs::create_dir_all(out)?;
    let mut artifacts = tasks::Artifacts::new(out, &hash);
    artifacts.json("config.resolved.json", cfg)?;
    let start = Instant::now();
    tasks::run(cfg, &model, &mut artifacts, svg)?;
    let wall = start.elapsed().as_secs_f64();
    let mut files = artifacts.files.clone();
    files.push("metadata.json".into());
    artifacts.json(
        "metadata.json",
        &json!({
            "task": cfg.task.name(),
            "model": cfg.model.name(),
            "config_sha256": hash,
            "seed": cfg.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": wall,
            "artifacts": files,
        }),
    )?;
    Ok(artifacts.files)
}

fn dispatch(cli: Cli) -> Result<()> {
    let (source, task, common) = match cli.command {
        Command::Presets { write } => {
            if let Some(dir) = &write {
                fs::create_dir_all(dir)?;
            }
            for name in presets::NAMES {
                let cfg = presets::get(name).expect("listed preset");
                println!("{name}\t{}\t{}", cfg.model.name(), cfg.task.name());
                if let Some(dir) = &write {
                    let mut text = serde_json::to_string_pretty(&cfg)?;
                    text.push('\n');
                    fs::write(dir.join(format!("{name}.json")), text)?;
                }
            }
            return Ok(());
        }
        Command::Run { file, common } => (Some(file), None, common),
        Command::Simulate(c) => (c.config.clone(), Some(TaskKind::Simulate), c),
        Command::FixedPoints(c) => (c.config.clone(), Some(TaskKind::FixedPoints), c),
        Command::Sweep(c) => (c.config.clone(), Some(TaskKind::Sweep), c),
        Command::Basin(c) => (c.config.clone(), Some(TaskKind::Basin), c),
        Command::Heatmap(c) => (c.config.clone(), Some(TaskKind::Heatmap), c),
        Command::Doe(c) => (c.config.clone(), Some(TaskKind::Doe), c),
        Command::Glm(c) => (c.config.clone(), Some(TaskKind::Glm), c),
    };
    let source = source.or(common.config.clone());
    let cfg = resolve_config(source.as_deref(), task, &common)?;
    if let Some(n) = common.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        // Fails only if a pool already exists, which keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = default_output(&cfg);
    let files = execute(&cfg, &out, common.svg)?;
    for f in files {
        println!("{}", out.join(f).display());
    }
    Ok(())
}

/// Parse `args`, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                error::EXIT_VALIDATION
            } else {
                error::EXIT_OK
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
