//! Run configuration: one JSON document describing the model, the solver,
//! the task and its options.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use dcomp_core::basin::{BasinSpec, PhasePolicy};
use dcomp_core::graph::NetworkSpec;
use dcomp_core::params::PARAM_NAMES;
use dcomp_core::phase::CentroidMethod;
use dcomp_core::solver::ScenarioSettings;
use dcomp_core::{Model, ModelConfig, ModelSpec, Variant};
use dcomp_design::doe::Factor;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Simulate,
    FixedPoints,
    Sweep,
    Basin,
    Heatmap,
    Doe,
    Glm,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Simulate => "simulate",
            TaskKind::FixedPoints => "fixed-points",
            TaskKind::Sweep => "sweep",
            TaskKind::Basin => "basin",
            TaskKind::Heatmap => "heatmap",
            TaskKind::Doe => "doe",
            TaskKind::Glm => "glm",
        }
    }
}

/// Initial phases of a single simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseInit {
    /// Uniform random phases from ensemble member `member` of the master seed.
    Random {
        #[serde(default)]
        member: u64,
    },
    /// Every population internally synchronized with the given centroid
    /// differences.
    Synchronized { deltas: Vec<f64> },
    /// Reduced variants: the settled centroid differences at full coupling.
    Analytic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateTask {
    /// Initial populations; half capacity when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Random phases for networked variants, analytic ones for reduced
    /// variants, when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseInit>,
    /// Also run a random-phase ensemble of this size from the same
    /// populations and report the outcome counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTask {
    pub param: String,
    pub range: (f64, f64),
    pub n_points: usize,
    /// Horizon of the attractor classification run.
    #[serde(default = "default_sweep_t_end")]
    pub t_end: f64,
}

fn default_sweep_t_end() -> f64 {
    500.0
}

/// Phase policy without its seed; ensembles draw from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseSection {
    Ensemble { n_sim: usize },
    DeltaGrid { resolution: usize },
    AnalyticDelta,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinTask {
    /// Grid points per gridded population (default 51).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Populations held fixed (default: Green at half capacity).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<Option<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapTask {
    pub x: Axis,
    pub y: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoeTask {
    pub factors: Vec<Factor>,
    pub k_init: usize,
    pub n_total: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_refit")]
    pub refit_every: usize,
    /// Continue from an existing log in the output directory.
    #[serde(default = "default_true")]
    pub resume: bool,
}

fn default_kappa() -> f64 {
    dcomp_design::doe::DEFAULT_KAPPA
}

fn default_refit() -> usize {
    10
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlmTask {
    /// CSV table, e.g. a design log; relative paths resolve against the
    /// working directory.
    pub input: PathBuf,
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default = "default_ignore")]
    pub ignore: Vec<String>,
    /// Term order of the sequential deviance table; table order when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    #[serde(default = "default_repeats")]
    pub n_repeats: usize,
}

fn default_response() -> String {
    "basin".into()
}

fn default_ignore() -> Vec<String> {
    vec!["iter".into(), "source".into(), "objective".into()]
}

fn default_repeats() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Variant,
    #[serde(default)]
    pub params: ModelConfig,
    /// Graphs and links; the variant's default network when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    #[serde(default)]
    pub centroid: CentroidMethod,
    #[serde(default)]
    pub solver: ScenarioSettings,
    /// Master seed for graphs, frequencies, phases and designs.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub task: TaskKind,
    #[serde(default)]
    pub simulate: SimulateTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTask>,
    #[serde(default)]
    pub basin: BasinTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<HeatmapTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doe: Option<DoeTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glm: Option<GlmTask>,
}

impl RunConfig {
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            variant: self.model,
            network: self.network.clone().unwrap_or_else(|| self.model.default_network()),
            network_seed: self.seed,
            centroid: self.centroid,
        }
    }

    pub fn build_model(&self) -> Result<Model> {
        self.params.validate()?;
        Ok(self.model_spec().build(&self.params)?)
    }

    pub fn basin_spec(&self, model: &Model) -> BasinSpec {
        let mut spec = BasinSpec::default_for(model, self.seed);
        if let Some(n) = self.basin.resolution {
            spec = spec.with_resolution(n);
        }
        if let Some(f) = &self.basin.fixed {
            spec.fixed = f.clone();
        }
        if let Some(p) = self.basin.phases {
            spec.phase_policy = match p {
                PhaseSection::Ensemble { n_sim } => PhasePolicy::Ensemble { n_sim, seed: self.seed },
                PhaseSection::DeltaGrid { resolution } => PhasePolicy::DeltaGrid { resolution },
                PhaseSection::AnalyticDelta => PhasePolicy::AnalyticDelta,
            };
        }
        spec.scenario = self.solver.clone();
        spec
    }

    /// Checks that do not need the model: task sections and solver settings.
    pub fn validate(&self) -> Result<()> {
        self.solver
            .integrator
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.solver.recon_t >= 0.0 && self.solver.recon_t.is_finite()) {
            return Err(CliError::Config("solver.recon_t must be finite and nonnegative".into()));
        }
        let missing = |s: &str| CliError::Config(format!("task {} needs a `{s}` section", self.task.name()));
        match self.task {
            TaskKind::Sweep if self.sweep.is_none() => Err(missing("sweep")),
            TaskKind::Heatmap if self.heatmap.is_none() => Err(missing("heatmap")),
            TaskKind::Doe if self.doe.is_none() => Err(missing("doe")),
            TaskKind::Glm if self.glm.is_none() => Err(missing("glm")),
            _ => Ok(()),
        }
    }
}

/// Parse `key=value`. A bare model parameter name is shorthand for
/// `params.<name>`; the value is read as JSON, falling back to a string.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value)> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {s:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override {s:?} has an empty key")));
    }
    let mut path: Vec<String> = key.split('.').map(str::to_string).collect();
    if path.len() == 1 && PARAM_NAMES.contains(&key) {
        path.insert(0, "params".into());
    }
    let value = serde_json::from_str(value.trim()).unwrap_or_else(|_| Value::String(value.trim().to_string()));
    Ok((path, value))
}

/// Set `path` in a JSON tree, creating intermediate objects.
pub fn apply_override(root: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = root;
    for (i, key) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override path {} crosses a non-object", path[..i].join("."))))?;
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        node = obj
            .entry(key.clone())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parse a configuration document and apply overrides.
pub fn resolve(doc: Value, overrides: &[String]) -> Result<RunConfig> {
    let mut doc = doc;
    for o in overrides {
        let (path, value) = parse_override(o)?;
        apply_override(&mut doc, &path, value)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Load a configuration from a file, or from a shipped preset when `source`
/// names one (with or without a `.json` suffix) and no such file exists.
pub fn load(source: &str) -> Result<Value> {
    let path = Path::new(source);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{source}: {e}")));
    }
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.trim_end_matches(".json"))
        .unwrap_or(source);
    crate::presets::get(name)
        .map(|c| serde_json::to_value(c).expect("presets serialize"))
        .ok_or_else(|| CliError::Config(format!("{source}: no such file or preset")))
}
