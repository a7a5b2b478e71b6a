//! Basin of attraction of Blue success over a grid of initial populations.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::delta_star;
use crate::error::{CoreError, Result};
use crate::models::{Model, ModelSpec};
use crate::params::ModelConfig;
use crate::solver::{ensemble, run_scenario, EnsembleCounts, Integrator, ScenarioSettings};

/// How initial phases are chosen in each population cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhasePolicy {
    /// `n_sim` scenarios with random phases per cell.
    Ensemble { n_sim: usize, seed: u64 },
    /// Reduced variants: every centroid difference on a cell-centred grid of
    /// `resolution` points over [−π, π).
    DeltaGrid { resolution: usize },
    /// Reduced variants: one scenario from the settled centroid differences
    /// at full coupling.
    AnalyticDelta,
}

impl PhasePolicy {
    pub fn default_for(model: &Model, seed: u64) -> Self {
        if model.variant.is_reduced() {
            PhasePolicy::AnalyticDelta
        } else {
            PhasePolicy::Ensemble { n_sim: 100, seed }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinSpec {
    /// Grid points per population; ignored for fixed populations.
    pub resolution: Vec<usize>,
    /// Populations held at a fixed initial value instead of gridded.
    pub fixed: Vec<Option<f64>>,
    pub phase_policy: PhasePolicy,
    #[serde(default)]
    pub scenario: ScenarioSettings,
}

impl BasinSpec {
    /// 51 points per gridded population, Green fixed at half capacity.
    pub fn default_for(model: &Model, seed: u64) -> Self {
        let np = model.n_populations();
        let mut fixed = vec![None; np];
        if np == 3 {
            fixed[2] = Some(0.5 * model.cfg.k3);
        }
        Self {
            resolution: vec![51; np],
            fixed,
            phase_policy: PhasePolicy::default_for(model, seed),
            scenario: ScenarioSettings::default(),
        }
    }

    pub fn with_resolution(mut self, n: usize) -> Self {
        self.resolution.iter_mut().for_each(|r| *r = n);
        self
    }

    fn validate(&self, model: &Model) -> Result<()> {
        let np = model.n_populations();
        if self.resolution.len() != np || self.fixed.len() != np {
            return Err(CoreError::Dimension {
                expected: np,
                got: self.resolution.len().min(self.fixed.len()),
            });
        }
        for i in 0..np {
            if self.fixed[i].is_none() && self.resolution[i] == 0 {
                return Err(CoreError::InvalidParameter(format!(
                    "population {} has zero resolution",
                    i + 1
                )));
            }
            if let Some(v) = self.fixed[i] {
                if !(0.0..=capacity(model, i)).contains(&v) {
                    return Err(CoreError::InvalidParameter(format!(
                        "fixed initial value {v} of population {} outside its box",
                        i + 1
                    )));
                }
            }
        }
        match self.phase_policy {
            PhasePolicy::Ensemble { n_sim: 0, .. } => {
                Err(CoreError::InvalidParameter("ensemble needs n_sim ≥ 1".into()))
            }
            PhasePolicy::DeltaGrid { resolution: 0 } => {
                Err(CoreError::InvalidParameter("delta grid needs resolution ≥ 1".into()))
            }
            PhasePolicy::DeltaGrid { .. } | PhasePolicy::AnalyticDelta if !model.variant.is_reduced() => Err(
                CoreError::InvalidParameter(format!("{} draws phases by ensemble only", model.variant)),
            ),
            _ => Ok(()),
        }
    }
}

fn capacity(model: &Model, i: usize) -> f64 {
    if model.variant.is_dimensional() {
        [model.cfg.k1, model.cfg.k2, model.cfg.k3][i]
    } else {
        1.0
    }
}

/// Cell-centred points `(i + ½) · hi / n`.
pub fn cell_centres(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinResult {
    /// Mean Blue-win fraction over successfully evaluated cells.
    pub value: f64,
    /// Axis points of the gridded populations.
    pub axes: Vec<Vec<f64>>,
    /// Indices of the gridded populations.
    pub gridded: Vec<usize>,
    /// Blue-win fraction per cell, row-major with the last gridded
    /// population varying fastest; NaN for failed cells.
    pub per_cell: Vec<f64>,
    pub n_evaluated: usize,
    pub n_failed: usize,
    /// Fraction of cells whose value differs from an axis neighbour.
    pub boundary_fraction: f64,
}

/// Settled centroid differences for `AnalyticDelta`.
pub fn analytic_deltas(model: &Model, settings: &ScenarioSettings) -> Result<Vec<f64>> {
    if model.n_populations() == 2 {
        let k = model.two_cluster().coeffs(1.0, 1.0);
        return Ok(vec![delta_star(k.c, k.s, model.cfg.mu).unwrap_or(0.0)]);
    }
    // No closed form with three clusters: relax the phase-only reduced flow
    // from synchrony for the reconnaissance period.
    let recon = model.phase_only();
    let mut y0 = vec![0.0; model.n_populations()];
    y0.extend([0.0, 0.0]);
    let horizon = settings.recon_t.max(1.0);
    let sol = Integrator::new(&settings.integrator).run_to(&recon, 0.0, &y0, horizon)?;
    Ok(sol.y_final[3..].iter().map(|&d| crate::models::wrap_angle(d)).collect())
}

fn delta_grid(n_deltas: usize, resolution: usize) -> Vec<Vec<f64>> {
    let axis = cell_centres(resolution, -PI, PI);
    let mut out = vec![Vec::new()];
    for _ in 0..n_deltas {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

fn cell_counts(
    model: &Model,
    spec: &BasinSpec,
    p0: &[f64],
    cell: u64,
    analytic: &Option<Vec<f64>>,
) -> Result<EnsembleCounts> {
    match spec.phase_policy {
        PhasePolicy::Ensemble { n_sim, seed } => ensemble(model, p0, n_sim, seed, cell, &spec.scenario),
        PhasePolicy::DeltaGrid { resolution } => {
            let mut counts = EnsembleCounts::default();
            for deltas in delta_grid(model.variant.n_deltas(), resolution) {
                let y0 = model.synchronized_state(p0, &deltas);
                counts.add(run_scenario(model, &y0, &spec.scenario, false)?.winner);
            }
            Ok(counts)
        }
        PhasePolicy::AnalyticDelta => {
            let y0 = model.synchronized_state(p0, analytic.as_deref().unwrap());
            let mut counts = EnsembleCounts::default();
            counts.add(run_scenario(model, &y0, &spec.scenario, false)?.winner);
            Ok(counts)
        }
    }
}

/// Estimate the basin of Blue success: the Blue-win fraction averaged
/// uniformly over the grid of initial populations.
pub fn estimate_basin(model: &Model, spec: &BasinSpec) -> Result<BasinResult> {
    spec.validate(model)?;
    let np = model.n_populations();
    let gridded: Vec<usize> = (0..np).filter(|&i| spec.fixed[i].is_none()).collect();
    let axes: Vec<Vec<f64>> = gridded
        .iter()
        .map(|&i| cell_centres(spec.resolution[i], 0.0, capacity(model, i)))
        .collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let n_cells: usize = shape.iter().product();
    let analytic = match spec.phase_policy {
        PhasePolicy::AnalyticDelta => Some(analytic_deltas(model, &spec.scenario)?),
        _ => None,
    };

    let results: Vec<Result<EnsembleCounts>> = (0..n_cells)
        .into_par_iter()
        .map(|cell| {
            let mut p0: Vec<f64> = spec.fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
            let mut rest = cell;
            for (d, &i) in gridded.iter().enumerate().rev() {
                p0[i] = axes[d][rest % shape[d]];
                rest /= shape[d];
            }
            cell_counts(model, spec, &p0, cell as u64, &analytic)
        })
        .collect();

    let mut per_cell = Vec::with_capacity(n_cells);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(c) => per_cell.push(c.blue_fraction()),
            Err(e) => {
                per_cell.push(f64::NAN);
                failures.push(e);
            }
        }
    }
    let n_failed = failures.len();
    if n_failed > 0 && 100 * n_failed >= n_cells {
        return Err(CoreError::BasinFailures {
            failed: n_failed,
            total: n_cells,
        });
    }
    let ok: Vec<f64> = per_cell.iter().copied().filter(|v| !v.is_nan()).collect();
    let value = ok.iter().sum::<f64>() / ok.len() as f64;
    Ok(BasinResult {
        value,
        boundary_fraction: boundary_fraction(&per_cell, &shape),
        axes,
        gridded,
        per_cell,
        n_evaluated: n_cells - n_failed,
        n_failed,
    })
}

fn boundary_fraction(values: &[f64], shape: &[usize]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let strides: Vec<usize> = (0..shape.len()).map(|d| shape[d + 1..].iter().product()).collect();
    let on_boundary = (0..n)
        .filter(|&c| {
            (0..shape.len()).any(|d| {
                let idx = (c / strides[d]) % shape[d];
                let mut nbrs = Vec::new();
                if idx > 0 {
                    nbrs.push(c - strides[d]);
                }
                if idx + 1 < shape[d] {
                    nbrs.push(c + strides[d]);
                }
                nbrs.into_iter().any(|o| values[o] != values[c])
            })
        })
        .count();
    on_boundary as f64 / n as f64
}

/// Basin values over a two-parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub x_param: String,
    pub y_param: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `values[iy][ix]`.
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    /// First row holds the x values after an empty corner cell, the first
    /// column the y values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for x in &self.x {
            out += &format!(",{x}");
        }
        out.push('\n');
        for (y, row) in self.y.iter().zip(&self.values) {
            out += &y.to_string();
            for v in row {
                out += &format!(",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Basin of Blue success for every pair of values of two parameters. The
/// model is rebuilt per pair, so network parameters may be swept too.
#[allow(clippy::too_many_arguments)]
pub fn basin_heatmap(
    model: &ModelSpec,
    cfg: &ModelConfig,
    x_param: &str,
    x_range: (f64, f64),
    nx: usize,
    y_param: &str,
    y_range: (f64, f64),
    ny: usize,
    spec: &BasinSpec,
) -> Result<Heatmap> {
    if x_param == y_param {
        return Err(CoreError::InvalidParameter(
            "heatmap needs two distinct parameters".into(),
        ));
    }
    cfg.get(x_param)?;
    cfg.get(y_param)?;
    let x = linspace(x_range.0, x_range.1, nx);
    let y = linspace(y_range.0, y_range.1, ny);
    let flat: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let mut c = cfg.clone();
            c.set(x_param, x[k % nx])?;
            c.set(y_param, y[k / nx])?;
            let m = model.build(&c)?;
            Ok(estimate_basin(&m, spec)?.value)
        })
        .collect::<Result<_>>()?;
    Ok(Heatmap {
        x_param: x_param.into(),
        y_param: y_param.into(),
        values: flat.chunks(nx).map(<[f64]>::to_vec).collect(),
        x,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Variant;
    use crate::solver::IntegratorSettings;

    fn quick(spec: BasinSpec) -> BasinSpec {
        BasinSpec {
            scenario: ScenarioSettings {
                integrator: IntegratorSettings {
                    t_end: 200.0,
                    ..Default::default()
                },
                recon_t: 10.0,
            },
            ..spec
        }
    }

    fn reduced(cfg: ModelConfig) -> Model {
        Model::reduced(Variant::SimpleReduced, cfg, None).unwrap()
    }

    #[test]
    fn toothless_blue_has_empty_basin() {
        let m = reduced(ModelConfig {
            beta1: 0.0,
            ..ModelConfig::simple_case_study()
        });
        let spec = quick(BasinSpec::default_for(&m, 0).with_resolution(5));
        let r = estimate_basin(&m, &spec).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.n_evaluated, 25);
    }

    #[test]
    fn dominant_blue_has_full_basin() {
        let m = reduced(ModelConfig {
            beta1: 10.0,
            ..ModelConfig::simple_case_study()
        });
        let spec = quick(BasinSpec::default_for(&m, 0).with_resolution(11));
        let r = estimate_basin(&m, &spec).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.boundary_fraction, 0.0);
    }

    #[test]
    fn single_cell_is_one_ensemble() {
        let m = reduced(ModelConfig {
            beta1: 3.0,
            ..ModelConfig::simple_case_study()
        });
        let mut spec = quick(BasinSpec::default_for(&m, 0).with_resolution(1));
        spec.phase_policy = PhasePolicy::Ensemble { n_sim: 12, seed: 4 };
        let r = estimate_basin(&m, &spec).unwrap();
        let c = ensemble(&m, &[0.5, 0.5], 12, 4, 0, &spec.scenario).unwrap();
        assert_eq!(r.value, c.blue_fraction());
        assert_eq!(r.per_cell.len(), 1);
    }

    #[test]
    fn delta_grid_policy() {
        let m = reduced(ModelConfig {
            beta1: 3.0,
            ..ModelConfig::simple_case_study()
        });
        let mut spec = quick(BasinSpec::default_for(&m, 0).with_resolution(3));
        spec.phase_policy = PhasePolicy::DeltaGrid { resolution: 4 };
        let r = estimate_basin(&m, &spec).unwrap();
        assert!(r.per_cell.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((r.value - r.per_cell.iter().sum::<f64>() / 9.0).abs() < 1e-15);
        assert_eq!(delta_grid(2, 3).len(), 9);
    }

    #[test]
    fn full_model_rejects_delta_policies() {
        let spec = ModelSpec::new(Variant::Simple, 1);
        let m = spec.build(&ModelConfig::simple_case_study()).unwrap();
        let mut b = BasinSpec::default_for(&m, 0);
        b.phase_policy = PhasePolicy::AnalyticDelta;
        assert!(estimate_basin(&m, &b).is_err());
    }

    #[test]
    fn heatmap_constant_when_parameters_are_inert() {
        // Green parameters do not enter the two-population model.
        let spec = ModelSpec::new(Variant::SimpleReduced, 0);
        let cfg = ModelConfig::simple_case_study();
        let m = spec.build(&cfg).unwrap();
        let b = quick(BasinSpec::default_for(&m, 0).with_resolution(4));
        let h = basin_heatmap(&spec, &cfg, "r3", (0.5, 2.0), 3, "x3", (0.1, 0.4), 2, &b).unwrap();
        let first = h.values[0][0];
        assert!(h
            .values
            .iter()
            .flatten()
            .all(|&v| v == first && (0.0..=1.0).contains(&v)));
        let csv = h.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with(",0.5,1.25,2\n"));
        assert!(basin_heatmap(&spec, &cfg, "r3", (0.0, 1.0), 2, "r3", (0.0, 1.0), 2, &b).is_err());
    }

    #[test]
    fn evaluation_order_does_not_matter() {
        let m = reduced(ModelConfig {
            beta1: 2.6,
            ..ModelConfig::simple_case_study()
        });
        let spec = quick(BasinSpec::default_for(&m, 0).with_resolution(7));
        let a = estimate_basin(&m, &spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_basin(&m, &spec).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.per_cell, b.per_cell);
    }

    #[test]
    fn cell_centres_are_interior() {
        assert_eq!(cell_centres(2, 0.0, 1.0), vec![0.25, 0.75]);
        assert_eq!(cell_centres(1, 0.0, 10.0), vec![5.0]);
    }
}
