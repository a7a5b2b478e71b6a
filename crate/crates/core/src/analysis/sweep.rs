//! One-parameter sweeps: fixed points, their stability and the attractor
//! reached from a standard start.

use rayon::prelude::*;
use serde::Serialize;

use super::{delta_star, eco2_fixed_points, simple_fixed_points, FixedPointReport};
use crate::error::{CoreError, Result};
use crate::models::{wrap_angle, Model, Variant};
use crate::params::ModelConfig;
use crate::solver::{Integrator, IntegratorSettings, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attractor {
    FixedPoint,
    LimitCycle,
    Extinction,
}

impl Attractor {
    pub fn name(self) -> &'static str {
        match self {
            Attractor::FixedPoint => "fixed-point",
            Attractor::LimitCycle => "limit-cycle",
            Attractor::Extinction => "extinction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub fixed_points: FixedPointReport,
    pub attractor: Attractor,
    /// Reduced state at the end of the classification run.
    pub terminal: Vec<f64>,
}

/// Horizon and start of the attractor classification run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub integrator: IntegratorSettings,
    /// Initial populations; `Δ(0)` is the centroid equilibrium at full
    /// coupling, or 0 when there is none.
    pub start: Vec<f64>,
    /// Trailing fraction of the run inspected for oscillations.
    pub window: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings {
                t_end: 500.0,
                ..Default::default()
            },
            start: vec![0.5, 0.5],
            window: 0.2,
        }
    }
}

/// Fixed points of a reduced two-population variant.
pub fn fixed_points(variant: Variant, cfg: &ModelConfig) -> Result<FixedPointReport> {
    match variant {
        Variant::SimpleReduced => simple_fixed_points(cfg),
        Variant::Eco2Reduced => eco2_fixed_points(cfg),
        other => Err(CoreError::InvalidParameter(format!(
            "fixed points are available for simple-reduced and eco2-reduced, not {other}"
        ))),
    }
}

/// Period of `x` (uniformly sampled with spacing `dt`) from its
/// autocorrelation: the first local maximum after the first zero crossing,
/// required to exceed 0.5.
pub fn autocorrelation_period(x: &[f64], dt: f64) -> Option<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var: f64 = c.iter().map(|v| v * v).sum();
    if var == 0.0 {
        return None;
    }
    let ac = |lag: usize| c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / var;
    let max_lag = n / 2;
    let acs: Vec<f64> = (0..max_lag).map(ac).collect();
    let zero = acs.iter().position(|&v| v < 0.0)?;
    (zero + 1..max_lag.saturating_sub(1))
        .find(|&k| acs[k] > acs[k - 1] && acs[k] >= acs[k + 1] && acs[k] > 0.5)
        .map(|k| k as f64 * dt)
}

/// Classify the long-time behaviour of a reduced trajectory.
pub fn classify_attractor(traj: &Trajectory, p_d: f64, window: f64) -> Attractor {
    if traj.y.iter().any(|y| y[0] < p_d || y[1] < p_d) {
        return Attractor::Extinction;
    }
    let (t0, t1) = (traj.t[0], *traj.t.last().unwrap());
    let start = t1 - window * (t1 - t0);
    let samples = 2000;
    let dt = (t1 - start) / samples as f64;
    let states: Vec<Vec<f64>> = (0..=samples).map(|i| traj.sample(start + i as f64 * dt)).collect();
    let p2: Vec<f64> = states.iter().map(|y| y[1]).collect();
    let (lo, hi) = p2
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo > 1e-3 && autocorrelation_period(&p2, dt).is_some() {
        return Attractor::LimitCycle;
    }
    let drift = (states.last().unwrap()[2] - states[0][2]).abs();
    if drift > std::f64::consts::PI {
        return Attractor::LimitCycle;
    }
    Attractor::FixedPoint
}

fn sweep_point(
    variant: Variant,
    cfg: &ModelConfig,
    settings: &SweepSettings,
) -> Result<(FixedPointReport, Attractor, Vec<f64>)> {
    let report = fixed_points(variant, cfg)?;
    let model = Model::reduced(variant, cfg.clone(), None)?;
    let k = model.two_cluster().coeffs(1.0, 1.0);
    let d0 = delta_star(k.c, k.s, cfg.mu).unwrap_or(0.0);
    let mut y0 = settings.start.clone();
    y0.push(d0);
    let sol = Integrator::new(&settings.integrator)
        .recording(true)
        .run(&model, 0.0, &y0)?;
    let attractor = classify_attractor(&sol.trajectory, cfg.p_d, settings.window);
    let mut terminal = sol.y_final;
    terminal[2] = wrap_angle(terminal[2]);
    Ok((report, attractor, terminal))
}

/// Sweep `param` over `n_points` evenly spaced values in `range`.
pub fn sweep_bifurcation(
    variant: Variant,
    cfg: &ModelConfig,
    param: &str,
    range: (f64, f64),
    n_points: usize,
    settings: &SweepSettings,
) -> Result<Vec<SweepPoint>> {
    cfg.get(param)?;
    if n_points == 0 {
        return Err(CoreError::InvalidParameter("sweep needs at least one point".into()));
    }
    let values: Vec<f64> = if n_points == 1 {
        vec![range.0]
    } else {
        (0..n_points)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n_points - 1) as f64)
            .collect()
    };
    values
        .into_par_iter()
        .map(|value| {
            let mut c = cfg.clone();
            c.set(param, value)?;
            let (fixed_points, attractor, terminal) = sweep_point(variant, &c, settings)?;
            Ok(SweepPoint {
                value,
                fixed_points,
                attractor,
                terminal,
            })
        })
        .collect()
}

/// Sweep table with header `param,fp_label,P1,P2,Delta1,max_real_eig,class`.
/// Each grid value contributes one row per fixed point and one
/// `attractor` row holding the terminal state of the classification run.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("param,fp_label,P1,P2,Delta1,max_real_eig,class\n");
    for p in points {
        for r in &p.fixed_points.records {
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                p.value,
                r.label,
                r.state[0],
                r.state[1],
                r.state[2],
                r.max_real_eig(),
                r.classification.name()
            );
        }
        out += &format!(
            "{},attractor,{},{},{},,{}\n",
            p.value,
            p.terminal[0],
            p.terminal[1],
            p.terminal[2],
            p.attractor.name()
        );
    }
    out
}
