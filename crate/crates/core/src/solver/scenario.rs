//! Simulation protocol: reconnaissance, competition until extinction, and
//! phase ensembles.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Event, Integrator, IntegratorSettings, Trajectory};
use crate::error::Result;
use crate::models::Model;
use crate::rng::{rng_for, STREAM_ENSEMBLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Winner {
    Blue,
    Red,
    Stalemate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub winner: Winner,
    /// Crossing time, or the horizon for a stalemate.
    pub t_event: f64,
    pub final_state: Vec<f64>,
    /// Reconnaissance nodes carry negative times, competition starts at 0.
    pub trajectory: Option<Trajectory>,
}

/// Integrator settings plus the reconnaissance length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSettings {
    pub integrator: IntegratorSettings,
    /// Phase-only period before competition. Skipped for reduced variants.
    pub recon_t: f64,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            recon_t: 50.0,
        }
    }
}

/// Run one scenario from `state0`: reconnaissance with frozen populations
/// and full coupling, then the coupled system until Blue or Red falls to the
/// extinction threshold or the horizon is reached.
pub fn run_scenario(
    model: &Model,
    state0: &[f64],
    settings: &ScenarioSettings,
    record: bool,
) -> Result<ScenarioOutcome> {
    let p_d = model.cfg.p_d;
    let mut y0 = state0.to_vec();
    let mut recon_traj = None;
    if settings.recon_t > 0.0 && !model.variant.is_reduced() {
        let recon = model.phase_only();
        let sol =
            Integrator::new(&settings.integrator)
                .recording(record)
                .run_to(&recon, -settings.recon_t, &y0, 0.0)?;
        y0 = sol.y_final;
        recon_traj = Some(sol.trajectory);
    }

    let (p1, p2) = (y0[0], y0[1]);
    if p1 <= p_d || p2 <= p_d {
        let winner = match (p1 <= p_d, p2 <= p_d) {
            (false, true) => Winner::Blue,
            (true, false) => Winner::Red,
            _ => Winner::Stalemate,
        };
        return Ok(ScenarioOutcome {
            winner,
            t_event: 0.0,
            final_state: y0,
            trajectory: record.then(|| recon_traj.unwrap_or_default()),
        });
    }

    let events = vec![Event::below(1, p_d), Event::below(0, p_d)];
    let sol = Integrator::new(&settings.integrator)
        .with_events(events)
        .recording(record)
        .run_to(model, 0.0, &y0, settings.integrator.t_end)?;
    let winner = match sol.event {
        Some((0, _)) => Winner::Blue,
        Some(_) => Winner::Red,
        None => Winner::Stalemate,
    };
    let trajectory = record.then(|| {
        let mut traj = recon_traj.unwrap_or_default();
        if !traj.is_empty() {
            traj.t.pop();
            traj.y.pop();
            traj.dy.pop();
        }
        traj.t.extend(sol.trajectory.t);
        traj.y.extend(sol.trajectory.y);
        traj.dy.extend(sol.trajectory.dy);
        traj
    });
    Ok(ScenarioOutcome {
        winner,
        t_event: sol.event.map_or(sol.t_final, |(_, t)| t),
        final_state: sol.y_final,
        trajectory,
    })
}

/// Integer outcome counts of a phase ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleCounts {
    pub blue: usize,
    pub red: usize,
    pub stalemate: usize,
}

impl EnsembleCounts {
    pub fn total(&self) -> usize {
        self.blue + self.red + self.stalemate
    }

    pub fn add(&mut self, winner: Winner) {
        match winner {
            Winner::Blue => self.blue += 1,
            Winner::Red => self.red += 1,
            Winner::Stalemate => self.stalemate += 1,
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.blue += other.blue;
        self.red += other.red;
        self.stalemate += other.stalemate;
        self
    }

    fn fraction(&self, k: usize) -> f64 {
        match self.total() {
            0 => 0.0,
            n => k as f64 / n as f64,
        }
    }

    pub fn blue_fraction(&self) -> f64 {
        self.fraction(self.blue)
    }

    pub fn red_fraction(&self) -> f64 {
        self.fraction(self.red)
    }

    pub fn stalemate_fraction(&self) -> f64 {
        self.fraction(self.stalemate)
    }
}

/// Random initial phases for member `member` of ensemble `cell`: every
/// node uniform on [0, 2π) for networked variants, every centroid
/// difference uniform on [−π, π) for reduced ones.
pub fn random_phases(model: &Model, seed: u64, cell: u64, member: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, &[STREAM_ENSEMBLE, cell, member]);
    match model.network() {
        Some(net) => (0..net.n_nodes()).map(|_| rng.random::<f64>() * TAU).collect(),
        None => (0..model.variant.n_deltas())
            .map(|_| rng.random::<f64>() * TAU - PI)
            .collect(),
    }
}

/// Run `n_sim` scenarios from populations `p0` with independent random
/// phases. Members run in parallel; the counts do not depend on scheduling.
pub fn ensemble(
    model: &Model,
    p0: &[f64],
    n_sim: usize,
    seed: u64,
    cell: u64,
    settings: &ScenarioSettings,
) -> Result<EnsembleCounts> {
    (0..n_sim as u64)
        .into_par_iter()
        .map(|member| {
            let mut y0 = p0.to_vec();
            y0.extend(random_phases(model, seed, cell, member));
            run_scenario(model, &y0, settings, false).map(|o| o.winner)
        })
        .try_fold(EnsembleCounts::default, |mut acc, w| {
            acc.add(w?);
            Ok(acc)
        })
        .try_reduce(EnsembleCounts::default, |a, b| Ok(a.merge(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NetworkSpec;
    use crate::models::Variant;
    use crate::params::ModelConfig;

    fn reduced(cfg: ModelConfig) -> Model {
        Model::reduced(Variant::SimpleReduced, cfg, None).unwrap()
    }

    fn short() -> ScenarioSettings {
        ScenarioSettings {
            integrator: IntegratorSettings {
                t_end: 200.0,
                ..Default::default()
            },
            recon_t: 10.0,
        }
    }

    #[test]
    fn overwhelming_blue_wins_with_monotone_red() {
        let cfg = ModelConfig {
            beta1: 50.0,
            beta2: 0.0,
            ..ModelConfig::simple_case_study()
        };
        let m = reduced(cfg);
        let out = run_scenario(&m, &[0.5, 0.5, 0.0], &short(), true).unwrap();
        assert_eq!(out.winner, Winner::Blue);
        assert!((out.final_state[1] - m.cfg.p_d).abs() < 1e-8);
        let traj = out.trajectory.unwrap();
        // Red falls monotonically once Blue's pressure dominates its growth.
        let red: Vec<f64> = traj.y.iter().map(|y| y[1]).collect();
        assert!(red.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn toothless_blue_never_wins() {
        let cfg = ModelConfig {
            beta1: 0.0,
            ..ModelConfig::simple_case_study()
        };
        let m = reduced(cfg);
        for i in 0..5 {
            for j in 0..5 {
                let p = [0.1 + 0.2 * i as f64, 0.1 + 0.2 * j as f64, 0.0];
                let out = run_scenario(&m, &p, &short(), true).unwrap();
                assert_ne!(out.winner, Winner::Blue);
                let min_red = out
                    .trajectory
                    .unwrap()
                    .y
                    .iter()
                    .map(|y| y[1])
                    .fold(f64::INFINITY, f64::min);
                assert!(min_red > m.cfg.p_d);
            }
        }
    }

    #[test]
    fn reconnaissance_is_idle_on_synchronized_phases() {
        let net = NetworkSpec::paper_usecase_two();
        // No frequency spread and no frustration: a synchronized state is a
        // fixed point of the phase-only flow.
        let mut cfg = ModelConfig::simple_case_study();
        cfg.phi = 0.0;
        cfg.mu = 0.0;
        let mut m = Model::build(Variant::Simple, cfg, &net, 3).unwrap();
        let omega = vec![0.3; m.network().unwrap().n_nodes()];
        m = Model::networked(
            m.variant,
            m.cfg.clone(),
            std::sync::Arc::new(m.network().unwrap().with_omega(omega).unwrap()),
        )
        .unwrap();
        let y0 = m.synchronized_state(&[0.6, 0.4], &[0.0]);
        let mut a = short();
        a.recon_t = 0.0;
        let mut b = short();
        b.recon_t = 50.0;
        let (oa, ob) = (
            run_scenario(&m, &y0, &a, false).unwrap(),
            run_scenario(&m, &y0, &b, false).unwrap(),
        );
        assert_eq!(oa.winner, ob.winner);
        assert!((oa.t_event - ob.t_event).abs() < 1e-6);
    }

    #[test]
    fn tighter_threshold_crosses_later() {
        let cfg = ModelConfig {
            beta1: 5.0,
            ..ModelConfig::simple_case_study()
        };
        let mut times = Vec::new();
        for p_d in [1e-2, 1e-3, 1e-4] {
            let m = reduced(ModelConfig { p_d, ..cfg.clone() });
            let out = run_scenario(&m, &[0.5, 0.5, 0.0], &short(), false).unwrap();
            assert_eq!(out.winner, Winner::Blue);
            times.push(out.t_event);
        }
        assert!(times.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn stalemate_at_horizon() {
        // Weak competition: both populations settle on an interior state.
        let cfg = ModelConfig {
            beta1: 0.1,
            beta2: 0.1,
            ..ModelConfig::simple_case_study()
        };
        let out = run_scenario(&reduced(cfg), &[0.5, 0.5, 0.0], &short(), false).unwrap();
        assert_eq!(out.winner, Winner::Stalemate);
        assert_eq!(out.t_event, 200.0);
    }

    #[test]
    fn ensemble_counts() {
        let m = reduced(ModelConfig {
            beta1: 3.0,
            ..ModelConfig::simple_case_study()
        });
        let s = short();
        let a = ensemble(&m, &[0.5, 0.5], 8, 11, 0, &s).unwrap();
        assert_eq!(a.total(), 8);
        assert_eq!(a, ensemble(&m, &[0.5, 0.5], 8, 11, 0, &s).unwrap());
        let sum = a.blue_fraction() + a.red_fraction() + a.stalemate_fraction();
        assert!((sum - 1.0).abs() < 1e-15);
        let one = ensemble(&m, &[0.5, 0.5], 1, 11, 0, &s).unwrap();
        assert_eq!(one, ensemble(&m, &[0.5, 0.5], 1, 11, 0, &s).unwrap());
    }

    #[test]
    fn phase_blind_model_has_no_ensemble_variance() {
        // With no coupling feedback on populations beyond the initiative and
        // zero reduction rates, phases never affect the outcome.
        let m = reduced(ModelConfig {
            beta1: 0.0,
            beta2: 0.0,
            ..ModelConfig::simple_case_study()
        });
        let c = ensemble(&m, &[0.3, 0.7], 16, 5, 0, &short()).unwrap();
        assert!(c.blue == 16 || c.red == 16 || c.stalemate == 16);
    }
}
