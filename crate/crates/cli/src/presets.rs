//! Shipped configurations.

use std::f64::consts::FRAC_PI_2;

use dcomp_core::graph::NetworkSpec;
use dcomp_core::phase::CentroidMethod;
use dcomp_core::solver::ScenarioSettings;
use dcomp_core::{ModelConfig, Variant};
use dcomp_design::doe::Factor;

use crate::config::{BasinTask, DoeTask, PhaseInit, PhaseSection, RunConfig, SimulateTask, TaskKind};

pub const NAMES: &[&str] = &[
    "paper-usecase",
    "simple",
    "feedback",
    "eco3",
    "eco2",
    "fig3a",
    "fig3b",
    "doe-eco3",
];

fn base(model: Variant, params: ModelConfig, task: TaskKind) -> RunConfig {
    RunConfig {
        model,
        params,
        network: None,
        centroid: CentroidMethod::default(),
        solver: ScenarioSettings::default(),
        seed: 0,
        output: None,
        task,
        simulate: SimulateTask::default(),
        sweep: None,
        basin: BasinTask::default(),
        heatmap: None,
        doe: None,
        glm: None,
    }
}

fn scenario(beta1: f64, phi: f64) -> RunConfig {
    let mut c = base(
        Variant::Eco3,
        ModelConfig {
            beta1,
            phi,
            ..ModelConfig::default()
        },
        TaskKind::Simulate,
    );
    c.simulate = SimulateTask {
        initial: Some(vec![5.0, 5.0, 5.0]),
        phases: Some(PhaseInit::Random { member: 0 }),
        ensemble: Some(20),
    };
    c
}

/// The nineteen parameters screened by the regression study, with ranges
/// chosen around the three-population case study.
pub fn campaign_factors() -> Vec<Factor> {
    let f = |name: &str, lo: f64, hi: f64| Factor {
        name: name.into(),
        lo,
        hi,
    };
    vec![
        f("beta1", 0.5, 20.0),
        f("beta2", 0.05, 1.0),
        f("tau", 0.1, 2.0),
        f("r1", 1.0, 5.0),
        f("r2", 1.0, 5.0),
        f("alpha", 0.5, 10.0),
        f("sigma1", 0.5, 5.0),
        f("sigma2", 0.5, 5.0),
        f("sigma3", 0.5, 5.0),
        f("xi12", 0.5, 1.5),
        f("xi13", 0.5, 1.5),
        f("xi21", 0.5, 1.5),
        f("xi23", 0.5, 1.5),
        f("xi31", 0.5, 1.5),
        f("xi32", 0.5, 1.5),
        f("phi", -FRAC_PI_2, FRAC_PI_2),
        f("psi", -FRAC_PI_2, FRAC_PI_2),
        f("mu", -1.0, 1.0),
        f("nu", -1.0, 1.0),
    ]
}

pub fn get(name: &str) -> Option<RunConfig> {
    Some(match name {
        "paper-usecase" => {
            let mut c = base(Variant::Eco3, ModelConfig::default(), TaskKind::Simulate);
            c.network = Some(NetworkSpec::paper_usecase());
            c.simulate.initial = Some(vec![5.0, 5.0, 5.0]);
            c
        }
        "simple" => {
            let mut c = base(
                Variant::SimpleReduced,
                ModelConfig::simple_case_study(),
                TaskKind::Basin,
            );
            c.basin.resolution = Some(51);
            c.basin.phases = Some(PhaseSection::AnalyticDelta);
            c
        }
        "feedback" => {
            let mut c = base(Variant::Feedback, ModelConfig::simple_case_study(), TaskKind::Simulate);
            c.simulate.initial = Some(vec![0.5, 0.5]);
            c
        }
        "eco3" => {
            let mut c = base(Variant::Eco3Reduced, ModelConfig::default(), TaskKind::Basin);
            c.basin.resolution = Some(21);
            c
        }
        "eco2" => base(
            Variant::Eco2Reduced,
            ModelConfig::eco2_case_study(),
            TaskKind::FixedPoints,
        ),
        "fig3a" => scenario(1.5, -FRAC_PI_2),
        "fig3b" => scenario(5.0, FRAC_PI_2),
        "doe-eco3" => {
            let mut c = base(Variant::Eco3, ModelConfig::default(), TaskKind::Doe);
            c.basin = BasinTask {
                resolution: Some(5),
                fixed: None,
                phases: Some(PhaseSection::Ensemble { n_sim: 4 }),
            };
            c.doe = Some(DoeTask {
                factors: campaign_factors(),
                k_init: 129,
                n_total: 200,
                kappa: dcomp_design::doe::DEFAULT_KAPPA,
                refit_every: 10,
                resume: true,
            });
            c
        }
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        assert!(NAMES.len() >= 5);
        for name in NAMES {
            let cfg = get(name).unwrap();
            let doc = serde_json::to_value(&cfg).unwrap();
            let back = crate::config::resolve(doc, &[]).unwrap();
            assert_eq!(back, cfg, "{name}");
            back.build_model().unwrap();
        }
        assert!(get("nope").is_none());
    }

    #[test]
    fn linearised_case_study_values() {
        let p = get("simple").unwrap().params;
        assert_eq!(
            (p.gamma1, p.gamma2, p.psi, p.beta2, p.r1, p.r2),
            (1.0, 1.0, 0.0, 2.0, 3.0, 2.5)
        );
    }

    #[test]
    fn scenario_values() {
        let a = get("fig3a").unwrap().params;
        let b = get("fig3b").unwrap().params;
        assert_eq!((a.beta1, a.phi), (1.5, -FRAC_PI_2));
        assert_eq!((b.beta1, b.phi), (5.0, FRAC_PI_2));
    }

    #[test]
    fn campaign_factors_are_model_parameters() {
        let cfg = ModelConfig::default();
        let fs = campaign_factors();
        assert_eq!(fs.len(), 19);
        assert!(fs.iter().all(|f| cfg.get(&f.name).is_ok() && f.lo < f.hi));
    }
}
