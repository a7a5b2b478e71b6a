//! Task runners. Each writes its artifacts into the output directory and
//! returns their file names.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use dcomp_core::analysis::{fixed_points, stability_thresholds, sweep_bifurcation, sweep_csv, SweepSettings};
use dcomp_core::basin::{analytic_deltas, basin_heatmap, estimate_basin, Heatmap};
use dcomp_core::solver::{ensemble, random_phases, run_scenario};
use dcomp_core::{Model, Variant};
use dcomp_design::doe::{basin_evaluator, read_log, run_doe, write_log, DoeSettings};
use dcomp_design::stats::{deviance_anova, permutation_importance, read_table, write_coefficients};

use crate::config::{PhaseInit, RunConfig, TaskKind};
use crate::error::{CliError, Result};
use crate::svg;

pub struct Artifacts {
    pub dir: PathBuf,
    pub config_hash: String,
    pub files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, config_hash: &str) -> Self {
        Self {
            dir: dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            files: Vec::new(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.path(name), contents)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }
}

fn capacities(model: &Model) -> Vec<f64> {
    let c = &model.cfg;
    let caps = if model.variant.is_dimensional() {
        [c.k1, c.k2, c.k3]
    } else {
        [1.0; 3]
    };
    caps[..model.n_populations()].to_vec()
}

fn csv_row(values: impl IntoIterator<Item = String>) -> String {
    let mut s = values.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn bad(msg: String) -> CliError {
    CliError::Config(msg)
}

/// Task-specific validation that needs the model but runs nothing.
pub fn check(cfg: &RunConfig, model: &Model) -> Result<()> {
    let variant = model.variant;
    match cfg.task {
        TaskKind::Simulate => {
            let np = model.n_populations();
            if let Some(p) = &cfg.simulate.initial {
                if p.len() != np {
                    return Err(bad(format!("{} initial populations for {np} populations", p.len())));
                }
                if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(bad("initial populations must be finite and nonnegative".into()));
                }
            }
            match &cfg.simulate.phases {
                Some(PhaseInit::Synchronized { deltas }) if deltas.len() != variant.n_deltas() => {
                    Err(bad(format!("{} centroid differences for {variant}", deltas.len())))
                }
                Some(PhaseInit::Analytic) if !variant.is_reduced() => {
                    Err(bad(format!("analytic phases need a reduced variant, not {variant}")))
                }
                _ => Ok(()),
            }
        }
        TaskKind::FixedPoints | TaskKind::Sweep
            if !matches!(variant, Variant::SimpleReduced | Variant::Eco2Reduced) =>
        {
            Err(bad(format!(
                "{} supports simple-reduced and eco2-reduced, not {variant}",
                cfg.task.name()
            )))
        }
        TaskKind::Sweep => {
            let s = cfg.sweep.as_ref().expect("validated");
            cfg.params.get(&s.param)?;
            if s.n_points == 0 || !(s.range.0.is_finite() && s.range.1.is_finite()) {
                return Err(bad("sweep needs n_points > 0 and a finite range".into()));
            }
            Ok(())
        }
        TaskKind::Basin => check_basin(cfg, model),
        TaskKind::Heatmap => {
            let h = cfg.heatmap.as_ref().expect("validated");
            for a in [&h.x, &h.y] {
                cfg.params.get(&a.param)?;
                if a.n == 0 || !(a.lo.is_finite() && a.hi.is_finite()) {
                    return Err(bad(format!("heatmap axis {} needs n > 0 and a finite range", a.param)));
                }
            }
            check_basin(cfg, model)
        }
        TaskKind::Doe => {
            let d = cfg.doe.as_ref().expect("validated");
            if d.factors.is_empty() {
                return Err(bad("doe needs at least one factor".into()));
            }
            for f in &d.factors {
                cfg.params.get(&f.name)?;
                if !(f.lo.is_finite() && f.hi.is_finite() && f.lo <= f.hi) {
                    return Err(bad(format!("factor {} has range [{}, {}]", f.name, f.lo, f.hi)));
                }
            }
            if d.k_init < 2 || d.n_total < d.k_init || d.refit_every == 0 {
                return Err(bad("doe needs 2 <= k_init <= n_total and refit_every > 0".into()));
            }
            check_basin(cfg, model)
        }
        TaskKind::Glm => {
            let g = cfg.glm.as_ref().expect("validated");
            if !g.input.is_file() {
                return Err(bad(format!("glm input {} is not a readable file", g.input.display())));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn check_basin(cfg: &RunConfig, model: &Model) -> Result<()> {
    let spec = cfg.basin_spec(model);
    let np = model.n_populations();
    if spec.resolution.len() != np || spec.fixed.len() != np || spec.resolution.iter().any(|&n| n == 0) {
        return Err(bad(format!(
            "basin grid needs {np} positive resolutions and {np} fixed entries"
        )));
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, model: &Model, out: &mut Artifacts, svg: bool) -> Result<()> {
    match cfg.task {
        TaskKind::Simulate => simulate(cfg, model, out),
        TaskKind::FixedPoints => fixed_point_task(cfg, out),
        TaskKind::Sweep => sweep(cfg, out),
        TaskKind::Basin => basin(cfg, model, out),
        TaskKind::Heatmap => heatmap(cfg, model, out, svg),
        TaskKind::Doe => doe(cfg, model, out),
        TaskKind::Glm => glm(cfg, out),
    }
}

fn simulate(cfg: &RunConfig, model: &Model, out: &mut Artifacts) -> Result<()> {
    let np = model.n_populations();
    let p0 = match &cfg.simulate.initial {
        Some(p) => p.clone(),
        None => capacities(model).iter().map(|k| 0.5 * k).collect(),
    };
    let reduced = model.variant.is_reduced();
    let phases = cfg.simulate.phases.clone().unwrap_or(if reduced {
        PhaseInit::Analytic
    } else {
        PhaseInit::Random { member: 0 }
    });
    let y0 = match phases {
        PhaseInit::Random { member } => {
            let mut y = p0.clone();
            y.extend(random_phases(model, cfg.seed, 0, member));
            y
        }
        PhaseInit::Synchronized { deltas } => model.synchronized_state(&p0, &deltas),
        PhaseInit::Analytic => model.synchronized_state(&p0, &analytic_deltas(model, &cfg.solver)?),
    };

    let outcome = run_scenario(model, &y0, &cfg.solver, true)?;
    let traj = outcome.trajectory.as_ref().expect("recorded run");
    out.write("trajectory.csv", traj.to_csv(&model.labels()))?;
    if !reduced {
        // Populations, centroid differences and order parameters per sample.
        let mut header = vec!["t".to_string()];
        header.extend((1..=np).map(|i| format!("P{i}")));
        header.extend((1..np).map(|i| format!("Delta{i}")));
        header.extend((1..=np).map(|i| format!("O_S{i}")));
        header.extend((1..=np).map(|i| format!("O_T{i}")));
        let mut text = csv_row(header);
        for (t, y) in traj.t.iter().zip(&traj.y) {
            let r = model.reduce_state(y);
            let o = model.orders(y);
            let mut row = vec![t.to_string()];
            row.extend(r.iter().map(f64::to_string));
            row.extend(o.strategic[..np].iter().map(f64::to_string));
            row.extend(o.tactical[..np].iter().map(f64::to_string));
            text += &csv_row(row);
        }
        out.write("reduced.csv", text)?;
    }
    out.json(
        "outcome.json",
        &json!({
            "winner": outcome.winner,
            "t_event": outcome.t_event,
            "initial_populations": p0,
            "final_state": model.reduce_state(&outcome.final_state),
        }),
    )?;
    if let Some(n) = cfg.simulate.ensemble {
        let counts = ensemble(model, &p0, n, cfg.seed, 0, &cfg.solver)?;
        let total = counts.total().max(1) as f64;
        out.json(
            "ensemble.json",
            &json!({
                "n_sim": n,
                "blue": counts.blue,
                "red": counts.red,
                "stalemate": counts.stalemate,
                "blue_fraction": counts.blue as f64 / total,
                "red_fraction": counts.red as f64 / total,
            }),
        )?;
    }
    Ok(())
}

fn fixed_point_task(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let report = fixed_points(cfg.model, &cfg.params)?;
    let mut text = csv_row(["fp_label", "P1", "P2", "Delta1", "max_real_eig", "class", "residual"].map(String::from));
    for r in &report.records {
        text += &csv_row([
            r.label.clone(),
            r.state[0].to_string(),
            r.state[1].to_string(),
            r.state[2].to_string(),
            r.max_real_eig().to_string(),
            r.classification.name().to_string(),
            r.residual.to_string(),
        ]);
    }
    out.write("fixed_points.csv", text)?;
    out.json("fixed_points.json", &report)?;
    // The closed-form thresholds belong to the linearised model only.
    if let (Variant::SimpleReduced, Some(fp1)) = (cfg.model, report.get("FP1")) {
        out.json("thresholds.json", &stability_thresholds(&cfg.params, fp1.state[2]))?;
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let s = cfg.sweep.as_ref().expect("validated");
    let mut settings = SweepSettings::default();
    settings.integrator = cfg.solver.integrator.clone();
    settings.integrator.t_end = s.t_end;
    let points = sweep_bifurcation(cfg.model, &cfg.params, &s.param, s.range, s.n_points, &settings)?;
    out.write("sweep.csv", sweep_csv(&points))
}

fn basin(cfg: &RunConfig, model: &Model, out: &mut Artifacts) -> Result<()> {
    let spec = cfg.basin_spec(model);
    let res = estimate_basin(model, &spec)?;
    let mut header: Vec<String> = res.gridded.iter().map(|i| format!("P{}", i + 1)).collect();
    header.push("blue_fraction".into());
    let mut text = csv_row(header);
    let shape: Vec<usize> = res.axes.iter().map(Vec::len).collect();
    for (flat, v) in res.per_cell.iter().enumerate() {
        let mut idx = vec![0; shape.len()];
        let mut rem = flat;
        for d in (0..shape.len()).rev() {
            idx[d] = rem % shape[d];
            rem /= shape[d];
        }
        let mut row: Vec<String> = idx
            .iter()
            .enumerate()
            .map(|(d, &i)| res.axes[d][i].to_string())
            .collect();
        row.push(v.to_string());
        text += &csv_row(row);
    }
    out.write("basin_cells.csv", text)?;
    out.json(
        "basin.json",
        &json!({
            "value": res.value,
            "n_evaluated": res.n_evaluated,
            "n_failed": res.n_failed,
            "boundary_fraction": res.boundary_fraction,
            "spec": spec,
        }),
    )
}

fn heatmap(cfg: &RunConfig, model: &Model, out: &mut Artifacts, with_svg: bool) -> Result<()> {
    let h = cfg.heatmap.as_ref().expect("validated");
    let spec = cfg.basin_spec(model);
    let start = std::time::Instant::now();
    let map: Heatmap = basin_heatmap(
        &cfg.model_spec(),
        &cfg.params,
        &h.x.param,
        (h.x.lo, h.x.hi),
        h.x.n,
        &h.y.param,
        (h.y.lo, h.y.hi),
        h.y.n,
        &spec,
    )?;
    out.write("heatmap.csv", map.to_csv())?;
    out.json(
        "heatmap.json",
        &json!({
            "model": cfg.model.name(),
            "config_sha256": out.config_hash,
            "seed": cfg.seed,
            "resolution": [h.x.n, h.y.n],
            "basin_resolution": spec.resolution,
            "runtime_s": start.elapsed().as_secs_f64(),
            "heatmap": map,
        }),
    )?;
    if with_svg {
        out.write("heatmap.svg", svg::heatmap(&map))?;
    }
    Ok(())
}

fn doe(cfg: &RunConfig, model: &Model, out: &mut Artifacts) -> Result<()> {
    let d = cfg.doe.as_ref().expect("validated");
    let settings = DoeSettings {
        k_init: d.k_init,
        n_total: d.n_total,
        kappa: d.kappa,
        refit_every: d.refit_every,
        seed: cfg.seed,
    };
    let log = out.path("doe_log.csv");
    let prior = if d.resume && log.exists() {
        read_log(fs::File::open(&log)?, Some(&d.factors))?.1
    } else {
        Vec::new()
    };
    let spec = cfg.basin_spec(model);
    let model_spec = cfg.model_spec();
    let evaluate = basin_evaluator(&model_spec, &cfg.params, &d.factors, &spec);
    let tmp = out.path("doe_log.csv.tmp");
    let records = run_doe(&d.factors, &settings, evaluate, prior, |recs| {
        write_log(fs::File::create(&tmp)?, &d.factors, recs)?;
        fs::rename(&tmp, &log)?;
        Ok(())
    })?;
    out.files.push("doe_log.csv".into());
    let failed = records.iter().filter(|r| r.failed()).count();
    out.json(
        "doe.json",
        &json!({
            "n_records": records.len(),
            "n_failed": failed,
            "settings": settings,
        }),
    )
}

fn glm(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let g = cfg.glm.as_ref().expect("validated");
    let ignore: Vec<&str> = g.ignore.iter().map(String::as_str).collect();
    let file = fs::File::open(&g.input).map_err(|e| CliError::Config(format!("{}: {e}", g.input.display())))?;
    let table = read_table(file, &g.response, g.weight.as_deref(), &ignore)?;
    let fit = table.fit()?;
    let order = match &g.order {
        Some(names) => Some(
            names
                .iter()
                .map(|n| {
                    table
                        .names
                        .iter()
                        .position(|m| m == n)
                        .ok_or_else(|| CliError::Config(format!("order names unknown term {n}")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let anova = deviance_anova(&table, order.as_deref())?;
    let importance = permutation_importance(&fit, &table, g.n_repeats, cfg.seed);

    let mut buf = Vec::new();
    write_coefficients(&mut buf, &fit, &anova)?;
    out.write("coefficients.csv", buf)?;
    let mut text = csv_row(["term", "deviance", "residual_deviance", "percent"].map(String::from));
    for r in &anova.rows {
        text += &csv_row([
            r.term.clone(),
            r.deviance.to_string(),
            r.residual_deviance.to_string(),
            r.percent.to_string(),
        ]);
    }
    out.write("anova.csv", text)?;
    let mut text = csv_row(["feature", "importance"].map(String::from));
    for (n, v) in table.names.iter().zip(&importance) {
        text += &csv_row([n.clone(), v.to_string()]);
    }
    out.write("importance.csv", text)?;
    out.json(
        "glm.json",
        &json!({
            "n": table.n(),
            "dispersion": fit.dispersion,
            "null_deviance": fit.null_deviance,
            "residual_deviance": fit.residual_deviance,
            "converged": fit.converged,
            "n_iter": fit.n_iter,
        }),
    )
}
