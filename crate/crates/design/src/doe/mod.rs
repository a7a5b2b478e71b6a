//! Adaptive exploration of basin values: a nearly orthogonal Latin hypercube
//! start followed by Bayesian optimization of a stratification objective
//! that rewards under-sampled response values.

pub mod bo;
pub mod gp;
pub mod kde;
pub mod lhs;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dcomp_core::basin::{estimate_basin, BasinSpec};
use dcomp_core::{ModelConfig, ModelSpec};

pub use bo::{bo_step, DEFAULT_KAPPA};
pub use gp::{optimize_hyper, Gp, Hyper};
pub use kde::{objective, Bandwidth, Kde};
pub use lhs::{build_design, DesignMatrix};

use crate::error::{DesignError, Result};

/// A model parameter varied by the design, with its range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Nolh,
    Acquisition,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Nolh => "nolh",
            Source::Acquisition => "acquisition",
        }
    }
}

/// One evaluated design point. `y` and `z` are `None` when the evaluation
/// failed; such records are kept in the log but never used for fitting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRecord {
    pub iteration: usize,
    pub source: Source,
    pub x: Vec<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
}

impl DesignRecord {
    pub fn failed(&self) -> bool {
        self.y.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoeSettings {
    pub k_init: usize,
    pub n_total: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Acquisitions between marginal-likelihood refits.
    #[serde(default = "default_refit")]
    pub refit_every: usize,
    pub seed: u64,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_refit() -> usize {
    10
}

/// Recompute every objective value from the current successful responses.
fn rescore(records: &mut [DesignRecord]) {
    let ys: Vec<f64> = records.iter().filter_map(|r| r.y).collect();
    let mut zs = objective(&ys).into_iter();
    for r in records.iter_mut() {
        r.z = r.y.map(|_| zs.next().expect("one score per response"));
    }
}

/// Surrogate training data from the records of iterations before `cutoff`,
/// scored as they were at that point.
fn training(records: &[DesignRecord], cutoff: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let ok: Vec<&DesignRecord> = records.iter().filter(|r| r.iteration < cutoff && !r.failed()).collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.y.unwrap()).collect();
    (ok.iter().map(|r| r.x.clone()).collect(), objective(&ys))
}

fn evaluate_checked<F>(evaluate: &F, x: &[f64]) -> Option<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    match evaluate(x) {
        Ok(y) if (0.0..=1.0).contains(&y) => Some(y),
        _ => None,
    }
}

/// Run the design loop until `n_total` points have been evaluated.
///
/// `prior` holds records from an interrupted run of the same factors and
/// settings (see [`read_log`]); the loop picks up after them and reproduces
/// the uninterrupted run exactly. `on_iteration` sees the full record set
/// after the initial batch and after every acquisition.
pub fn run_doe<F, C>(
    factors: &[Factor],
    settings: &DoeSettings,
    evaluate: F,
    prior: Vec<DesignRecord>,
    mut on_iteration: C,
) -> Result<Vec<DesignRecord>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    C: FnMut(&[DesignRecord]) -> Result<()>,
{
    let d = factors.len();
    let &DoeSettings {
        k_init,
        n_total,
        kappa,
        refit_every,
        seed,
    } = settings;
    if n_total < k_init || k_init == 0 {
        return Err(DesignError::Invalid(format!(
            "need 1 ≤ k_init ≤ n_total, got {k_init} and {n_total}"
        )));
    }
    if refit_every == 0 {
        return Err(DesignError::Invalid("refit_every must be positive".into()));
    }
    let ranges: Vec<(f64, f64)> = factors.iter().map(|f| (f.lo, f.hi)).collect();
    let design = build_design(d, k_init, &ranges, seed)?;

    let mut records = prior;
    if records.len() > n_total {
        return Err(DesignError::Log(format!(
            "log holds {} records, more than n_total = {n_total}",
            records.len()
        )));
    }
    for (i, r) in records.iter().enumerate() {
        let consistent = r.iteration == i
            && r.x.len() == d
            && (i >= k_init && r.source == Source::Acquisition
                || i < k_init && r.source == Source::Nolh && r.x == design.points[i]);
        if !consistent {
            return Err(DesignError::Log(format!(
                "record {i} does not belong to this design (seed or factors differ)"
            )));
        }
    }

    if records.len() < k_init {
        let start = records.len();
        let ys: Vec<Option<f64>> = design.points[start..]
            .par_iter()
            .map(|x| evaluate_checked(&evaluate, x))
            .collect();
        for (i, y) in ys.into_iter().enumerate() {
            records.push(DesignRecord {
                iteration: start + i,
                source: Source::Nolh,
                x: design.points[start + i].clone(),
                y,
                z: None,
            });
        }
        rescore(&mut records);
        on_iteration(&records)?;
    } else {
        rescore(&mut records);
    }

    let mut hyper: Option<Hyper> = None;
    while records.len() < n_total {
        let it = records.len();
        let step = it - k_init;
        let last_refit = step - step % refit_every;
        if hyper.is_none() || step % refit_every == 0 {
            let (xs, zs) = training(&records, k_init + last_refit);
            let units: Vec<Vec<f64>> = xs.iter().map(|x| bo::to_unit(x, &ranges)).collect();
            hyper = Some(optimize_hyper(&units, &zs));
        }
        let (xs, zs) = training(&records, it);
        let x = bo_step(&xs, &zs, &ranges, hyper.as_ref().unwrap(), kappa, seed, it as u64)?;
        let y = evaluate_checked(&evaluate, &x);
        records.push(DesignRecord {
            iteration: it,
            source: Source::Acquisition,
            x,
            y,
            z: None,
        });
        rescore(&mut records);
        on_iteration(&records)?;
    }
    Ok(records)
}

/// Evaluator mapping a factor point to the basin value of the model built
/// from `template` with those parameters.
pub fn basin_evaluator<'a>(
    spec: &'a ModelSpec,
    template: &'a ModelConfig,
    factors: &'a [Factor],
    basin: &'a BasinSpec,
) -> impl Fn(&[f64]) -> Result<f64> + Sync + 'a {
    move |x: &[f64]| {
        let mut cfg = template.clone();
        for (f, &v) in factors.iter().zip(x) {
            cfg.set(&f.name, v)?;
        }
        cfg.validate()?;
        let model = spec.build(&cfg)?;
        Ok(estimate_basin(&model, basin)?.value)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Write records as `iter,source,<factor names>,basin,objective`; failed
/// evaluations leave the last two fields empty.
pub fn write_log<W: Write>(w: W, factors: &[Factor], records: &[DesignRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["iter".to_string(), "source".to_string()];
    header.extend(factors.iter().map(|f| f.name.clone()));
    header.extend(["basin".to_string(), "objective".to_string()]);
    out.write_record(&header).map_err(|e| DesignError::Log(e.to_string()))?;
    for r in records {
        let mut row = vec![r.iteration.to_string(), r.source.name().to_string()];
        row.extend(r.x.iter().map(|v| v.to_string()));
        row.push(fmt_opt(r.y));
        row.push(fmt_opt(r.z));
        out.write_record(&row).map_err(|e| DesignError::Log(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

fn parse_f64(s: &str, what: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| DesignError::Log(format!("line {line}: bad {what} {s:?}")))
}

/// Parse a log written by [`write_log`]. With `factors` given, the header
/// must name exactly those factors in order.
pub fn read_log<R: Read>(r: R, factors: Option<&[Factor]>) -> Result<(Vec<String>, Vec<DesignRecord>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DesignError::Log(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let n = header.len();
    if n < 4 || header[0] != "iter" || header[1] != "source" || header[n - 2] != "basin" || header[n - 1] != "objective"
    {
        return Err(DesignError::Log(
            "header must be iter,source,<factors>,basin,objective".into(),
        ));
    }
    let names: Vec<String> = header[2..n - 2].to_vec();
    if let Some(fs) = factors {
        if fs.iter().map(|f| &f.name).ne(names.iter()) {
            return Err(DesignError::Log(format!(
                "log factors {names:?} differ from the configured ones"
            )));
        }
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| DesignError::Log(e.to_string()))?;
        let line = i + 2;
        if row.len() != n {
            return Err(DesignError::Log(format!(
                "line {line}: expected {n} fields, found {}",
                row.len()
            )));
        }
        let iteration = row[0]
            .trim()
            .parse()
            .map_err(|_| DesignError::Log(format!("line {line}: bad iteration {:?}", &row[0])))?;
        let source = match row[1].trim() {
            "nolh" => Source::Nolh,
            "acquisition" => Source::Acquisition,
            s => return Err(DesignError::Log(format!("line {line}: unknown source {s:?}"))),
        };
        let x = (2..n - 2)
            .map(|j| parse_f64(&row[j], "factor value", line))
            .collect::<Result<_>>()?;
        let opt = |s: &str, what| {
            if s.trim().is_empty() {
                Ok(None)
            } else {
                parse_f64(s, what, line).map(Some)
            }
        };
        records.push(DesignRecord {
            iteration,
            source,
            x,
            y: opt(&row[n - 2], "basin")?,
            z: opt(&row[n - 1], "objective")?,
        });
    }
    Ok((names, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors() -> Vec<Factor> {
        vec![
            Factor {
                name: "a".into(),
                lo: 0.0,
                hi: 1.0,
            },
            Factor {
                name: "b".into(),
                lo: -1.0,
                hi: 1.0,
            },
        ]
    }

    fn g(x: &[f64]) -> Result<f64> {
        Ok((x[0] * x[0] * (0.5 + 0.5 * x[1])).clamp(0.0, 1.0))
    }

    fn settings(k_init: usize, n_total: usize) -> DoeSettings {
        DoeSettings {
            k_init,
            n_total,
            kappa: DEFAULT_KAPPA,
            refit_every: 10,
            seed: 5,
        }
    }

    #[test]
    fn pure_design_study() {
        let recs = run_doe(&factors(), &settings(9, 9), g, vec![], |_| Ok(())).unwrap();
        assert_eq!(recs.len(), 9);
        assert!(recs.iter().all(|r| r.source == Source::Nolh));
    }

    #[test]
    fn scores_track_all_responses() {
        let mut calls = 0;
        let recs = run_doe(&factors(), &settings(6, 14), g, vec![], |rs| {
            calls += 1;
            let ys: Vec<f64> = rs.iter().filter_map(|r| r.y).collect();
            let zs: Vec<f64> = rs.iter().filter_map(|r| r.z).collect();
            assert_eq!(zs, objective(&ys));
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 9);
        assert_eq!(recs.iter().filter(|r| r.source == Source::Acquisition).count(), 8);
    }

    #[test]
    fn failures_are_flagged_and_skipped() {
        let flaky = |x: &[f64]| {
            if x[0] > 0.6 {
                Err(DesignError::Invalid("boom".into()))
            } else {
                g(x)
            }
        };
        let recs = run_doe(&factors(), &settings(8, 12), flaky, vec![], |_| Ok(())).unwrap();
        assert_eq!(recs.len(), 12);
        let failed = recs.iter().filter(|r| r.failed()).count();
        assert!(failed > 0);
        assert_eq!(recs.iter().filter(|r| !r.failed()).count(), 12 - failed);
        assert!(recs.iter().filter(|r| r.failed()).all(|r| r.z.is_none()));
    }

    #[test]
    fn deterministic_and_resumable() {
        let fs = factors();
        let s = settings(6, 25);
        let full = run_doe(&fs, &s, g, vec![], |_| Ok(())).unwrap();
        assert_eq!(full, run_doe(&fs, &s, g, vec![], |_| Ok(())).unwrap());

        for cut in [3, 6, 13, 16, 24] {
            let mut buf = Vec::new();
            write_log(&mut buf, &fs, &full[..cut]).unwrap();
            let (names, prior) = read_log(buf.as_slice(), Some(&fs)).unwrap();
            assert_eq!(names, vec!["a", "b"]);
            let resumed = run_doe(&fs, &s, g, prior, |_| Ok(())).unwrap();
            assert_eq!(resumed, full, "resume after {cut}");
        }
    }

    #[test]
    fn log_round_trip_with_failures() {
        let fs = factors();
        let recs = vec![
            DesignRecord {
                iteration: 0,
                source: Source::Nolh,
                x: vec![0.1, -0.3],
                y: Some(0.25),
                z: Some(1.0),
            },
            DesignRecord {
                iteration: 1,
                source: Source::Acquisition,
                x: vec![1.0 / 3.0, 0.7],
                y: None,
                z: None,
            },
        ];
        let mut buf = Vec::new();
        write_log(&mut buf, &fs, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iter,source,a,b,basin,objective\n"));
        assert_eq!(read_log(buf.as_slice(), Some(&fs)).unwrap().1, recs);
    }

    #[test]
    fn foreign_log_rejected() {
        let fs = factors();
        let full = run_doe(&fs, &settings(6, 6), g, vec![], |_| Ok(())).unwrap();
        let other = DoeSettings {
            seed: 6,
            ..settings(6, 8)
        };
        assert!(run_doe(&fs, &other, g, full, |_| Ok(())).is_err());
        assert!(read_log("iter,source,a,basin,objective\n".as_bytes(), Some(&fs)).is_err());
    }

    #[test]
    fn bad_budget_rejected() {
        assert!(run_doe(&factors(), &settings(6, 5), g, vec![], |_| Ok(())).is_err());
    }
}
