//! Feature ranking for basin campaigns: quasi-binomial fits, sequential
//! deviance tables and permutation importance.

pub mod glm;

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use dcomp_core::rng::{rng_for, STREAM_PERMUTATION};

pub use glm::{deviance, fit_quasibinomial, with_intercept, GlmFit};

use crate::error::{DesignError, Result};

pub const INTERCEPT: &str = "(Intercept)";

/// Response, optional prior weights and named feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

impl Table {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn terms(&self) -> Vec<String> {
        std::iter::once(INTERCEPT.to_string())
            .chain(self.names.iter().cloned())
            .collect()
    }

    pub fn design(&self) -> nalgebra::DMatrix<f64> {
        with_intercept(&self.columns, self.n())
    }

    pub fn fit(&self) -> Result<GlmFit> {
        fit_quasibinomial(&self.design(), &self.y, self.weights.as_deref(), &self.terms())
    }
}

/// Read a CSV table. `response` names the response column, `weight` an
/// optional prior-weight column; every other column except `ignore` becomes
/// a feature. Rows with an empty response are skipped, so a design log (see
/// [`crate::doe::write_log`]) can be read directly with response `basin`
/// and `iter`, `source`, `objective` ignored.
pub fn read_table<R: Read>(r: R, response: &str, weight: Option<&str>, ignore: &[&str]) -> Result<Table> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DesignError::Log(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DesignError::Log(format!("no column named {name:?}")))
    };
    let yi = find(response)?;
    let wi = weight.map(find).transpose()?;
    let feats: Vec<usize> = (0..header.len())
        .filter(|&j| j != yi && Some(j) != wi && !ignore.contains(&header[j].as_str()))
        .collect();
    let mut table = Table {
        names: feats.iter().map(|&j| header[j].clone()).collect(),
        columns: vec![Vec::new(); feats.len()],
        y: Vec::new(),
        weights: wi.map(|_| Vec::new()),
    };
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| DesignError::Log(e.to_string()))?;
        if row[yi].trim().is_empty() {
            continue;
        }
        let num = |j: usize| {
            row[j]
                .trim()
                .parse::<f64>()
                .map_err(|_| DesignError::Log(format!("line {}: column {:?} is not numeric", i + 2, header[j])))
        };
        table.y.push(num(yi)?);
        if let (Some(wi), Some(ws)) = (wi, table.weights.as_mut()) {
            ws.push(num(wi)?);
        }
        for (c, &j) in feats.iter().enumerate() {
            table.columns[c].push(num(j)?);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub term: String,
    /// Deviance removed by adding this term after the ones above it.
    pub deviance: f64,
    pub residual_deviance: f64,
    /// Share of the total reduction from null to full model, in percent.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DevianceTable {
    pub null_deviance: f64,
    pub rows: Vec<AnovaRow>,
}

impl DevianceTable {
    pub fn residual_deviance(&self) -> f64 {
        self.rows.last().map_or(self.null_deviance, |r| r.residual_deviance)
    }

    pub fn percent_of(&self, term: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.term == term).map(|r| r.percent)
    }
}

/// Sequential (type I) deviance table, adding features in `order` (indices
/// into `table.names`; all features in their own order when `None`). When
/// the full model removes no deviance every percentage is 0.
pub fn deviance_anova(table: &Table, order: Option<&[usize]>) -> Result<DevianceTable> {
    let default: Vec<usize> = (0..table.names.len()).collect();
    let order = order.unwrap_or(&default);
    let mut seen = vec![false; table.names.len()];
    for &j in order {
        if j >= seen.len() || std::mem::replace(&mut seen[j], true) {
            return Err(DesignError::Invalid(format!(
                "term order {order:?} is not a selection of distinct features"
            )));
        }
    }
    let mut resid = Vec::with_capacity(order.len());
    let mut null_deviance = f64::NAN;
    for k in 0..=order.len() {
        let sub = Table {
            names: order[..k].iter().map(|&j| table.names[j].clone()).collect(),
            columns: order[..k].iter().map(|&j| table.columns[j].clone()).collect(),
            y: table.y.clone(),
            weights: table.weights.clone(),
        };
        let fit = sub.fit()?;
        if k == 0 {
            null_deviance = fit.null_deviance;
        } else {
            resid.push(fit.residual_deviance);
        }
    }
    let total = null_deviance - resid.last().copied().unwrap_or(null_deviance);
    let mut prev = null_deviance;
    let rows = order
        .iter()
        .zip(&resid)
        .map(|(&j, &r)| {
            let dev = prev - r;
            prev = r;
            AnovaRow {
                term: table.names[j].clone(),
                deviance: dev,
                residual_deviance: r,
                percent: if total != 0.0 { 100.0 * dev / total } else { 0.0 },
            }
        })
        .collect();
    Ok(DevianceTable { null_deviance, rows })
}

/// `1 − D_resid / D_null` of `fit` evaluated on `columns`, without refitting.
pub fn score(fit: &GlmFit, columns: &[Vec<f64>], y: &[f64], w: &[f64]) -> f64 {
    let mu = fit.predict(&with_intercept(columns, y.len()));
    1.0 - deviance(y, &mu, w) / fit.null_deviance
}

/// Mean score drop per feature over `n_repeats` shuffles of that feature's
/// column. Shuffle `r` of feature `j` draws from stream `(j, r)` of `seed`.
pub fn permutation_importance(fit: &GlmFit, table: &Table, n_repeats: usize, seed: u64) -> Vec<f64> {
    let ones = vec![1.0; table.n()];
    let w = table.weights.as_deref().unwrap_or(&ones);
    let base = score(fit, &table.columns, &table.y, w);
    (0..table.names.len())
        .map(|j| {
            let total: f64 = (0..n_repeats)
                .into_par_iter()
                .map(|r| {
                    let mut rng = rng_for(seed, &[STREAM_PERMUTATION, j as u64, r as u64]);
                    let mut cols = table.columns.clone();
                    cols[j].shuffle(&mut rng);
                    base - score(fit, &cols, &table.y, w)
                })
                .sum();
            total / n_repeats.max(1) as f64
        })
        .collect()
}

/// Coefficient table `term,Estimate,Std. Error,t-value,Deviance%`. The
/// deviance share is empty for the intercept.
pub fn write_coefficients<W: Write>(w: W, fit: &GlmFit, anova: &DevianceTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| DesignError::Log(e.to_string());
    out.write_record(["term", "Estimate", "Std. Error", "t-value", "Deviance%"])
        .map_err(err)?;
    for (j, term) in fit.terms.iter().enumerate() {
        let pct = anova.percent_of(term).map_or(String::new(), |p| p.to_string());
        out.write_record([
            term.clone(),
            fit.coefficients[j].to_string(),
            fit.std_errors[j].to_string(),
            fit.t_values[j].to_string(),
            pct,
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}
