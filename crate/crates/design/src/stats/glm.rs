//! Quasi-binomial regression with a logit link, fitted by iteratively
//! reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{DesignError, Result};

/// Fitted probabilities are kept inside `[MU_EPS, 1 − MU_EPS]`.
pub const MU_EPS: f64 = 1e-10;
pub const DEVIANCE_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 100;
/// Relative residual norm below which a column counts as dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlmFit {
    /// Column names of the design matrix, intercept first.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Pearson χ² over residual degrees of freedom; NaN when there are none.
    pub dispersion: f64,
    pub null_deviance: f64,
    pub residual_deviance: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub fitted: Vec<f64>,
}

impl GlmFit {
    /// Fitted probabilities for new rows (intercept column included).
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let eta = x * DVector::from_column_slice(&self.coefficients);
        eta.iter().map(|&e| logistic(e)).collect()
    }
}

pub fn logistic(eta: f64) -> f64 {
    (1.0 / (1.0 + (-eta).exp())).clamp(MU_EPS, 1.0 - MU_EPS)
}

pub fn logit(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln()
}

/// `y ln(y/μ)` with `0 · ln 0 = 0`.
fn ylog(y: f64, mu: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y * (y / mu).ln()
    }
}

/// Binomial deviance `2 Σ w [y ln(y/μ) + (1−y) ln((1−y)/(1−μ))]`.
pub fn deviance(y: &[f64], mu: &[f64], w: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .zip(w)
        .map(|((&y, &m), &w)| w * (ylog(y, m) + ylog(1.0 - y, 1.0 - m)))
        .sum::<f64>()
}

/// Design matrix with a leading column of ones followed by `columns`.
pub fn with_intercept(columns: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        n,
        columns.len() + 1,
        |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] },
    )
}

/// Indices of columns that are (numerically) linear combinations of the
/// columns before them.
pub fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let resid = if kept.is_empty() {
            norm
        } else {
            let basis = x.select_columns(&kept);
            let coef = basis
                .clone()
                .svd(true, true)
                .solve(&col, 1e-14)
                .expect("SVD with vectors");
            (&col - basis * coef).norm()
        };
        if norm == 0.0 || resid <= RANK_TOL * norm {
            dependent.push(j);
        } else {
            kept.push(j);
        }
    }
    dependent
}

fn validate(x: &DMatrix<f64>, y: &[f64], w: &[f64], terms: &[String]) -> Result<()> {
    let n = x.nrows();
    if y.len() != n || w.len() != n || terms.len() != x.ncols() {
        return Err(DesignError::Invalid(format!(
            "{n} rows, {} responses, {} weights, {} columns, {} names",
            y.len(),
            w.len(),
            x.ncols(),
            terms.len()
        )));
    }
    if n == 0 {
        return Err(DesignError::Invalid("no observations".into()));
    }
    if let Some(v) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(DesignError::Invalid(format!("response {v} outside [0, 1]")));
    }
    if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(DesignError::Invalid(
            "prior weights must be finite and nonnegative".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DesignError::Invalid("design matrix has non-finite entries".into()));
    }
    let dep = dependent_columns(x);
    if !dep.is_empty() {
        return Err(DesignError::RankDeficient(
            dep.into_iter().map(|j| terms[j].clone()).collect(),
        ));
    }
    Ok(())
}

/// Fit `logit E[y] = Xβ`. `x` must contain the intercept column as its first
/// column; `terms` names every column. Prior weights default to one.
pub fn fit_quasibinomial(x: &DMatrix<f64>, y: &[f64], weights: Option<&[f64]>, terms: &[String]) -> Result<GlmFit> {
    let n = x.nrows();
    let p = x.ncols();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    validate(x, y, w, terms)?;

    let mut mu: Vec<f64> = y
        .iter()
        .zip(w)
        .map(|(&y, &w)| ((w * y + 0.5) / (w + 1.0)).clamp(MU_EPS, 1.0 - MU_EPS))
        .collect();
    let mut eta: Vec<f64> = mu.iter().map(|&m| logit(m)).collect();
    let mut dev_old = deviance(y, &mu, w);
    let mut beta = DVector::zeros(p);
    let mut converged = false;
    let mut n_iter = 0;
    for it in 1..=MAX_ITER {
        n_iter = it;
        let var: Vec<f64> = mu.iter().map(|m| m * (1.0 - m)).collect();
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / var[i]);
        let sw = DVector::from_fn(n, |i, _| (w[i] * var[i]).sqrt());
        let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sw[i]);
        let zw = z.component_mul(&sw);
        beta = xw
            .svd(true, true)
            .solve(&zw, 1e-14)
            .map_err(|e| DesignError::Invalid(e.to_string()))?;
        let e = x * &beta;
        eta = e.iter().copied().collect();
        mu = eta.iter().map(|&e| logistic(e)).collect();
        let dev = deviance(y, &mu, w);
        if (dev - dev_old).abs() / (dev.abs() + 0.1) < DEVIANCE_TOL {
            converged = true;
            break;
        }
        dev_old = dev;
    }

    let residual_deviance = deviance(y, &mu, w);
    let wsum: f64 = w.iter().sum();
    let ybar = (y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / wsum).clamp(MU_EPS, 1.0 - MU_EPS);
    let null_deviance = deviance(y, &vec![ybar; n], w);

    let pearson: f64 = (0..n)
        .map(|i| w[i] * (y[i] - mu[i]).powi(2) / (mu[i] * (1.0 - mu[i])))
        .sum();
    let dispersion = if n > p { pearson / (n - p) as f64 } else { f64::NAN };
    let info: DMatrix<f64> = DMatrix::from_fn(p, p, |a, b| {
        (0..n)
            .map(|i| w[i] * mu[i] * (1.0 - mu[i]) * x[(i, a)] * x[(i, b)])
            .sum()
    });
    let inv = info
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| DesignError::Invalid("weighted information matrix is singular".into()))?;
    let std_errors: Vec<f64> = (0..p).map(|j| (dispersion * inv[(j, j)]).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t_values = coefficients.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    Ok(GlmFit {
        terms: terms.to_vec(),
        coefficients,
        std_errors,
        t_values,
        dispersion,
        null_deviance,
        residual_deviance,
        converged,
        n_iter,
        fitted: mu,
    })
}
