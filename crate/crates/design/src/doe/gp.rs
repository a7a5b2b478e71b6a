//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Inputs are expected on the unit cube; targets are centred on their mean
//! before fitting.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{DesignError, Result};

/// Largest diagonal jitter tried before a kernel matrix is declared degenerate.
pub const MAX_JITTER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyper {
    pub length_scales: Vec<f64>,
    pub signal_var: f64,
    pub noise_var: f64,
}

impl Hyper {
    /// Starting point for marginal-likelihood search.
    pub fn default_for(d: usize, ys: &[f64]) -> Self {
        Self {
            length_scales: vec![0.3; d],
            signal_var: variance(ys).max(1e-4),
            noise_var: 1e-6,
        }
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.length_scales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_var.ln());
        v.push(self.noise_var.ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let d = v.len() - 2;
        Self {
            length_scales: v[..d].iter().map(|x| x.exp()).collect(),
            signal_var: v[d].exp(),
            noise_var: v[d + 1].exp(),
        }
    }
}

fn variance(ys: &[f64]) -> f64 {
    if ys.len() < 2 {
        return 0.0;
    }
    let m = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / ys.len() as f64
}

/// `σ_f² exp(−½ Σ_j ((a_j − b_j)/ℓ_j)²)`.
pub fn kernel(h: &Hyper, a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&h.length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    h.signal_var * (-0.5 * r2).exp()
}

#[derive(Debug, Clone)]
pub struct Gp {
    pub hyper: Hyper,
    x: Vec<Vec<f64>>,
    mean: f64,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    /// Diagonal jitter that was needed on top of the noise variance.
    pub jitter: f64,
    y_centred: DVector<f64>,
}

impl Gp {
    pub fn fit(x: &[Vec<f64>], y: &[f64], hyper: Hyper) -> Result<Self> {
        let n = x.len();
        if n == 0 || n != y.len() {
            return Err(DesignError::Invalid(format!("{n} inputs for {} targets", y.len())));
        }
        if !(hyper.noise_var > 0.0) {
            return Err(DesignError::Invalid("noise variance must be positive".into()));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let y_centred = DVector::from_iterator(n, y.iter().map(|v| v - mean));
        let k = DMatrix::from_fn(n, n, |i, j| kernel(&hyper, &x[i], &x[j]));
        let mut jitter = 0.0;
        let chol = loop {
            let mut kk = k.clone();
            for i in 0..n {
                kk[(i, i)] += hyper.noise_var + jitter;
            }
            if let Some(c) = Cholesky::new(kk) {
                break c;
            }
            jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
            if jitter > MAX_JITTER * 1.0001 {
                return Err(DesignError::Degenerate(MAX_JITTER));
            }
        };
        let alpha = chol.solve(&y_centred);
        Ok(Self {
            hyper,
            x: x.to_vec(),
            mean,
            alpha,
            chol,
            jitter,
            y_centred,
        })
    }

    /// Posterior mean and standard deviation of the latent function at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| kernel(&self.hyper, xi, x)));
        let mu = self.mean + ks.dot(&self.alpha);
        let v = self
            .chol
            .l()
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor is nonsingular");
        let var = (self.hyper.signal_var - v.norm_squared()).max(0.0);
        (mu, var.sqrt())
    }

    /// `−½ yᵀK⁻¹y − ½ log|K| − (n/2) log 2π` of the centred targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.x.len() as f64;
        let log_det: f64 = self.chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        -0.5 * self.y_centred.dot(&self.alpha) - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Bounds on the log hyperparameters: length scales, signal and noise variance.
fn log_bounds(d: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(0.01f64.ln(), 10f64.ln()); d];
    b.push((1e-6f64.ln(), 10f64.ln()));
    b.push((1e-8f64.ln(), 0.1f64.ln()));
    b
}

/// Compass search maximizing `f` inside a box: try ± `step` along each axis,
/// move to the first improvement, halve the step when none is found.
pub fn compass_max(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    bounds: &[(f64, f64)],
    step0: f64,
    min_step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = step0;
    let mut evals = 1;
    while step >= min_step && evals < max_evals {
        let mut improved = false;
        'axes: for j in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (y[j] + sign * step).clamp(bounds[j].0, bounds[j].1);
                if y[j] == x[j] {
                    continue;
                }
                let fy = f(&y);
                evals += 1;
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break 'axes;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Hyperparameters maximizing the log marginal likelihood, searched in log
/// space from [`Hyper::default_for`]. Settings that cannot be factorized
/// score −∞.
pub fn optimize_hyper(x: &[Vec<f64>], y: &[f64]) -> Hyper {
    let d = x.first().map_or(0, Vec::len);
    let start = Hyper::default_for(d, y).to_log();
    let lml = |v: &[f64]| {
        Gp::fit(x, y, Hyper::from_log(v))
            .map(|gp| gp.log_marginal_likelihood())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (best, _) = compass_max(lml, &start, &log_bounds(d), 1.0, 0.05, 400);
    Hyper::from_log(&best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let y = x.iter().map(|p| (6.0 * p[0]).sin()).collect();
        (x, y)
    }

    #[test]
    fn interpolates_training_targets() {
        let (x, y) = data();
        let gp = Gp::fit(&x, &y, Hyper::default_for(1, &y)).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m, s) = gp.predict(xi);
            assert!((m - yi).abs() < gp.hyper.noise_var.sqrt(), "{m} vs {yi}");
            assert!(s < 1e-2);
        }
        let (_, far) = gp.predict(&[5.0]);
        assert!((far - gp.hyper.signal_var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lml_matches_dense_formula() {
        let (x, y) = data();
        let h = Hyper {
            length_scales: vec![0.4],
            signal_var: 0.7,
            noise_var: 1e-3,
        };
        let gp = Gp::fit(&x, &y, h.clone()).unwrap();
        let n = y.len();
        let m = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - m));
        let k = DMatrix::from_fn(n, n, |i, j| {
            kernel(&h, &x[i], &x[j]) + if i == j { h.noise_var } else { 0.0 }
        });
        let inv = k.clone().try_inverse().unwrap();
        let want = -0.5 * (yc.transpose() * inv * &yc)[0]
            - 0.5 * k.determinant().ln()
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        assert!((gp.log_marginal_likelihood() - want).abs() < 1e-8);
    }

    #[test]
    fn optimization_does_not_lose_likelihood() {
        let (x, y) = data();
        let start = Gp::fit(&x, &y, Hyper::default_for(1, &y))
            .unwrap()
            .log_marginal_likelihood();
        let h = optimize_hyper(&x, &y);
        let end = Gp::fit(&x, &y, h.clone()).unwrap().log_marginal_likelihood();
        assert!(end >= start);
        assert!(h.noise_var > 0.0);
    }

    #[test]
    fn duplicate_inputs_need_no_more_than_noise() {
        let x = vec![vec![0.5, 0.5]; 3];
        let y = vec![0.1, 0.2, 0.3];
        let gp = Gp::fit(&x, &y, Hyper::default_for(2, &y)).unwrap();
        assert!(gp.jitter <= MAX_JITTER);
        let (m, _) = gp.predict(&[0.5, 0.5]);
        assert!((m - 0.2).abs() < 1e-3);
    }

    #[test]
    fn nonpositive_noise_rejected() {
        let (x, y) = data();
        let h = Hyper {
            noise_var: 0.0,
            ..Hyper::default_for(1, &y)
        };
        assert!(Gp::fit(&x, &y, h).is_err());
    }

    #[test]
    fn compass_finds_quadratic_peak() {
        let f = |v: &[f64]| -(v[0] - 0.3).powi(2) - (v[1] + 0.2).powi(2);
        let (x, _) = compass_max(f, &[0.0, 0.0], &[(-1.0, 1.0); 2], 0.5, 1e-6, 10_000);
        assert!((x[0] - 0.3).abs() < 1e-5 && (x[1] + 0.2).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn posterior_sd_bounded_by_prior(px in 0.0f64..1.0, py in 0.0f64..1.0) {
            let x: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![0.7, 0.4], vec![0.3, 0.9]];
            let y = vec![0.2, 0.9, 0.5];
            let gp = Gp::fit(&x, &y, Hyper::default_for(2, &y)).unwrap();
            let (_, s) = gp.predict(&[px, py]);
            prop_assert!(s >= 0.0 && s <= gp.hyper.signal_var.sqrt() + 1e-12);
        }
    }
}
