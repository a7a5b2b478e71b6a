//! Fixed points of the two-population reduced models.

use nalgebra::{Complex, DMatrix, DVector};

use super::{delta_star, jacobian, FixedPointRecord, FixedPointReport};
use crate::error::{CoreError, Result};
use crate::models::{initiative, Model, TwoCluster, Variant};
use crate::params::ModelConfig;
use crate::solver::FnSystem;

const ITER_TOL: f64 = 1e-12;
const ITER_MAX: usize = 10_000;
const DAMPING: f64 = 0.5;

/// Stable centroid equilibrium at the feedback levels implied by `P`.
fn delta_at(tc: &TwoCluster, p1: f64, p2: f64) -> Result<f64> {
    let k = tc.coeffs(1.0 - p2, 1.0 - p1);
    delta_star(k.c, k.s, tc.mu).ok_or_else(|| {
        CoreError::Numerical(format!(
            "no centroid fixed point at P = ({p1}, {p2}): C² + S² = {} < μ² = {}",
            k.c * k.c + k.s * k.s,
            tc.mu * tc.mu
        ))
    })
}

/// Newton's method on `g(x) = 0` with a finite-difference Jacobian.
fn newton(g: impl Fn(&[f64], &mut [f64]), x0: &[f64]) -> Option<Vec<f64>> {
    let n = x0.len();
    let sys = FnSystem {
        dim: n,
        f: |_t: f64, x: &[f64], out: &mut [f64]| g(x, out),
    };
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    for _ in 0..100 {
        g(&x, &mut r);
        if r.iter().all(|v| v.abs() < 1e-14) {
            return Some(x);
        }
        let j = jacobian(&sys, &x);
        let step = j.lu().solve(&DVector::from_column_slice(&r))?;
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if step.amax() < 1e-15 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
            break;
        }
    }
    g(&x, &mut r);
    r.iter().all(|v| v.abs() < 1e-10).then_some(x)
}

fn reduced_model(variant: Variant, cfg: &ModelConfig) -> Result<Model> {
    Model::reduced(variant, cfg.clone(), None)
}

/// FP1 = (1, 0, Δ*), FP2 = (0, 1, Δ*), FP3 = (0, 0, Δ*) and the
/// coexistence point FP4 of the `simple-reduced` model.
pub fn simple_fixed_points(cfg: &ModelConfig) -> Result<FixedPointReport> {
    let model = reduced_model(Variant::SimpleReduced, cfg)?;
    let tc = model.two_cluster();
    let mut report = FixedPointReport::default();
    for (label, p1, p2) in [("FP1", 1.0, 0.0), ("FP2", 0.0, 1.0), ("FP3", 0.0, 0.0)] {
        let rec = delta_at(&tc, p1, p2).and_then(|d| FixedPointRecord::new(label, &model, vec![p1, p2, d]));
        report.push(rec.map_err(|e| CoreError::Numerical(format!("{label}: {e}"))));
    }
    report.push(simple_interior(cfg, &model).map_err(|e| CoreError::Numerical(format!("FP4: {e}"))));
    Ok(report)
}

/// Interior balance of the simple model: both logistic-competition brackets
/// and the centroid equation vanish.
fn simple_balance(cfg: &ModelConfig, tc: &TwoCluster, x: &[f64], out: &mut [f64]) {
    let (p1, p2, d) = (x[0], x[1], x[2]);
    out[0] = cfg.r1 * (1.0 - p1) - cfg.beta2 * p2 * initiative(-d);
    out[1] = cfg.r2 * (1.0 - p2) - cfg.beta1 * p1 * initiative(d);
    out[2] = tc.rate(d, 1.0 - p2, 1.0 - p1);
}

fn simple_interior(cfg: &ModelConfig, model: &Model) -> Result<FixedPointRecord> {
    if cfg.r1 <= 0.0 || cfg.r2 <= 0.0 {
        return Err(CoreError::Numerical("coexistence needs positive recruitment".into()));
    }
    let tc = model.two_cluster();
    let (mut p1, mut p2) = (0.5, 0.5);
    let mut d = delta_at(&tc, p1, p2).unwrap_or(0.0);
    let mut converged = false;
    for _ in 0..ITER_MAX {
        let q1 = (1.0 - DAMPING) * p1 + DAMPING * (1.0 - cfg.beta2 * p2 * initiative(-d) / cfg.r1);
        let q2 = (1.0 - DAMPING) * p2 + DAMPING * (1.0 - cfg.beta1 * q1 * initiative(d) / cfg.r2);
        let Ok(target) = delta_at(&tc, q1, q2) else { break };
        let e = (1.0 - DAMPING) * d + DAMPING * target;
        let change = (q1 - p1).abs().max((q2 - p2).abs()).max((e - d).abs());
        (p1, p2, d) = (q1, q2, e);
        if !change.is_finite() {
            break;
        }
        if change < ITER_TOL {
            converged = true;
            break;
        }
    }
    let x = if converged {
        vec![p1, p2, d]
    } else {
        let start = if [p1, p2, d].iter().all(|v| v.is_finite() && v.abs() < 1e6) {
            vec![p1, p2, d]
        } else {
            vec![0.5, 0.5, 0.0]
        };
        newton(|x, out| simple_balance(cfg, &tc, x, out), &start)
            .ok_or_else(|| CoreError::Numerical("fixed-point iteration and Newton both failed".into()))?
    };
    let mut x = x;
    x[2] = crate::models::wrap_angle(x[2]);
    FixedPointRecord::new("FP4", model, x)
}

/// Shorthands of the Holling model at a given `Δ*`: `δ` and `β̃₂`.
fn eco2_shorthands(cfg: &ModelConfig, d: f64) -> (f64, f64) {
    (initiative(d), cfg.beta2 * initiative(-d))
}

/// Closed-form candidates for the interior `P₂*` of the Holling model at a
/// fixed centroid difference, in the order FP3, FP4, FP5, using cube-root
/// branch `branch` (0 is principal) for the inner radical.
pub fn eco2_candidates(cfg: &ModelConfig, delta: f64, branch: u32) -> [Complex<f64>; 3] {
    let (dl, b2) = eco2_shorthands(cfg, delta);
    let (r1, r2, a, b1, tau, x1) = (cfg.r1, cfg.r2, cfg.alpha, cfg.beta1, cfg.tau, cfg.x1);
    let btau = b1 * tau;
    let xi = (2.0 * a + 3.0) * b1 * b2 * tau - 2.0 * a * b2 + 3.0 * a * b1 * tau * x1;
    let f1 = a * (b1 * dl * b2 + (btau - 1.0) * r1 * r2);
    let f2 = a
        * (a * b1 * b1 * dl * dl * b2 * b2
            + b1 * dl * xi * r1 * r2
            + a * r1 * r1 * r2 * (-3.0 * b1 * b1 * dl * tau + (1.0 + btau + btau * btau) * r2));
    let chi = a
        * a
        * (2.0 * b1.powi(3) * a * dl.powi(3) * b2.powi(3)
            + 3.0 * b1 * b1 * dl * dl * b2 * xi * r1 * r2
            + (btau - 1.0)
                * a
                * r1.powi(3)
                * r2
                * r2
                * (-9.0 * b1 * b1 * dl * tau + (2.0 + 5.0 * btau + 2.0 * btau * btau) * r2)
            + 3.0
                * b1
                * dl
                * r1
                * r1
                * r2
                * (-3.0 * a * b1 * b1 * dl * tau * b2 + r2 * (-xi + btau * (xi + 3.0 * a * b2 + 9.0 * btau * x1))));
    let bracket = f1 * f1 + 3.0 * a * btau * r1 * r2 * (b1 * dl * (x1 * a + b2) + a * r1 * (r2 - b1 * dl));
    let radicand = Complex::new(chi * chi - 4.0 * bracket.powi(3), 0.0);
    let inner = Complex::new(chi, 0.0) + radicand.sqrt();
    let rotation = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * branch as f64 / 3.0);
    let f3 = inner.powf(1.0 / 3.0) * rotation;
    let (c43, c23) = (2f64.powf(4.0 / 3.0), 2f64.powf(2.0 / 3.0));
    let w = Complex::new(1.0, 3f64.sqrt());
    let wc = w.conj();
    let den = a * btau * r1 * r2;
    let f1c = Complex::new(f1, 0.0);
    let ratio = Complex::new(f2, 0.0) / f3;
    [
        (f1c * 2.0 + ratio * c43 + f3 * c23) / (6.0 * den),
        (f1c * 4.0 - w * ratio * c43 - wc * f3 * c23) / (12.0 * den),
        (f1c * 4.0 - wc * ratio * c43 - w * f3 * c23) / (12.0 * den),
    ]
}

/// Blue's interior level from Red's: `P₁* = r₂(1 − P₂*)(1 + τβ₁P₂*)/(β₁δ)`.
pub fn eco2_back_substitute(cfg: &ModelConfig, delta: f64, p2: f64) -> f64 {
    let dl = initiative(delta);
    cfg.r2 * (1.0 - p2) * (1.0 + cfg.tau * cfg.beta1 * p2) / (cfg.beta1 * dl)
}

/// Remaining interior condition once Red's equation is solved by
/// back-substitution: Blue's per-capita growth.
fn eco2_blue_balance(cfg: &ModelConfig, delta: f64, p2: Complex<f64>) -> Complex<f64> {
    let (dl, b2) = eco2_shorthands(cfg, delta);
    let p1 = (-p2 + 1.0) * (p2 * (cfg.tau * cfg.beta1) + 1.0) * (cfg.r2 / (cfg.beta1 * dl));
    p2 * (cfg.r1 * cfg.alpha) / (p2 * cfg.alpha + 1.0) * (-p1 + 1.0) - p2 * b2 - cfg.x1
}

/// Real interior candidate `label_index` (0 → FP3) at `delta`, trying the
/// principal cube-root branch first.
fn eco2_root(cfg: &ModelConfig, delta: f64, idx: usize) -> Result<f64> {
    let mut best: Option<(f64, Complex<f64>)> = None;
    for branch in 0..3 {
        let z = eco2_candidates(cfg, delta, branch)[idx];
        let bal = eco2_blue_balance(cfg, delta, z).norm();
        if !bal.is_finite() {
            continue;
        }
        if bal < 1e-8 {
            best = Some((bal, z));
            break;
        }
        if best.is_none_or(|(b, _)| bal < b) {
            best = Some((bal, z));
        }
    }
    let (bal, z) = best.ok_or_else(|| CoreError::Numerical("cube-root formula not finite".into()))?;
    if bal > 1e-6 {
        return Err(CoreError::Numerical(format!(
            "closed-form root does not balance ({bal:e})"
        )));
    }
    if z.im.abs() > 1e-8 {
        return Err(CoreError::Numerical(format!(
            "root is complex (imaginary part {:e})",
            z.im
        )));
    }
    Ok(z.re)
}

/// FP1 = (0, 0, Δ*), FP2 = (0, 1, Δ*) and the three interior roots FP3–FP5
/// of the `eco2-reduced` model, with `Δ*` coupled to the populations by
/// damped fixed-point iteration.
pub fn eco2_fixed_points(cfg: &ModelConfig) -> Result<FixedPointReport> {
    let model = reduced_model(Variant::Eco2Reduced, cfg)?;
    let tc = model.two_cluster();
    let mut report = FixedPointReport::default();
    for (label, p1, p2) in [("FP1", 0.0, 0.0), ("FP2", 0.0, 1.0)] {
        let rec = delta_at(&tc, p1, p2).and_then(|d| FixedPointRecord::new(label, &model, vec![p1, p2, d]));
        report.push(rec.map_err(|e| CoreError::Numerical(format!("{label}: {e}"))));
    }
    if cfg.beta1 <= 0.0 || cfg.tau <= 0.0 || cfg.alpha <= 0.0 || cfg.r1 <= 0.0 || cfg.r2 <= 0.0 {
        report
            .diagnostics
            .push("FP3-FP5: closed form needs positive α, τ, β₁, r₁, r₂".into());
        return Ok(report);
    }
    for (idx, label) in ["FP3", "FP4", "FP5"].into_iter().enumerate() {
        let rec = eco2_interior(cfg, &model, idx).and_then(|x| FixedPointRecord::new(label, &model, x));
        report.push(rec.map_err(|e| CoreError::Numerical(format!("{label}: {e}"))));
    }
    Ok(report)
}

fn eco2_interior(cfg: &ModelConfig, model: &Model, idx: usize) -> Result<Vec<f64>> {
    let tc = model.two_cluster();
    let mut d = delta_at(&tc, 0.5, 0.5)?;
    let mut last = None;
    for _ in 0..ITER_MAX {
        let p2 = eco2_root(cfg, d, idx)?;
        let p1 = eco2_back_substitute(cfg, d, p2);
        let target = delta_at(&tc, p1, p2)?;
        let next = (1.0 - DAMPING) * d + DAMPING * target;
        let change = (next - d).abs();
        d = next;
        last = Some((p1, p2));
        if change < ITER_TOL {
            let p2 = eco2_root(cfg, d, idx)?;
            return Ok(vec![eco2_back_substitute(cfg, d, p2), p2, d]);
        }
    }
    // Newton on the full balance, accepted only if the closed form for this
    // label reproduces the converged Red level.
    let (p1, p2) = last.unwrap_or((0.5, 0.5));
    let balance = |x: &[f64], out: &mut [f64]| {
        let (p1, p2, d) = (x[0], x[1], x[2]);
        let (dl, b2) = eco2_shorthands(cfg, d);
        out[0] = cfg.r1 * cfg.alpha * p2 / (1.0 + cfg.alpha * p2) * (1.0 - p1) - b2 * p2 - cfg.x1;
        out[1] = cfg.r2 * (1.0 - p2) - cfg.beta1 * p1 * dl / (1.0 + cfg.tau * cfg.beta1 * p2);
        out[2] = tc.rate(d, 1.0 - p2, 1.0 - p1);
    };
    let x = newton(balance, &[p1, p2, d])
        .ok_or_else(|| CoreError::Numerical("fixed-point iteration and Newton both failed".into()))?;
    let p2 = eco2_root(cfg, x[2], idx)?;
    if (p2 - x[1]).abs() > 1e-6 {
        return Err(CoreError::Numerical("Newton converged to a different root".into()));
    }
    Ok(x)
}

/// Companion matrix of a monic-normalized polynomial with coefficients
/// `a[0] + a[1] x + …`; exposed for diagnostics.
pub fn companion(a: &[f64]) -> DMatrix<f64> {
    let n = a.len() - 1;
    let lead = a[n];
    DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -a[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    })
}
