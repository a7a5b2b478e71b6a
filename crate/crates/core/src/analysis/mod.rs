//! Centroid closed form, fixed points, Jacobians, stability and parameter
//! sweeps of the reduced models.

mod centroid;
mod fixed_points;
mod sweep;

pub use centroid::*;
pub use fixed_points::*;
pub use sweep::*;

use nalgebra::{Complex, DMatrix, Schur};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::models::{initiative, Model, Variant};
use crate::params::ModelConfig;
use crate::solver::OdeSystem;

/// Real parts within this distance of zero count as nonhyperbolic.
pub const HYPERBOLIC_TOL: f64 = 1e-10;

/// Largest `max |rhs|` accepted for a reported fixed point.
pub const RESIDUAL_GATE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Nonhyperbolic,
}

impl Stability {
    pub fn classify(eigenvalues: &[Complex<f64>]) -> Self {
        if eigenvalues.iter().any(|l| l.re > HYPERBOLIC_TOL) {
            Stability::Unstable
        } else if eigenvalues.iter().any(|l| l.re.abs() <= HYPERBOLIC_TOL) {
            Stability::Nonhyperbolic
        } else {
            Stability::Stable
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Nonhyperbolic => "nonhyperbolic",
        }
    }
}

fn serialize_complex<S: Serializer>(v: &[Complex<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointRecord {
    pub label: String,
    /// Populations followed by the centroid difference(s).
    pub state: Vec<f64>,
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalues: Vec<Complex<f64>>,
    pub classification: Stability,
    /// `max |rhs|` at `state`.
    pub residual: f64,
    /// Whether all populations lie in the admissible box.
    pub physical: bool,
}

impl FixedPointRecord {
    /// Evaluate residual and spectrum of `model` at `state`. Fails the
    /// residual gate with an error.
    pub fn new(label: &str, model: &Model, state: Vec<f64>) -> Result<Self> {
        let residual = max_abs_rhs(model, &state);
        if residual.is_nan() || residual > RESIDUAL_GATE {
            return Err(CoreError::Numerical(format!(
                "{label}: residual {residual:e} exceeds {RESIDUAL_GATE:e}"
            )));
        }
        let eigenvalues = eigenvalues(&jacobian(model, &state))?;
        let np = model.n_populations();
        let caps = if model.variant.is_dimensional() {
            vec![model.cfg.k1, model.cfg.k2, model.cfg.k3]
        } else {
            vec![1.0; 3]
        };
        let physical = state[..np]
            .iter()
            .zip(&caps)
            .all(|(&p, &k)| (-1e-9..=k + 1e-9).contains(&p));
        Ok(Self {
            label: label.to_string(),
            classification: Stability::classify(&eigenvalues),
            state,
            eigenvalues,
            residual,
            physical,
        })
    }

    pub fn max_real_eig(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Fixed points found for one parameter set, with reasons for any that
/// could not be reported.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub records: Vec<FixedPointRecord>,
    pub diagnostics: Vec<String>,
}

impl FixedPointReport {
    pub fn get(&self, label: &str) -> Option<&FixedPointRecord> {
        self.records.iter().find(|r| r.label == label)
    }

    fn push(&mut self, rec: Result<FixedPointRecord>) {
        match rec {
            Ok(r) => self.records.push(r),
            Err(e) => self.diagnostics.push(e.to_string()),
        }
    }
}

pub fn max_abs_rhs(model: &Model, state: &[f64]) -> f64 {
    let mut dy = vec![0.0; model.dim()];
    model.rhs(0.0, state, &mut dy);
    dy.iter()
        .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Central-difference Jacobian with one Richardson extrapolation step,
/// base step `1e-6 · max(1, |x_j|)`.
pub fn jacobian(sys: &dyn OdeSystem, x: &[f64]) -> DMatrix<f64> {
    let n = sys.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut central = |j: usize, h: f64, xp: &mut Vec<f64>| {
        xp[j] = x[j] + h;
        sys.rhs(0.0, xp, &mut fp);
        xp[j] = x[j] - h;
        sys.rhs(0.0, xp, &mut fm);
        xp[j] = x[j];
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>()
    };
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        let coarse = central(j, h, &mut xp);
        let fine = central(j, 0.5 * h, &mut xp);
        for i in 0..n {
            jac[(i, j)] = (4.0 * fine[i] - coarse[i]) / 3.0;
        }
    }
    jac
}

/// Eigenvalues through a real Schur decomposition (Hessenberg reduction and
/// shifted QR), sorted by descending real part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Numerical("non-finite matrix entry".into()));
    }
    let schur = Schur::try_new(m.clone(), 1e-12, 100 * n * n)
        .ok_or_else(|| CoreError::Numerical("QR iteration did not converge".into()))?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eig)
}

/// Hand-derived Jacobian of the two-population reduced models
/// (`simple-reduced` and `eco2-reduced`) at `(P₁, P₂, Δ)`.
pub fn analytic_jacobian(variant: Variant, cfg: &ModelConfig, state: &[f64]) -> Result<DMatrix<f64>> {
    let (p1, p2, d) = (state[0], state[1], state[2]);
    let (sd, cd) = d.sin_cos();
    let blue = initiative(d);
    let red = initiative(-d);
    let (h1, h2) = (1.0 - p2, 1.0 - p1);
    let k = crate::models::centroid_coeffs(cfg.gamma1, cfg.gamma2, cfg.phi, cfg.psi, cfg.mu, h1, h2);
    let row3 = [
        cfg.gamma2 * (d + cfg.psi).sin(),
        cfg.gamma1 * (d - cfg.phi).sin(),
        -k.s * sd - k.c * cd,
    ];
    let rows = match variant {
        Variant::SimpleReduced => [
            [
                cfg.r1 * (1.0 - 2.0 * p1) - cfg.beta2 * p2 * red,
                -cfg.beta2 * p1 * red,
                0.5 * cfg.beta2 * p1 * p2 * cd,
            ],
            [
                -cfg.beta1 * p2 * blue,
                cfg.r2 * (1.0 - 2.0 * p2) - cfg.beta1 * p1 * blue,
                -0.5 * cfg.beta1 * p1 * p2 * cd,
            ],
            row3,
        ],
        Variant::Eco2Reduced => {
            let (a, tb) = (cfg.alpha, cfg.tau * cfg.beta1);
            let sat = a * p2 / (1.0 + a * p2);
            let dsat = a / ((1.0 + a * p2) * (1.0 + a * p2));
            let hol = 1.0 + tb * p2;
            [
                [
                    cfg.r1 * sat * (1.0 - 2.0 * p1) - cfg.beta2 * p2 * red - cfg.x1,
                    cfg.r1 * dsat * p1 * (1.0 - p1) - cfg.beta2 * p1 * red,
                    0.5 * cfg.beta2 * p1 * p2 * cd,
                ],
                [
                    -cfg.beta1 * p2 / hol * blue,
                    cfg.r2 * (1.0 - 2.0 * p2) - cfg.beta1 * p1 / (hol * hol) * blue,
                    -0.5 * cfg.beta1 * p1 * p2 * cd / hol,
                ],
                row3,
            ]
        }
        other => return Err(CoreError::InvalidParameter(format!("no analytic Jacobian for {other}"))),
    };
    Ok(DMatrix::from_fn(3, 3, |i, j| rows[i][j]))
}

/// Closed-form stability thresholds at a centroid equilibrium `Δ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub delta_star: f64,
    /// Blue success needs `β₁` above `r₂ / (1 + ½ sin Δ*)`.
    pub beta1_min: f64,
    /// Red success needs `β₂` above `r₁ / (1 − ½ sin Δ*)`.
    pub beta2_min: f64,
    /// Red success in the Holling model needs `β₂` above
    /// `(α r₁/(1+α) − x₁) / (1 − ½ sin Δ*)`.
    pub beta2_min_eco2: f64,
    /// `cos(φ − Δ*) > 0`: Blue's frustration keeps its phase lock stable.
    pub blue_window: bool,
    /// `cos(ψ + Δ*) > 0`: the same for Red.
    pub red_window: bool,
}

pub fn stability_thresholds(cfg: &ModelConfig, delta_star: f64) -> Thresholds {
    let s = delta_star.sin();
    Thresholds {
        delta_star,
        beta1_min: cfg.r2 / (1.0 + 0.5 * s),
        beta2_min: cfg.r1 / (1.0 - 0.5 * s),
        beta2_min_eco2: (cfg.alpha * cfg.r1 / (1.0 + cfg.alpha) - cfg.x1) / (1.0 - 0.5 * s),
        blue_window: (cfg.phi - delta_star).cos() > 0.0,
        red_window: (cfg.psi + delta_star).cos() > 0.0,
    }
}
