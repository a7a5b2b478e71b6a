//! Exact solution of the two-cluster centroid equation
//! `Δ' = μ + S cos Δ − C sin Δ` with constant coefficients.
//!
//! With `η = tan(Δ/2)` the equation is a constant-coefficient Riccati
//! equation, i.e. the projective image of the traceless linear flow
//! `v' = M v`, `M = ½[[C, −(μ−S)], [μ+S, −C]]`, acting on
//! `v = (cos Δ/2, sin Δ/2)`. Since `M² = (𝒦/4) I` the propagator is
//! `cosh(λt) I + sinh(λt)/λ M` with `λ = √𝒦 / 2`, continued to `cos`/`sin`
//! for `𝒦 < 0` and to `I + tM` for `𝒦 = 0`. Tracking the angle of `v`
//! continuously gives `Δ(t)` with the correct winding and no special case
//! for `μ = S`.

use std::f64::consts::PI;

use crate::models::{wrap_angle, CentroidCoeffs};

/// Stable equilibrium of the centroid equation, wrapped into (−π, π], or
/// `None` when `C² + S² < μ²`.
///
/// Evaluates `2 atan((C − √𝒦)/(μ − S))` through whichever of the two
/// algebraically equal quotients `(C − √𝒦)/(μ − S)` and
/// `(μ + S)/(C + √𝒦)` has the larger denominator.
pub fn delta_star(c: f64, s: f64, mu: f64) -> Option<f64> {
    let k = c * c + s * s - mu * mu;
    if k < 0.0 {
        return None;
    }
    let root = k.sqrt();
    let (d1, d2) = (mu - s, c + root);
    let x = if d1.abs() >= d2.abs() {
        if d1 == 0.0 {
            return Some(PI);
        }
        2.0 * ((c - root) / d1).atan()
    } else {
        2.0 * ((mu + s) / d2).atan()
    };
    Some(wrap_angle(x))
}

/// [`delta_star`] from precomputed coefficients.
pub fn delta_star_of(k: &CentroidCoeffs, mu: f64) -> Option<f64> {
    delta_star(k.c, k.s, mu)
}

/// `Δ(t)` for the centroid equation started from `delta0` at `t = 0`.
pub fn delta_closed_form(t: f64, c: f64, s: f64, mu: f64, delta0: f64) -> f64 {
    let k = c * c + s * s - mu * mu;
    let m = [[0.5 * c, -0.5 * (mu - s)], [0.5 * (mu + s), -0.5 * c]];
    let half = 0.5 * delta0;
    let v0 = [half.cos(), half.sin()];
    let propagate = |tau: f64| {
        let (a, b) = if k > 0.0 {
            let l = 0.5 * k.sqrt();
            // Normalize by cosh to keep the vector finite for large t.
            (1.0, (l * tau).tanh() / l)
        } else if k < 0.0 {
            let w = 0.5 * (-k).sqrt();
            ((w * tau).cos(), (w * tau).sin() / w)
        } else {
            (1.0, tau)
        };
        [
            a * v0[0] + b * (m[0][0] * v0[0] + m[0][1] * v0[1]),
            a * v0[1] + b * (m[1][0] * v0[0] + m[1][1] * v0[1]),
        ]
    };
    let turn = |v: [f64; 2]| (v0[0] * v[1] - v0[1] * v[0]).atan2(v0[0] * v[0] + v0[1] * v[1]);

    if k < 0.0 {
        // The half-angle vector returns to −v0 every half period π/ω and
        // rotates monotonically in the direction of sign(μ).
        let w = 0.5 * (-k).sqrt();
        let half_period = PI / w;
        let n = (t / half_period).floor();
        let r = t - n * half_period;
        let mut d = turn(propagate(r));
        if mu > 0.0 && d < 0.0 {
            d += 2.0 * PI;
        } else if mu < 0.0 && d > 0.0 {
            d -= 2.0 * PI;
        }
        delta0 + 2.0 * (mu.signum() * n * PI + d)
    } else {
        // The direction moves between the invariant lines of M and turns by
        // less than π in total.
        delta0 + 2.0 * turn(propagate(t))
    }
}
