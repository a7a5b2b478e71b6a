//! Kuramoto–Sakaguchi phase dynamics and phase statistics.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::CoupledNetwork;

/// Phase rates `ω_k + H_k Σ_l W_kl sin(θ_l − θ_k + Φ_kl)` written into `out`.
///
/// `h` holds one feedback factor per population; every node of population
/// `i` is scaled by `h[i]`.
pub fn kuramoto_rhs_into(theta: &[f64], net: &CoupledNetwork, h: &[f64], out: &mut [f64]) {
    let omega = net.omega();
    for i in 0..net.n_populations() {
        let hi = h[i];
        for k in net.range(i) {
            let tk = theta[k];
            let coupling: f64 = net
                .row(k)
                .iter()
                .map(|e| e.weight * (theta[e.col] - tk + e.lag).sin())
                .sum();
            out[k] = omega[k] + hi * coupling;
        }
    }
}

/// Checked variant of [`kuramoto_rhs_into`] with one feedback value per node.
pub fn kuramoto_rhs(theta: &[f64], net: &CoupledNetwork, h: &[f64]) -> Result<Vec<f64>> {
    let n = net.n_nodes();
    if theta.len() != n {
        return Err(CoreError::Dimension {
            expected: n,
            got: theta.len(),
        });
    }
    if h.len() != n {
        return Err(CoreError::Dimension {
            expected: n,
            got: h.len(),
        });
    }
    let omega = net.omega();
    Ok((0..n)
        .map(|k| {
            let coupling: f64 = net
                .row(k)
                .iter()
                .map(|e| e.weight * (theta[e.col] - theta[k] + e.lag).sin())
                .sum();
            omega[k] + h[k] * coupling
        })
        .collect())
}

/// Modulus of the mean unit phasor over `subset`.
pub fn order_parameter(theta: &[f64], subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(CoreError::EmptySubset);
    }
    let (s, c) = subset
        .iter()
        .fold((0.0, 0.0), |(s, c), &k| (s + theta[k].sin(), c + theta[k].cos()));
    Ok((s.hypot(c) / subset.len() as f64).min(1.0))
}

fn wrap_step(d: f64) -> f64 {
    if d > PI {
        d - TAU
    } else if d < -PI {
        d + TAU
    } else {
        d
    }
}

/// Net number of 2π turns along the cyclic node sequence
/// `θ_0, θ_1, …, θ_{N−1}, θ_0`, each step wrapped into [−π, π].
pub fn winding_number(theta: &[f64]) -> i64 {
    let n = theta.len();
    if n < 2 {
        return 0;
    }
    let total: f64 = (0..n)
        .map(|i| wrap_step((theta[(i + 1) % n] - theta[i]).rem_euclid(TAU)))
        .sum();
    (total / TAU).round() as i64
}

/// Circular centroid algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentroidMethod {
    /// Running mean; each new phase is shifted by the multiple of 2π that
    /// brings it closest to the current mean.
    #[default]
    Recurrence,
    /// Running mean on phases reduced to [0, 2π), shifting a phase by one
    /// turn towards the mean when the two are more than π apart.
    Pseudocode,
}

/// Centroid of a cluster of phases, in [0, 2π).
pub fn circular_centroid(theta: impl IntoIterator<Item = f64>) -> f64 {
    circular_centroid_with(theta, CentroidMethod::Recurrence)
}

pub fn circular_centroid_with(theta: impl IntoIterator<Item = f64>, method: CentroidMethod) -> f64 {
    let mut it = theta.into_iter();
    let Some(first) = it.next() else {
        return 0.0;
    };
    let mean = match method {
        CentroidMethod::Recurrence => {
            let mut mean = first;
            for (idx, t) in it.enumerate() {
                let n = (idx + 2) as f64;
                let x = (mean - t) / TAU;
                let (lo, hi) = (x.floor(), x.ceil());
                let d_lo = (t - mean + TAU * lo).abs();
                let d_hi = (t - mean + TAU * hi).abs();
                let k = if d_hi < d_lo { hi } else { lo };
                mean += (t - mean + TAU * k) / n;
            }
            mean
        }
        CentroidMethod::Pseudocode => {
            let mut mean = first.rem_euclid(TAU);
            for (idx, t) in it.enumerate() {
                let n = (idx + 2) as f64;
                let mut t = t.rem_euclid(TAU);
                if (t - mean).abs() > PI {
                    t += (mean - PI).signum() * TAU;
                }
                mean += (t - mean) / n;
            }
            mean
        }
    };
    let r = mean.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Centroid of the phases of the given nodes.
pub fn subset_centroid(theta: &[f64], subset: impl IntoIterator<Item = usize>, method: CentroidMethod) -> f64 {
    circular_centroid_with(subset.into_iter().map(|k| theta[k]), method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assemble, Couplings, Graph, InterLinks, Partition};
    use proptest::prelude::*;

    fn circ_dist(a: f64, b: f64) -> f64 {
        wrap_step((a - b).rem_euclid(TAU)).abs()
    }

    /// Two single-node populations joined by one link.
    fn pair(w12: f64, w21: f64, phi: f64) -> CoupledNetwork {
        assemble(
            vec![Graph::empty(1), Graph::empty(1)],
            vec![InterLinks::new(0, 1, vec![(0, 0)])],
            Couplings {
                sigma: vec![0.0; 2],
                xi: vec![vec![0.0, w12], vec![w21, 0.0]],
                phi,
                psi: 0.0,
            },
            vec![Partition::leading(1, 0); 2],
            vec![0.0; 2],
        )
        .unwrap()
    }

    #[test]
    fn rhs_examples() {
        let net = pair(1.0, 1.0, 0.0);
        let r = kuramoto_rhs(&[0.0, PI / 2.0], &net, &[1.0, 1.0]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && (r[1] + 1.0).abs() < 1e-15);
        let r = kuramoto_rhs(&[0.0, PI / 2.0], &net, &[0.0, 1.0]).unwrap();
        assert_eq!(r[0], 0.0);
        assert!((r[1] + 1.0).abs() < 1e-15);

        let net = pair(1.0, 0.0, 0.2);
        let r = kuramoto_rhs(&[0.0, 0.0], &net, &[1.0, 1.0]).unwrap();
        assert!((r[0] - 0.2f64.sin()).abs() < 1e-15);
        assert!((r[0] - 0.198669).abs() < 1e-6);
        assert_eq!(r[1], 0.0);

        assert!(kuramoto_rhs(&[0.0], &net, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn rhs_into_matches_checked() {
        let net = pair(0.7, 1.3, 0.4);
        let theta = [0.3, -1.2];
        let mut out = [0.0; 2];
        kuramoto_rhs_into(&theta, &net, &[0.5, 0.25], &mut out);
        let r = kuramoto_rhs(&theta, &net, &[0.5, 0.25]).unwrap();
        assert_eq!(out.to_vec(), r);
    }

    #[test]
    fn order_parameter_examples() {
        assert!((order_parameter(&[0.3; 4], &[0, 1, 2, 3]).unwrap() - 1.0).abs() < 1e-15);
        assert!(order_parameter(&[0.0, PI], &[0, 1]).unwrap() < 1e-15);
        let o = order_parameter(&[0.0, PI / 2.0], &[0, 1]).unwrap();
        assert!((o - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(order_parameter(&[0.0], &[]), Err(CoreError::EmptySubset)));
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&[1.0; 5]), 0);
        let up: Vec<f64> = (0..3).map(|i| TAU * i as f64 / 3.0).collect();
        assert_eq!(winding_number(&up), 1);
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert_eq!(winding_number(&down), -1);
    }

    #[test]
    fn centroid_examples() {
        assert!((circular_centroid([0.1, 0.2, 0.3]) - 0.2).abs() < 1e-15);
        assert!(circ_dist(circular_centroid([TAU - 0.1, 0.1]), 0.0) < 1e-15);
        for m in [CentroidMethod::Recurrence, CentroidMethod::Pseudocode] {
            assert!((circular_centroid_with([0.1, 0.2, 0.3], m) - 0.2).abs() < 1e-15);
            assert!(circ_dist(circular_centroid_with([TAU - 0.1, 0.1], m), 0.0) < 1e-15);
        }
    }

    #[test]
    fn centroid_tie_goes_to_smaller_shift() {
        // 0 and π are equidistant under k = 0 and k = -1; k = -1 yields −π/2.
        let c = circular_centroid([0.0, PI]);
        assert!((c - 1.5 * PI).abs() < 1e-15);
    }

    /// Unwrap every phase to the representative nearest the first one and
    /// average.
    fn unwrap_mean(theta: &[f64]) -> f64 {
        let base = theta[0];
        let s: f64 = theta
            .iter()
            .map(|&t| base + wrap_step((t - base).rem_euclid(TAU)))
            .sum();
        (s / theta.len() as f64).rem_euclid(TAU)
    }

    proptest! {
        #[test]
        fn centroid_of_narrow_cluster_is_unwrapped_mean(
            center in 0.0..TAU,
            offsets in prop::collection::vec(-1.4f64..1.4, 10),
            turns in prop::collection::vec(-3i32..3, 10),
        ) {
            let theta: Vec<f64> = offsets
                .iter()
                .zip(&turns)
                .map(|(o, &k)| center + o + TAU * k as f64)
                .collect();
            let c = circular_centroid(theta.iter().copied());
            prop_assert!(circ_dist(c, unwrap_mean(&theta)) < 1e-9);
            let shifted = circular_centroid(theta.iter().map(|t| t + 0.77));
            prop_assert!(circ_dist(shifted, c + 0.77) < 1e-9);
        }

        #[test]
        fn synchronized_input_is_exact(t in -20.0f64..20.0, n in 1usize..12) {
            let theta = vec![t; n];
            prop_assert!(circ_dist(circular_centroid(theta.iter().copied()), t) < 1e-12);
            let idx: Vec<usize> = (0..n).collect();
            prop_assert!((order_parameter(&theta, &idx).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn order_parameter_invariances(
            theta in prop::collection::vec(-10.0f64..10.0, 2..10),
            c in -5.0f64..5.0,
        ) {
            let idx: Vec<usize> = (0..theta.len()).collect();
            let rev: Vec<usize> = idx.iter().rev().copied().collect();
            let o = order_parameter(&theta, &idx).unwrap();
            let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
            prop_assert!((order_parameter(&shifted, &idx).unwrap() - o).abs() < 1e-12);
            prop_assert!((order_parameter(&theta, &rev).unwrap() - o).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&o));
        }

        #[test]
        fn winding_invariant_under_global_shift(
            theta in prop::collection::vec(-10.0f64..10.0, 2..10),
            c in -5.0f64..5.0,
        ) {
            let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
            prop_assert_eq!(winding_number(&theta), winding_number(&shifted));
        }

        #[test]
        fn rhs_equivariant_under_global_shift(
            t0 in -5.0f64..5.0, t1 in -5.0f64..5.0, c in -5.0f64..5.0, phi in -3.0f64..3.0,
        ) {
            let net = pair(0.8, 1.1, phi);
            let a = kuramoto_rhs(&[t0, t1], &net, &[1.0, 0.6]).unwrap();
            let b = kuramoto_rhs(&[t0 + c, t1 + c], &net, &[1.0, 0.6]).unwrap();
            prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }
}
