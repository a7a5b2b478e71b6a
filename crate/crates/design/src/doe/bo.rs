//! Upper-confidence-bound acquisition on a GP surrogate.

use rand::Rng;

use dcomp_core::rng::{rng_for, STREAM_DOE};

use super::gp::{compass_max, Gp, Hyper};
use crate::error::{DesignError, Result};

pub const DEFAULT_KAPPA: f64 = 2.0;
/// Quasi-random starts for the acquisition search.
pub const N_STARTS: usize = 64;

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Point `i` of the Halton sequence in `d ≤ 32` dimensions.
pub fn halton(i: u64, d: usize) -> Vec<f64> {
    PRIMES[..d].iter().map(|&b| radical_inverse(i, b)).collect()
}

/// Map a point of `ranges` onto the unit cube; degenerate ranges map to 0.5.
pub fn to_unit(x: &[f64], ranges: &[(f64, f64)]) -> Vec<f64> {
    x.iter()
        .zip(ranges)
        .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
        .collect()
}

pub fn from_unit(u: &[f64], ranges: &[(f64, f64)]) -> Vec<f64> {
    u.iter().zip(ranges).map(|(&v, &(lo, hi))| lo + v * (hi - lo)).collect()
}

/// `μ(x) + κ σ(x)`.
pub fn ucb(gp: &Gp, u: &[f64], kappa: f64) -> f64 {
    let (m, s) = gp.predict(u);
    m + kappa * s
}

/// Maximize the acquisition over the unit cube: compass search from the
/// first [`N_STARTS`] Halton points, randomly shifted per `(seed, iteration)`.
pub fn maximize_acquisition(gp: &Gp, d: usize, kappa: f64, seed: u64, iteration: u64) -> (Vec<f64>, f64) {
    let mut rng = rng_for(seed, &[STREAM_DOE, iteration]);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let bounds = vec![(0.0, 1.0); d];
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for s in 1..=N_STARTS as u64 {
        let start: Vec<f64> = halton(s, d).iter().zip(&shift).map(|(h, o)| (h + o).fract()).collect();
        let (x, v) = compass_max(|u| ucb(gp, u, kappa), &start, &bounds, 0.1, 1e-4, 2000);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Next design point from `(x, z)` data in original units.
pub fn bo_step(
    xs: &[Vec<f64>],
    zs: &[f64],
    ranges: &[(f64, f64)],
    hyper: &Hyper,
    kappa: f64,
    seed: u64,
    iteration: u64,
) -> Result<Vec<f64>> {
    if xs.len() < 2 {
        return Err(DesignError::Invalid("acquisition needs at least two records".into()));
    }
    if ranges.len() > PRIMES.len() {
        return Err(DesignError::Invalid(format!(
            "at most {} factors supported",
            PRIMES.len()
        )));
    }
    let units: Vec<Vec<f64>> = xs.iter().map(|x| to_unit(x, ranges)).collect();
    let gp = Gp::fit(&units, zs, hyper.clone())?;
    let (u, _) = maximize_acquisition(&gp, ranges.len(), kappa, seed, iteration);
    Ok(from_unit(&u, ranges))
}
