//! Nearly orthogonal Latin hypercubes by annealed column permutations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use dcomp_core::rng::{rng_for, STREAM_DOE};

use crate::error::{DesignError, Result};

/// Correlation the annealer aims for.
pub const TARGET_CORR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignMatrix {
    /// `points[i][j]`: factor `j` of design point `i`.
    pub points: Vec<Vec<f64>>,
    pub ranges: Vec<(f64, f64)>,
    /// Largest absolute pairwise column correlation; 0 for one factor.
    pub max_abs_corr: f64,
}

impl DesignMatrix {
    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.ranges.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[j]).collect()
    }
}

/// Level `i` of `k` stratified levels in `[lo, hi]`: the centre of stratum `i`.
pub fn level(i: usize, k: usize, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (i as f64 + 0.5) / k as f64
}

/// Largest absolute off-diagonal correlation of a level-index design.
fn max_corr(dots: &[Vec<f64>], norm: f64) -> f64 {
    let d = dots.len();
    let mut m = 0.0f64;
    for a in 0..d {
        for b in a + 1..d {
            m = m.max((dots[a][b] / norm).abs());
        }
    }
    m
}

/// Latin hypercube with `k` points in `d` factors. Column 0 keeps the level
/// order; the others are permuted to drive pairwise correlations down by
/// simulated annealing on the sum of fourth powers of the correlations,
/// keeping the design with the smallest maximum.
pub fn build_design(d: usize, k: usize, ranges: &[(f64, f64)], seed: u64) -> Result<DesignMatrix> {
    if d == 0 || k == 0 {
        return Err(DesignError::Invalid(
            "design needs at least one factor and one point".into(),
        ));
    }
    if ranges.len() != d {
        return Err(DesignError::Invalid(format!("{} ranges for {d} factors", ranges.len())));
    }
    if ranges
        .iter()
        .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(DesignError::Invalid("factor ranges must be finite with lo ≤ hi".into()));
    }
    let mut rng = rng_for(seed, &[STREAM_DOE, u64::MAX]);
    // Centred level values; all columns share mean 0 and the same norm.
    let centred: Vec<f64> = (0..k).map(|i| i as f64 - 0.5 * (k as f64 - 1.0)).collect();
    let norm: f64 = centred.iter().map(|v| v * v).sum();
    let mut cols: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let mut c: Vec<usize> = (0..k).collect();
            if j > 0 {
                c.shuffle(&mut rng);
            }
            c
        })
        .collect();

    let dot = |a: &[usize], b: &[usize]| a.iter().zip(b).map(|(&x, &y)| centred[x] * centred[y]).sum::<f64>();
    let mut dots = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in a + 1..d {
            dots[a][b] = dot(&cols[a], &cols[b]);
            dots[b][a] = dots[a][b];
        }
    }
    let energy = |dots: &[Vec<f64>]| {
        let mut e = 0.0;
        for a in 0..d {
            for b in a + 1..d {
                e += (dots[a][b] / norm).powi(4);
            }
        }
        e
    };

    let mut best_cols = cols.clone();
    let mut best = if d > 1 && k > 1 { max_corr(&dots, norm) } else { 0.0 };
    if d > 1 && k > 2 {
        let mut e = energy(&dots);
        let steps = 4000 * d * d.max(4);
        let mut temp = e.max(1e-12) * 0.1;
        let cooling = (1e-6f64).powf(1.0 / steps as f64);
        let mut delta = vec![0.0; d];
        for _ in 0..steps {
            let c = rng.random_range(1..d);
            let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
            if i == j {
                continue;
            }
            let (vi, vj) = (centred[cols[c][i]], centred[cols[c][j]]);
            let mut e_new = e;
            for o in 0..d {
                if o == c {
                    continue;
                }
                let (oi, oj) = (centred[cols[o][i]], centred[cols[o][j]]);
                delta[o] = (vj - vi) * (oi - oj);
                let old = (dots[c][o] / norm).powi(4);
                let new = ((dots[c][o] + delta[o]) / norm).powi(4);
                e_new += new - old;
            }
            if e_new <= e || rng.random::<f64>() < ((e - e_new) / temp).exp() {
                cols[c].swap(i, j);
                for o in 0..d {
                    if o != c {
                        dots[c][o] += delta[o];
                        dots[o][c] = dots[c][o];
                    }
                }
                e = e_new;
                let m = max_corr(&dots, norm);
                if m < best {
                    best = m;
                    best_cols.clone_from(&cols);
                    if best < 0.2 * TARGET_CORR {
                        break;
                    }
                }
            }
            temp *= cooling;
        }
    }

    let points = (0..k)
        .map(|i| {
            (0..d)
                .map(|j| level(best_cols[j][i], k, ranges[j].0, ranges[j].1))
                .collect()
        })
        .collect();
    Ok(DesignMatrix {
        points,
        ranges: ranges.to_vec(),
        max_abs_corr: best,
    })
}

/// Pearson correlation of two equal-length columns.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}
