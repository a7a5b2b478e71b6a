//! Gaussian kernel density on [0, 1] with reflection at both ends, and the
//! stratification objective built from it.

use std::f64::consts::PI;

/// Bandwidth used when the automatic rule degenerates.
pub const FALLBACK_BANDWIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// Silverman's rule of thumb.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    samples: Vec<f64>,
    pub h: f64,
}

/// `0.9 · min(sd, IQR/1.34) · n^(−1/5)`, or [`FALLBACK_BANDWIDTH`] when that
/// is zero or there are fewer than two samples.
pub fn silverman(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return FALLBACK_BANDWIDTH;
    }
    let mean = ys.iter().sum::<f64>() / n as f64;
    let sd = (ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    // Rounding leaves a tiny spread in the mean of identical samples.
    if h > 1e-12 * mean.abs().max(1.0) && h.is_finite() {
        h
    } else {
        FALLBACK_BANDWIDTH
    }
}

impl Kde {
    pub fn new(ys: &[f64], bandwidth: Bandwidth) -> Self {
        let h = match bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Auto => silverman(ys),
        };
        Self {
            samples: ys.to_vec(),
            h,
        }
    }

    /// Density at `y ∈ [0, 1]`: each sample contributes its kernel and its
    /// mirror images about 0 and 1.
    pub fn density(&self, y: f64) -> f64 {
        let h = self.h;
        let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
        let sum: f64 = self
            .samples
            .iter()
            .map(|&s| phi((y - s) / h) + phi((y + s) / h) + phi((y - (2.0 - s)) / h))
            .sum();
        sum / (self.samples.len() as f64 * h)
    }
}

/// Stratification scores: `F(y_m) = 1/ĝ(y_m)` normalized by its maximum,
/// with `ĝ` the reflected KDE of all responses. Rare responses score high.
pub fn objective(ys: &[f64]) -> Vec<f64> {
    if ys.is_empty() {
        return Vec::new();
    }
    let kde = Kde::new(ys, Bandwidth::Auto);
    let f: Vec<f64> = ys.iter().map(|&y| 1.0 / kde.density(y)).collect();
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    f.iter().map(|v| v / max).collect()
}
