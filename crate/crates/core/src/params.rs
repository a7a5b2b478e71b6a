//! Model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::{Couplings, DegreeStats};

/// How the configured cross couplings `xi_ij` map onto network weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiMode {
    /// Weight is `xi_ij · N_i / d_T^(ij)`, so `xi_ij` is the effective
    /// reduced coupling and `xi_ij = 1` gives unit effective coupling.
    #[default]
    Normalized,
    /// Weight is `xi_ij` itself.
    Raw,
}

/// Every scalar parameter of the competition and phase dynamics.
///
/// Defaults are the three-population case study (carrying capacity 10,
/// Blue reduction rate 7.5, φ = 0.5, μ = 0.25).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Recruitment rates.
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Green recruitment when Blue is present.
    pub r3_max: f64,
    /// Blue's reduction rate (tactical agility in the Holling variants).
    pub beta1: f64,
    /// Red's reduction rate.
    pub beta2: f64,
    /// Blue's tactical agility when Green shelters Red.
    pub beta1_min: f64,
    /// Blue's strategic agility: sharpness of its recruitment switch.
    pub alpha: f64,
    /// Search and engagement time.
    pub tau: f64,
    /// Decay rates.
    pub x1: f64,
    pub x3: f64,
    pub x3_min: f64,
    pub x3_max: f64,
    /// Carrying capacities (three-population dimensional model only).
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    /// Mean frequency difference Blue − Red.
    pub mu: f64,
    /// Mean frequency difference Blue − Green.
    pub nu: f64,
    /// Blue's frustration towards Red.
    pub phi: f64,
    /// Red's frustration towards Blue.
    pub psi: f64,
    /// Power `n` in the synchronization feedback `O^n`.
    pub p_exponent: u32,
    /// Extinction threshold.
    #[serde(rename = "P_D")]
    pub p_d: f64,
    /// Effective couplings of the two-population reduced variants.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Internal couplings.
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    /// Cross couplings, interpreted per `xi_mode`.
    pub xi12: f64,
    pub xi13: f64,
    pub xi21: f64,
    pub xi23: f64,
    pub xi31: f64,
    pub xi32: f64,
    pub xi_mode: XiMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            r1: 3.0,
            r2: 2.5,
            r3: 1.0,
            r3_max: 1.5,
            beta1: 7.5,
            beta2: 0.2,
            beta1_min: 0.1,
            alpha: 2.0,
            tau: 1.0,
            x1: 0.25,
            x3: 0.25,
            x3_min: 0.125,
            x3_max: 0.5,
            k1: 10.0,
            k2: 10.0,
            k3: 10.0,
            mu: 0.25,
            nu: -0.25,
            phi: 0.5,
            psi: 0.0,
            p_exponent: 1,
            p_d: 1e-4,
            gamma1: 1.0,
            gamma2: 1.0,
            sigma1: 4.0,
            sigma2: 2.0,
            sigma3: 2.0,
            xi12: 1.0,
            xi13: 1.0,
            xi21: 1.0,
            xi23: 1.0,
            xi31: 1.0,
            xi32: 1.0,
            xi_mode: XiMode::Normalized,
        }
    }
}

/// Names accepted by [`ModelConfig::get`] and [`ModelConfig::set`].
pub const PARAM_NAMES: &[&str] = &[
    "r1",
    "r2",
    "r3",
    "r3_max",
    "beta1",
    "beta2",
    "beta1_min",
    "alpha",
    "tau",
    "x1",
    "x3",
    "x3_min",
    "x3_max",
    "K1",
    "K2",
    "K3",
    "mu",
    "nu",
    "phi",
    "psi",
    "p_exponent",
    "P_D",
    "gamma1",
    "gamma2",
    "sigma1",
    "sigma2",
    "sigma3",
    "xi12",
    "xi13",
    "xi21",
    "xi23",
    "xi31",
    "xi32",
];

/// Parameters that change the coupled network rather than only the
/// population equations.
pub const NETWORK_PARAMS: &[&str] = &[
    "mu", "nu", "phi", "psi", "sigma1", "sigma2", "sigma3", "xi12", "xi13", "xi21", "xi23", "xi31", "xi32",
];

impl ModelConfig {
    /// Two-population case study (γ₁ = γ₂ = 1, ψ = 0, β₂ = 2, r₁ = 3,
    /// r₂ = 2.5, φ = μ = 0.2, β₁ = 2).
    pub fn simple_case_study() -> Self {
        Self {
            beta1: 2.0,
            beta2: 2.0,
            phi: 0.2,
            mu: 0.2,
            psi: 0.0,
            gamma1: 1.0,
            gamma2: 1.0,
            sigma1: 4.0,
            sigma2: 2.0,
            ..Self::default()
        }
    }

    /// Nondimensional two-population Holling model (α = 20, τ = 1,
    /// x₁ = 0.25, β₂ = 2), with the published panel values β₁ = 7.5,
    /// φ = 0.2, μ = 0.25.
    pub fn eco2_case_study() -> Self {
        Self {
            alpha: 20.0,
            tau: 1.0,
            x1: 0.25,
            beta2: 2.0,
            beta1: 7.5,
            phi: 0.2,
            mu: 0.25,
            psi: 0.0,
            gamma1: 1.0,
            gamma2: 1.0,
            ..Self::default()
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "r1" => &mut self.r1,
            "r2" => &mut self.r2,
            "r3" => &mut self.r3,
            "r3_max" => &mut self.r3_max,
            "beta1" => &mut self.beta1,
            "beta2" => &mut self.beta2,
            "beta1_min" => &mut self.beta1_min,
            "alpha" => &mut self.alpha,
            "tau" => &mut self.tau,
            "x1" => &mut self.x1,
            "x3" => &mut self.x3,
            "x3_min" => &mut self.x3_min,
            "x3_max" => &mut self.x3_max,
            "K1" => &mut self.k1,
            "K2" => &mut self.k2,
            "K3" => &mut self.k3,
            "mu" => &mut self.mu,
            "nu" => &mut self.nu,
            "phi" => &mut self.phi,
            "psi" => &mut self.psi,
            "P_D" => &mut self.p_d,
            "gamma1" => &mut self.gamma1,
            "gamma2" => &mut self.gamma2,
            "sigma1" => &mut self.sigma1,
            "sigma2" => &mut self.sigma2,
            "sigma3" => &mut self.sigma3,
            "xi12" => &mut self.xi12,
            "xi13" => &mut self.xi13,
            "xi21" => &mut self.xi21,
            "xi23" => &mut self.xi23,
            "xi31" => &mut self.xi31,
            "xi32" => &mut self.xi32,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        if name == "p_exponent" {
            return Ok(self.p_exponent as f64);
        }
        self.clone()
            .slot(name)
            .map(|v| *v)
            .ok_or_else(|| CoreError::UnknownParameter(name.to_string()))
    }

    /// Set a parameter by name. `p_exponent` accepts integral values only.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if name == "p_exponent" {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "p_exponent must be a natural number, got {value}"
                )));
            }
            self.p_exponent = value as u32;
            return Ok(());
        }
        let slot = self
            .slot(name)
            .ok_or_else(|| CoreError::UnknownParameter(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    /// Check the invariants: finite values, nonnegative rates, positive
    /// capacities, a small positive extinction threshold and `n ∈ {1, 2}`.
    pub fn validate(&self) -> Result<()> {
        for &name in PARAM_NAMES {
            let v = self.get(name)?;
            if !v.is_finite() {
                return Err(CoreError::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        let nonneg = [
            "r1",
            "r2",
            "r3",
            "r3_max",
            "beta1",
            "beta2",
            "beta1_min",
            "alpha",
            "tau",
            "x1",
            "x3",
            "x3_min",
            "x3_max",
            "gamma1",
            "gamma2",
            "sigma1",
            "sigma2",
            "sigma3",
            "xi12",
            "xi13",
            "xi21",
            "xi23",
            "xi31",
            "xi32",
        ];
        for name in nonneg {
            if self.get(name)? < 0.0 {
                return Err(CoreError::InvalidParameter(format!("{name} must be nonnegative")));
            }
        }
        if self.k1 <= 0.0 || self.k2 <= 0.0 || self.k3 <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "carrying capacities must be positive".into(),
            ));
        }
        if !(self.p_d > 0.0 && self.p_d < 0.1) {
            return Err(CoreError::InvalidParameter(format!(
                "P_D = {} must lie in (0, 0.1)",
                self.p_d
            )));
        }
        if !matches!(self.p_exponent, 1 | 2) {
            return Err(CoreError::InvalidParameter(format!(
                "p_exponent must be 1 or 2, got {}",
                self.p_exponent
            )));
        }
        Ok(())
    }

    /// Configured cross couplings as a matrix indexed `[i][j]`.
    pub fn xi_matrix(&self) -> Vec<Vec<f64>> {
        vec![
            vec![0.0, self.xi12, self.xi13],
            vec![self.xi21, 0.0, self.xi23],
            vec![self.xi31, self.xi32, 0.0],
        ]
    }

    /// Network coupling strengths for `n_pop` populations with the given
    /// degree aggregates.
    pub fn couplings(&self, stats: &DegreeStats) -> Couplings {
        let np = stats.sizes.len();
        let raw = self.xi_matrix();
        let xi = (0..np)
            .map(|i| {
                (0..np)
                    .map(|j| match (i == j, self.xi_mode) {
                        (true, _) => 0.0,
                        (false, XiMode::Raw) => raw[i][j],
                        (false, XiMode::Normalized) => raw[i][j] * stats.normalized_xi(i, j),
                    })
                    .collect()
            })
            .collect();
        Couplings {
            sigma: [self.sigma1, self.sigma2, self.sigma3][..np].to_vec(),
            xi,
            phi: self.phi,
            psi: self.psi,
        }
    }

    /// Effective reduced coupling `ξ_ij d_T^(ij) / N_i` between populations.
    pub fn effective_gamma(&self, stats: &DegreeStats, i: usize, j: usize) -> f64 {
        match self.xi_mode {
            XiMode::Normalized if stats.d_total(i, j) > 0 => self.xi_matrix()[i][j],
            XiMode::Normalized => 0.0,
            XiMode::Raw => stats.gamma(i, j, self.xi_matrix()[i][j]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NetworkSpec;

    #[test]
    fn names_round_trip() {
        let mut cfg = ModelConfig::default();
        for (i, &name) in PARAM_NAMES.iter().enumerate() {
            let v = if name == "p_exponent" {
                2.0
            } else {
                0.01 * (i + 1) as f64
            };
            cfg.set(name, v).unwrap();
            assert_eq!(cfg.get(name).unwrap(), v, "{name}");
        }
        assert!(matches!(cfg.set("bogus", 1.0), Err(CoreError::UnknownParameter(_))));
        assert!(cfg.set("p_exponent", 1.5).is_err());
    }

    #[test]
    fn json_uses_published_names() {
        let json = serde_json::to_value(ModelConfig::default()).unwrap();
        assert_eq!(json["K1"], 10.0);
        assert_eq!(json["P_D"], 1e-4);
        assert_eq!(json["xi_mode"], "normalized");
        let bad = serde_json::from_str::<ModelConfig>(r#"{"betaX": 1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn defaults_validate() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::simple_case_study().validate().unwrap();
        ModelConfig::eco2_case_study().validate().unwrap();
        let mut cfg = ModelConfig::default();
        cfg.p_exponent = 3;
        assert!(cfg.validate().is_err());
        cfg.p_exponent = 1;
        cfg.beta1 = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn normalized_xi_gives_unit_gamma() {
        let stats = NetworkSpec::paper_usecase().degree_stats(0).unwrap();
        let cfg = ModelConfig::default();
        let c = cfg.couplings(&stats);
        assert!((c.xi[0][1] - 21.0 / 16.0).abs() < 1e-15);
        assert!((c.xi[0][2] - 21.0 / 5.0).abs() < 1e-15);
        assert!((cfg.effective_gamma(&stats, 0, 1) - 1.0).abs() < 1e-15);
        let raw = ModelConfig {
            xi_mode: XiMode::Raw,
            ..cfg
        };
        assert!((raw.effective_gamma(&stats, 0, 1) - 16.0 / 21.0).abs() < 1e-15);
    }
}
