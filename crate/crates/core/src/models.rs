//! Right-hand sides of the competition models.
//!
//! State layout is `[P_1, …, P_np, rest]` where `rest` is the full phase
//! vector for networked variants and the centroid differences for reduced
//! ones (`Δ = θ̄₁ − θ̄₂` for two populations, `Δ₁ = θ̄₁ − θ̄₂` and
//! `Δ₂ = θ̄₁ − θ̄₃` for three).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::{degree_stats, CoupledNetwork, DegreeStats, NetworkSpec};
use crate::params::ModelConfig;
use crate::phase::{kuramoto_rhs_into, order_parameter, subset_centroid, CentroidMethod};
use crate::solver::OdeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Logistic competition with sinusoidal initiative, networked phases.
    Simple,
    /// [`Variant::Simple`] with the two-cluster centroid reduction.
    SimpleReduced,
    /// [`Variant::Simple`] with order-parameter feedback on logistics and
    /// initiative.
    Feedback,
    /// Blue, Red and non-competing Green with Holling response, dimensional.
    Eco3,
    /// [`Variant::Eco3`] with the three-cluster centroid reduction.
    Eco3Reduced,
    /// Nondimensional Blue/Red model with adaptive recruitment and Holling
    /// response.
    Eco2,
    /// [`Variant::Eco2`] with the two-cluster centroid reduction.
    Eco2Reduced,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Simple,
        Variant::SimpleReduced,
        Variant::Feedback,
        Variant::Eco3,
        Variant::Eco3Reduced,
        Variant::Eco2,
        Variant::Eco2Reduced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Simple => "simple",
            Variant::SimpleReduced => "simple-reduced",
            Variant::Feedback => "feedback",
            Variant::Eco3 => "eco3",
            Variant::Eco3Reduced => "eco3-reduced",
            Variant::Eco2 => "eco2",
            Variant::Eco2Reduced => "eco2-reduced",
        }
    }

    pub fn is_reduced(self) -> bool {
        matches!(
            self,
            Variant::SimpleReduced | Variant::Eco3Reduced | Variant::Eco2Reduced
        )
    }

    pub fn n_populations(self) -> usize {
        match self {
            Variant::Eco3 | Variant::Eco3Reduced => 3,
            _ => 2,
        }
    }

    /// Number of centroid differences carried by a reduced state.
    pub fn n_deltas(self) -> usize {
        self.n_populations() - 1
    }

    /// Whether the populations are dimensional with capacities `K_i`.
    pub fn is_dimensional(self) -> bool {
        self.n_populations() == 3
    }

    /// Whether order-parameter feedback enters the population equations.
    fn uses_orders(self) -> bool {
        matches!(self, Variant::Feedback | Variant::Eco3 | Variant::Eco2)
    }

    /// The reduced model sharing this variant's population equations.
    pub fn reduced(self) -> Variant {
        match self {
            Variant::Simple | Variant::Feedback | Variant::SimpleReduced => Variant::SimpleReduced,
            Variant::Eco3 | Variant::Eco3Reduced => Variant::Eco3Reduced,
            Variant::Eco2 | Variant::Eco2Reduced => Variant::Eco2Reduced,
        }
    }

    /// Default network for the networked variants and for the degree
    /// aggregates of the three-population reduction.
    pub fn default_network(self) -> NetworkSpec {
        if self.n_populations() == 3 {
            NetworkSpec::paper_usecase()
        } else {
            NetworkSpec::paper_usecase_two()
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| CoreError::UnknownVariant(s.to_string()))
    }
}

/// Coefficients of the two-cluster centroid equation
/// `Δ' = μ + S cos Δ − C sin Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentroidCoeffs {
    pub c: f64,
    pub s: f64,
    /// Discriminant `C² + S² − μ²`.
    pub k_disc: f64,
}

/// Two-cluster phase parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCluster {
    pub gamma1: f64,
    pub gamma2: f64,
    pub phi: f64,
    pub psi: f64,
    pub mu: f64,
}

impl TwoCluster {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self {
            gamma1: cfg.gamma1,
            gamma2: cfg.gamma2,
            phi: cfg.phi,
            psi: cfg.psi,
            mu: cfg.mu,
        }
    }

    pub fn coeffs(&self, h1: f64, h2: f64) -> CentroidCoeffs {
        centroid_coeffs(self.gamma1, self.gamma2, self.phi, self.psi, self.mu, h1, h2)
    }

    /// `Δ'` at feedback levels `h1`, `h2`.
    pub fn rate(&self, delta: f64, h1: f64, h2: f64) -> f64 {
        let k = self.coeffs(h1, h2);
        self.mu + k.s * delta.cos() - k.c * delta.sin()
    }
}

/// `C = γ₁H₁ cos φ + γ₂H₂ cos ψ`, `S = γ₁H₁ sin φ − γ₂H₂ sin ψ`.
pub fn centroid_coeffs(gamma1: f64, gamma2: f64, phi: f64, psi: f64, mu: f64, h1: f64, h2: f64) -> CentroidCoeffs {
    let a = gamma1 * h1;
    let b = gamma2 * h2;
    let c = a * phi.cos() + b * psi.cos();
    let s = a * phi.sin() - b * psi.sin();
    CentroidCoeffs {
        c,
        s,
        k_disc: c * c + s * s - mu * mu,
    }
}

/// Effective couplings `γ_ij` of the three-cluster reduction, `[i][j]`.
pub type Gamma3 = [[f64; 3]; 3];

pub fn gamma3(cfg: &ModelConfig, stats: &DegreeStats) -> Gamma3 {
    let mut g = [[0.0; 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                *v = cfg.effective_gamma(stats, i, j);
            }
        }
    }
    g
}

/// Initiative factor `(sin x + 2) / 2`.
#[inline]
pub fn initiative(x: f64) -> f64 {
    0.5 * (x.sin() + 2.0)
}

/// Synchronization factors on logistics (strategic) and initiative
/// (tactical), already raised to the feedback power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orders {
    pub strategic: [f64; 3],
    pub tactical: [f64; 3],
}

impl Orders {
    pub const SYNC: Orders = Orders {
        strategic: [1.0; 3],
        tactical: [1.0; 3],
    };
}

/// Population rates of `variant` given the Blue–Red centroid difference
/// `d12 = θ̄₁ − θ̄₂` and synchronization factors.
pub fn population_rates(variant: Variant, cfg: &ModelConfig, p: &[f64], d12: f64, o: &Orders, dp: &mut [f64]) {
    let (p1, p2) = (p[0], p[1]);
    let blue_init = initiative(d12);
    let red_init = initiative(-d12);
    match variant {
        Variant::Simple | Variant::SimpleReduced | Variant::Feedback => {
            dp[0] = cfg.r1 * p1 * (1.0 - p1) * o.strategic[0] - cfg.beta2 * p1 * p2 * o.tactical[1] * red_init;
            dp[1] = cfg.r2 * p2 * (1.0 - p2) * o.strategic[1] - cfg.beta1 * p2 * p1 * o.tactical[0] * blue_init;
        }
        Variant::Eco2 | Variant::Eco2Reduced => {
            let recruit = cfg.r1 * cfg.alpha * p2 / (1.0 + cfg.alpha * p2);
            let holling = cfg.beta1 * p2 / (1.0 + cfg.tau * cfg.beta1 * p2);
            dp[0] = recruit * p1 * (1.0 - p1) * o.strategic[0]
                - cfg.beta2 * p1 * p2 * o.tactical[1] * red_init
                - cfg.x1 * p1;
            dp[1] = cfg.r2 * p2 * (1.0 - p2) * o.strategic[1] - holling * p1 * o.tactical[0] * blue_init;
        }
        Variant::Eco3 | Variant::Eco3Reduced => {
            let p3 = p[2];
            let r1s = cfg.r1 * cfg.alpha * p2 / (1.0 + cfg.alpha * p2);
            let beta1s = (cfg.beta1 + cfg.beta1_min * p3) / (1.0 + p3);
            let f12 = beta1s * p2 / (1.0 + cfg.tau * beta1s * p2);
            let r3s = (cfg.r3 + cfg.r3_max * p1) / (1.0 + p1);
            let x3s = cfg.x3 - (cfg.x3 - cfg.x3_min) * p1 / (1.0 + p1) + (cfg.x3_max - cfg.x3) * p2 / (1.0 + p2);
            dp[0] = r1s * p1 * (1.0 - p1 / cfg.k1) * o.strategic[0]
                - cfg.beta2 * p1 * p2 * o.tactical[1] * red_init
                - cfg.x1 * p1;
            dp[1] = cfg.r2 * p2 * (1.0 - p2 / cfg.k2) * o.strategic[1] - f12 * p1 * o.tactical[0] * blue_init;
            dp[2] = r3s * p3 * (1.0 - p3 / cfg.k3) * o.strategic[2] - x3s * p3;
        }
    }
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// A model variant bound to its parameters and, for networked variants, its
/// network. Implements [`OdeSystem`].
#[derive(Debug, Clone)]
pub struct Model {
    pub variant: Variant,
    pub cfg: ModelConfig,
    net: Option<Arc<CoupledNetwork>>,
    gamma3: Gamma3,
    /// Centroid algorithm for networked variants.
    pub centroid: CentroidMethod,
    /// Freeze populations and run phases with full coupling (`H = 1`).
    pub phase_only: bool,
    strategic: Vec<Vec<usize>>,
    tactical: Vec<Vec<usize>>,
}

impl Model {
    /// Reduced variant. `stats` supplies the degree aggregates needed by the
    /// three-population reduction and is ignored otherwise.
    pub fn reduced(variant: Variant, cfg: ModelConfig, stats: Option<&DegreeStats>) -> Result<Self> {
        if !variant.is_reduced() {
            return Err(CoreError::InvalidParameter(format!(
                "{variant} is not a reduced variant"
            )));
        }
        let gamma3 = match (variant, stats) {
            (Variant::Eco3Reduced, Some(s)) => gamma3(&cfg, s),
            (Variant::Eco3Reduced, None) => {
                return Err(CoreError::InvalidParameter(
                    "eco3-reduced needs degree aggregates".into(),
                ))
            }
            _ => [[0.0; 3]; 3],
        };
        Ok(Self {
            variant,
            cfg,
            net: None,
            gamma3,
            centroid: CentroidMethod::default(),
            phase_only: false,
            strategic: Vec::new(),
            tactical: Vec::new(),
        })
    }

    /// Networked variant on an assembled network.
    pub fn networked(variant: Variant, cfg: ModelConfig, net: Arc<CoupledNetwork>) -> Result<Self> {
        if variant.is_reduced() {
            return Err(CoreError::InvalidParameter(format!("{variant} is a reduced variant")));
        }
        if net.n_populations() != variant.n_populations() {
            return Err(CoreError::Dimension {
                expected: variant.n_populations(),
                got: net.n_populations(),
            });
        }
        let np = net.n_populations();
        let strategic: Vec<Vec<usize>> = (0..np).map(|i| net.strategic_nodes(i)).collect();
        let tactical: Vec<Vec<usize>> = (0..np).map(|i| net.tactical_nodes(i)).collect();
        if variant.uses_orders() && strategic.iter().chain(&tactical).any(Vec::is_empty) {
            return Err(CoreError::Validation(format!(
                "{variant} needs nonempty strategic and tactical sets in every population"
            )));
        }
        let gamma3 = gamma3(&cfg, &degree_stats(&net));
        Ok(Self {
            variant,
            cfg,
            net: Some(net),
            gamma3,
            centroid: CentroidMethod::default(),
            phase_only: false,
            strategic,
            tactical,
        })
    }

    /// Build the variant from a network description, generating graphs and
    /// frequencies from `seed`.
    pub fn build(variant: Variant, cfg: ModelConfig, network: &NetworkSpec, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if network.populations.len() != variant.n_populations() {
            return Err(CoreError::Validation(format!(
                "{variant} needs {} populations, network has {}",
                variant.n_populations(),
                network.populations.len()
            )));
        }
        if variant.is_reduced() {
            let stats = network.degree_stats(seed)?;
            Self::reduced(variant, cfg, Some(&stats))
        } else {
            let stats = network.degree_stats(seed)?;
            let couplings = cfg.couplings(&stats);
            let net = network.build(couplings, cfg.mu, cfg.nu, seed)?;
            Self::networked(variant, cfg, Arc::new(net))
        }
    }

    pub fn network(&self) -> Option<&CoupledNetwork> {
        self.net.as_deref()
    }

    pub fn gamma3(&self) -> &Gamma3 {
        &self.gamma3
    }

    pub fn n_populations(&self) -> usize {
        self.variant.n_populations()
    }

    pub fn two_cluster(&self) -> TwoCluster {
        TwoCluster::from_config(&self.cfg)
    }

    /// Copy with populations frozen and full phase coupling.
    pub fn phase_only(&self) -> Self {
        Self {
            phase_only: true,
            ..self.clone()
        }
    }

    /// Capacity used to scale the feedback `H = 1 − P_adv / K_adv`.
    fn capacity(&self, i: usize) -> f64 {
        if self.variant.is_dimensional() {
            [self.cfg.k1, self.cfg.k2, self.cfg.k3][i]
        } else {
            1.0
        }
    }

    /// Feedback on Blue and Red coupling; unclamped for reduced variants,
    /// clamped to [0, 1] for networked ones.
    pub fn feedback(&self, p: &[f64]) -> (f64, f64) {
        if self.phase_only {
            return (1.0, 1.0);
        }
        let h1 = 1.0 - p[1] / self.capacity(1);
        let h2 = 1.0 - p[0] / self.capacity(0);
        if self.variant.is_reduced() {
            (h1, h2)
        } else {
            (h1.clamp(0.0, 1.0), h2.clamp(0.0, 1.0))
        }
    }

    /// Column labels for trajectory export.
    pub fn labels(&self) -> Vec<String> {
        let np = self.n_populations();
        let mut out: Vec<String> = (1..=np).map(|i| format!("P{i}")).collect();
        match &self.net {
            Some(net) => out.extend((0..net.n_nodes()).map(|k| format!("theta_{k}"))),
            None => out.extend((1..=self.variant.n_deltas()).map(|i| format!("Delta{i}"))),
        }
        out
    }

    /// Population centroids of a networked state, each in [0, 2π).
    pub fn centroids(&self, y: &[f64]) -> Vec<f64> {
        let np = self.n_populations();
        let net = self.net.as_ref().expect("centroids of a reduced state");
        let theta = &y[np..];
        (0..np)
            .map(|i| subset_centroid(theta, net.range(i), self.centroid))
            .collect()
    }

    /// Synchronization factors of a networked state.
    pub fn orders(&self, y: &[f64]) -> Orders {
        if !self.variant.uses_orders() {
            return Orders::SYNC;
        }
        let np = self.n_populations();
        let theta = &y[np..];
        let n = self.cfg.p_exponent as i32;
        let mut o = Orders::SYNC;
        for i in 0..np {
            o.strategic[i] = order_parameter(theta, &self.strategic[i]).unwrap_or(1.0).powi(n);
            o.tactical[i] = order_parameter(theta, &self.tactical[i]).unwrap_or(1.0).powi(n);
        }
        o
    }

    /// Project any state onto the reduced coordinates
    /// `[P…, Δ₁ (, Δ₂)]`, with differences wrapped into (−π, π].
    pub fn reduce_state(&self, y: &[f64]) -> Vec<f64> {
        if self.variant.is_reduced() {
            return y.to_vec();
        }
        let np = self.n_populations();
        let c = self.centroids(y);
        let mut out = y[..np].to_vec();
        out.extend((1..np).map(|j| wrap_angle(c[0] - c[j])));
        out
    }

    /// Networked state with every population internally synchronized and
    /// the given centroid differences: Red at phase 0, Blue at `Δ₁`, Green
    /// at `Δ₁ − Δ₂`.
    pub fn synchronized_state(&self, p: &[f64], deltas: &[f64]) -> Vec<f64> {
        let mut y = p.to_vec();
        match &self.net {
            None => y.extend_from_slice(deltas),
            Some(net) => {
                let blue = deltas[0];
                for i in 0..net.n_populations() {
                    let phase = match i {
                        0 => blue,
                        1 => 0.0,
                        _ => blue - deltas[1],
                    };
                    y.extend(net.range(i).map(|_| phase));
                }
            }
        }
        y
    }

    fn reduced_rhs(&self, y: &[f64], dy: &mut [f64]) {
        let np = self.n_populations();
        let p = &y[..np];
        let (h1, h2) = self.feedback(p);
        if self.phase_only {
            dy[..np].fill(0.0);
        } else {
            population_rates(self.variant, &self.cfg, p, y[np], &Orders::SYNC, &mut dy[..np]);
        }
        match self.variant {
            Variant::Eco3Reduced => {
                let g = &self.gamma3;
                let (d1, d2) = (y[3], y[4]);
                let blue = g[0][1] * (d1 - self.cfg.phi).sin() + g[0][2] * d2.sin();
                let red = g[1][0] * (d1 + self.cfg.psi).sin() - g[1][2] * (d2 - d1).sin();
                dy[3] = self.cfg.mu - h1 * blue - h2 * red;
                dy[4] = self.cfg.nu - h1 * blue - g[2][0] * d2.sin() - g[2][1] * (d2 - d1).sin();
            }
            _ => dy[2] = self.two_cluster().rate(y[2], h1, h2),
        }
    }

    fn networked_rhs(&self, y: &[f64], dy: &mut [f64]) {
        let net = self.net.as_ref().unwrap();
        let np = self.n_populations();
        let (p, theta) = y.split_at(np);
        let (dp, dtheta) = dy.split_at_mut(np);
        if self.phase_only {
            dp.fill(0.0);
            kuramoto_rhs_into(theta, net, &[1.0; 3][..np], dtheta);
            return;
        }
        let c1 = subset_centroid(theta, net.range(0), self.centroid);
        let c2 = subset_centroid(theta, net.range(1), self.centroid);
        population_rates(self.variant, &self.cfg, p, c1 - c2, &self.orders(y), dp);
        let (h1, h2) = self.feedback(p);
        kuramoto_rhs_into(theta, net, &[h1, h2, 1.0][..np], dtheta);
    }
}

impl OdeSystem for Model {
    fn dim(&self) -> usize {
        match &self.net {
            Some(net) => self.n_populations() + net.n_nodes(),
            None => self.n_populations() + self.variant.n_deltas(),
        }
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        if self.net.is_some() {
            self.networked_rhs(y, dy)
        } else {
            self.reduced_rhs(y, dy)
        }
    }
}

/// Everything except the parameter values needed to instantiate a model,
/// so sweeps can rebuild it per parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub variant: Variant,
    pub network: NetworkSpec,
    /// Seed for graph generation and intrinsic frequencies.
    pub network_seed: u64,
    pub centroid: CentroidMethod,
}

impl ModelSpec {
    pub fn new(variant: Variant, network_seed: u64) -> Self {
        Self {
            variant,
            network: variant.default_network(),
            network_seed,
            centroid: CentroidMethod::default(),
        }
    }

    pub fn build(&self, cfg: &ModelConfig) -> Result<Model> {
        let mut m = Model::build(self.variant, cfg.clone(), &self.network, self.network_seed)?;
        m.centroid = self.centroid;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assemble, Couplings, Graph, InterLinks, Partition};
    use proptest::prelude::*;

    fn rates(m: &Model, y: &[f64]) -> Vec<f64> {
        let mut dy = vec![0.0; m.dim()];
        m.rhs(0.0, y, &mut dy);
        dy
    }

    fn small_net(np: usize) -> Arc<CoupledNetwork> {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let mut links = vec![InterLinks::new(0, 1, vec![(2, 2), (3, 3)])];
        if np == 3 {
            links.push(InterLinks::new(0, 2, vec![(0, 0)]));
            links.push(InterLinks::new(1, 2, vec![(3, 3)]));
        }
        let omega = (0..4 * np).map(|k| 0.1 * k as f64).collect();
        Arc::new(
            assemble(
                vec![g; np],
                links,
                Couplings {
                    sigma: vec![1.0; np],
                    xi: vec![vec![1.0; np]; np],
                    phi: 0.2,
                    psi: 0.1,
                },
                vec![Partition::leading(4, 2); np],
                omega,
            )
            .unwrap(),
        )
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
        assert!("eco4".parse::<Variant>().is_err());
    }

    #[test]
    fn coeff_examples() {
        let k = centroid_coeffs(1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        assert_eq!((k.c, k.s, k.k_disc), (2.0, 0.0, 4.0));
        let k = centroid_coeffs(1.0, 1.0, 0.2, 0.0, 0.2, 1.0, 1.0);
        assert!((k.c - 1.980067).abs() < 1e-6);
        assert!((k.s - 0.198669).abs() < 1e-6);
        assert!((k.k_disc - 3.920133).abs() < 1e-6);
        let k = centroid_coeffs(1.0, 1.0, 0.2, 0.3, 0.7, 0.0, 0.0);
        assert_eq!((k.c, k.s), (0.0, 0.0));
        assert!((k.k_disc + 0.49).abs() < 1e-15);
    }

    #[test]
    fn simple_reduced_examples() {
        let cfg = ModelConfig {
            mu: 0.0,
            phi: 0.0,
            psi: 0.0,
            ..ModelConfig::simple_case_study()
        };
        let m = Model::reduced(Variant::SimpleReduced, cfg.clone(), None).unwrap();
        assert_eq!(rates(&m, &[0.3, 0.4, 0.0])[2], 0.0);

        let m = Model::reduced(Variant::SimpleReduced, ModelConfig { mu: 0.2, ..cfg }, None).unwrap();
        for d in [-2.0, 0.1, 1.3] {
            assert!((rates(&m, &[0.0, 0.0, d])[2] - (0.2 - 2.0 * f64::sin(d))).abs() < 1e-15);
        }
    }

    #[test]
    fn simple_population_examples() {
        let cfg = ModelConfig {
            r1: 3.0,
            r2: 2.5,
            beta1: 2.0,
            beta2: 2.0,
            ..ModelConfig::simple_case_study()
        };
        let mut dp = [0.0; 2];
        population_rates(Variant::Simple, &cfg, &[0.5, 0.5], 0.0, &Orders::SYNC, &mut dp);
        assert!((dp[0] - 0.25).abs() < 1e-15);
        assert!((dp[1] - 0.125).abs() < 1e-15);
        population_rates(Variant::Simple, &cfg, &[1.0, 0.0], 0.7, &Orders::SYNC, &mut dp);
        assert_eq!(dp[0], 0.0);
        population_rates(Variant::Simple, &cfg, &[0.0, 0.0], 0.7, &Orders::SYNC, &mut dp);
        assert_eq!(dp, [0.0, 0.0]);
    }

    #[test]
    fn feedback_order_factors() {
        let cfg = ModelConfig::simple_case_study();
        let (p, d) = ([0.4, 0.6], 0.3);
        let mut base = [0.0; 2];
        population_rates(Variant::Simple, &cfg, &p, d, &Orders::SYNC, &mut base);
        let mut fb = [0.0; 2];
        population_rates(Variant::Feedback, &cfg, &p, d, &Orders::SYNC, &mut fb);
        assert_eq!(base, fb);

        let mut o = Orders::SYNC;
        o.strategic[0] = 0.0;
        population_rates(Variant::Feedback, &cfg, &p, d, &o, &mut fb);
        let reduction = cfg.beta2 * p[0] * p[1] * initiative(-d);
        assert!((fb[0] + reduction).abs() < 1e-15);

        // O_T2 = 0.5 with n = 2 scales Red's reduction term by 1/4.
        let mut o = Orders::SYNC;
        o.tactical[1] = 0.5f64.powi(2);
        let mut quarter = [0.0; 2];
        population_rates(Variant::Feedback, &cfg, &p, d, &o, &mut quarter);
        let logistic = cfg.r1 * p[0] * (1.0 - p[0]);
        assert!((quarter[0] - (logistic - 0.25 * reduction)).abs() < 1e-15);
    }

    #[test]
    fn eco3_examples() {
        let cfg = ModelConfig::default();
        let mut dp = [0.0; 3];
        // No Red: Blue only decays.
        population_rates(Variant::Eco3, &cfg, &[4.0, 0.0, 3.0], 0.0, &Orders::SYNC, &mut dp);
        assert!((dp[0] + cfg.x1 * 4.0).abs() < 1e-15);
        // No Green: tactical agility is the intrinsic one.
        population_rates(Variant::Eco3, &cfg, &[2.0, 3.0, 0.0], 0.4, &Orders::SYNC, &mut dp);
        let f12 = cfg.beta1 * 3.0 / (1.0 + cfg.tau * cfg.beta1 * 3.0);
        let expect = cfg.r2 * 3.0 * (1.0 - 0.3) - f12 * 2.0 * initiative(0.4);
        assert!((dp[1] - expect).abs() < 1e-13);
        // Holling saturation towards 1/τ.
        let p2 = 1e9;
        let f = cfg.beta1 * p2 / (1.0 + cfg.tau * cfg.beta1 * p2);
        assert!((f - 1.0 / cfg.tau).abs() < 1e-8);
    }

    #[test]
    fn eco3_reduced_examples() {
        let stats = NetworkSpec::paper_usecase().degree_stats(0).unwrap();
        let mut cfg = ModelConfig::default();
        let m = Model::reduced(Variant::Eco3Reduced, cfg.clone(), Some(&stats)).unwrap();
        let (d1, d2) = (0.4, -0.9);
        let dy = rates(&m, &[0.0, 0.0, 5.0, d1, d2]);
        let blue = (d1 - cfg.phi).sin() + d2.sin();
        let red = (d1 + cfg.psi).sin() - (d2 - d1).sin();
        assert!((dy[3] - (cfg.mu - blue - red)).abs() < 1e-14);

        for name in ["xi12", "xi13", "xi21", "xi23", "xi31", "xi32"] {
            cfg.set(name, 0.0).unwrap();
        }
        let m = Model::reduced(Variant::Eco3Reduced, cfg.clone(), Some(&stats)).unwrap();
        let dy = rates(&m, &[3.0, 2.0, 5.0, d1, d2]);
        assert_eq!((dy[3], dy[4]), (cfg.mu, cfg.nu));
    }

    #[test]
    fn eco2_examples() {
        let cfg = ModelConfig::eco2_case_study();
        let mut dp = [0.0; 2];
        population_rates(Variant::Eco2, &cfg, &[0.7, 0.0], 0.3, &Orders::SYNC, &mut dp);
        assert!((dp[0] + cfg.x1 * 0.7).abs() < 1e-15);
        population_rates(Variant::Eco2, &cfg, &[0.0, 1.0], 0.3, &Orders::SYNC, &mut dp);
        assert_eq!(dp[1], 0.0);

        // Hand evaluation at P = (0.5, 0.5), Δ = 0 with β₁ = 7.5:
        // Blue: 3·(10/11)·0.25 − 2·0.25·1 − 0.125
        // Red:  2.5·0.25 − (3.75/4.75)·0.5·1
        population_rates(Variant::Eco2, &cfg, &[0.5, 0.5], 0.0, &Orders::SYNC, &mut dp);
        assert!((dp[0] - (3.0 * 10.0 / 11.0 * 0.25 - 0.5 - 0.125)).abs() < 1e-15);
        assert!((dp[1] - (0.625 - 3.75 / 4.75 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn networked_at_zero_population_is_free_kuramoto() {
        let net = small_net(2);
        let m = Model::networked(Variant::Simple, ModelConfig::simple_case_study(), net.clone()).unwrap();
        let y: Vec<f64> = [0.0, 0.0].into_iter().chain((0..8).map(|k| 0.3 * k as f64)).collect();
        let dy = rates(&m, &y);
        assert_eq!(&dy[..2], &[0.0, 0.0]);
        let free = crate::phase::kuramoto_rhs(&y[2..], &net, &[1.0; 8]).unwrap();
        assert_eq!(&dy[2..], &free[..]);
    }

    #[test]
    fn networked_sync_matches_reduced_population_rates() {
        for (variant, np) in [
            (Variant::Simple, 2),
            (Variant::Feedback, 2),
            (Variant::Eco2, 2),
            (Variant::Eco3, 3),
        ] {
            let cfg = if np == 3 {
                ModelConfig::default()
            } else {
                ModelConfig::eco2_case_study()
            };
            let full = Model::networked(variant, cfg.clone(), small_net(np)).unwrap();
            let stats = degree_stats(full.network().unwrap());
            let red = Model::reduced(variant.reduced(), cfg, Some(&stats)).unwrap();
            let p: Vec<f64> = (0..np).map(|i| 0.3 + 0.2 * i as f64).collect();
            let deltas = [0.7, -0.4];
            let y_full = full.synchronized_state(&p, &deltas[..np - 1]);
            let y_red = red.synchronized_state(&p, &deltas[..np - 1]);
            let (a, b) = (rates(&full, &y_full), rates(&red, &y_red));
            for i in 0..np {
                assert!((a[i] - b[i]).abs() < 1e-13, "{variant}: {} vs {}", a[i], b[i]);
            }
            let back = full.reduce_state(&y_full);
            for (u, v) in back.iter().zip(&y_red) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_only_freezes_populations() {
        let m = Model::reduced(Variant::SimpleReduced, ModelConfig::simple_case_study(), None)
            .unwrap()
            .phase_only();
        let dy = rates(&m, &[0.5, 0.9, 0.3]);
        assert_eq!(&dy[..2], &[0.0, 0.0]);
        assert!((dy[2] - m.two_cluster().rate(0.3, 1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - TAU)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn extinct_population_stays_extinct(
            p1 in 0.0f64..1.0, p2 in 0.0f64..1.0, p3 in 0.0f64..10.0, d in -PI..PI,
        ) {
            for v in [Variant::SimpleReduced, Variant::Eco2Reduced, Variant::Eco3Reduced] {
                let cfg = ModelConfig::default();
                let mut dp = [0.0; 3];
                let o = Orders::SYNC;
                population_rates(v, &cfg, &[0.0, p2, p3], d, &o, &mut dp);
                prop_assert_eq!(dp[0], 0.0);
                population_rates(v, &cfg, &[p1, 0.0, p3], d, &o, &mut dp);
                prop_assert_eq!(dp[1], 0.0);
            }
        }

        #[test]
        fn initiative_bounds(x in -20.0f64..20.0) {
            let f = initiative(x);
            prop_assert!((0.5..=1.5).contains(&f));
        }
    }
}
