//! Population networks and their block coupling.
//!
//! Each population is an undirected simple [`Graph`]. Populations are joined
//! by [`InterLinks`] (bipartite pair lists) and assembled into a
//! [`CoupledNetwork`], which stores the block-structured weight matrix
//!
//! ```text
//!       | σ₁A¹¹  ξ₁₂A¹²  ξ₁₃A¹³ |          | 0     φJ¹²  0 |
//!   W = | ξ₂₁A²¹ σ₂A²²   ξ₂₃A²³ |      Φ = | ψJ²¹  0     0 |
//!       | ξ₃₁A³¹ ξ₃₂A³²  σ₃A³³  |          | 0     0     0 |
//! ```
//!
//! in sparse row form for the phase right-hand side, with dense views on
//! demand. Population indices are zero-based: 0 is Blue, 1 is Red, 2 is Green.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::{derive_seed, rng_for, SimRng, STREAM_GRAPH, STREAM_OMEGA};

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Edges stored as `(u, v)` with `u < v`, sorted.
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    /// Build from an edge list. Self-loops are rejected; duplicates and
    /// orientation are normalized away.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(CoreError::Validation(format!(
                    "edge ({u}, {v}) outside node range 0..{n}"
                )));
            }
            if u == v {
                return Err(CoreError::Validation(format!("self-loop at node {u}")));
            }
            g.edges.insert((u.min(v), u.max(v)));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            nb[u].push(v);
            nb[v].push(u);
        }
        nb
    }

    /// Dense symmetric 0/1 adjacency matrix.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let nb = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &nb[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// One `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(u, v)| format!("{u} {v}\n")).collect()
    }

    /// Parse the format written by [`Graph::to_edge_list`]. Blank lines and
    /// lines starting with `#` are skipped. The node count is `n` if given,
    /// else one more than the largest index seen.
    pub fn from_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => {
                    return Err(CoreError::Validation(format!(
                        "edge list line {}: expected `u v`, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
        Self::from_edges(n, edges)
    }
}

/// Complete rooted `branching`-ary tree with `layers` levels below the root,
/// numbered breadth-first from the root at node 0.
pub fn gen_kary_tree(branching: usize, layers: usize) -> Result<Graph> {
    if branching == 0 || layers == 0 {
        return Err(CoreError::InvalidParameter(
            "k-ary tree needs branching >= 1 and layers >= 1".into(),
        ));
    }
    let overflow = || CoreError::SizeOverflow(format!("{branching}-ary tree with {layers} layers"));
    let mut n: usize = 1;
    let mut level: usize = 1;
    for _ in 0..layers {
        level = level.checked_mul(branching).ok_or_else(overflow)?;
        n = n.checked_add(level).ok_or_else(overflow)?;
    }
    // Breadth-first numbering puts the children of i at b*i+1 ..= b*i+b.
    let edges = (1..n).map(|child| ((child - 1) / branching, child));
    Graph::from_edges(n, edges)
}

/// G(n, p) random graph. Pairs are visited in row-major order above the
/// diagonal, one uniform draw each.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CoreError::InvalidParameter(format!(
            "link probability {p} outside [0, 1]"
        )));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                g.edges.insert((u, v));
            }
        }
    }
    Ok(g)
}

/// Watts–Strogatz small world: a ring where every node links to its `k`
/// nearest neighbours, then each lattice edge `(u, u+j)` is rewired with
/// probability `p_rewire` to a uniformly chosen node that is neither `u` nor
/// already adjacent to it.
pub fn gen_watts_strogatz(n: usize, k: usize, p_rewire: f64, seed: u64) -> Result<Graph> {
    if k % 2 != 0 || k >= n {
        return Err(CoreError::InvalidParameter(format!(
            "Watts-Strogatz needs even k < n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return Err(CoreError::InvalidParameter(format!(
            "rewiring probability {p_rewire} outside [0, 1]"
        )));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || rng.random::<f64>() >= p_rewire {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, nb)| nb.iter().filter(move |&&v| u < v).map(move |&v| (u, v)));
    Graph::from_edges(n, edges)
}

/// Bipartite links between population `from` and population `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterLinks {
    pub from: usize,
    pub to: usize,
    /// `(node in from, node in to)` with local node indices.
    pub pairs: Vec<(usize, usize)>,
}

impl InterLinks {
    pub fn new(from: usize, to: usize, pairs: Vec<(usize, usize)>) -> Self {
        Self { from, to, pairs }
    }

    /// Rectangular 0/1 incidence `A^(from,to)`.
    pub fn matrix(&self, n_from: usize, n_to: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n_from, n_to);
        for &(u, v) in &self.pairs {
            a[(u, v)] = 1.0;
        }
        a
    }
}

/// Inter- and intra-population coupling strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    /// Internal coupling per population.
    pub sigma: Vec<f64>,
    /// `xi[i][j]`: coupling felt by population `i` from population `j`.
    /// Diagonal entries are ignored.
    pub xi: Vec<Vec<f64>>,
    /// Frustration of Blue towards Red.
    pub phi: f64,
    /// Frustration of Red towards Blue.
    pub psi: f64,
}

/// Strategic / tactical split of one population, local node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub strategic: Vec<usize>,
    pub tactical: Vec<usize>,
}

impl Partition {
    /// First `n_strategic` nodes strategic, the rest tactical.
    pub fn leading(n: usize, n_strategic: usize) -> Self {
        let s = n_strategic.min(n);
        Self {
            strategic: (0..s).collect(),
            tactical: (s..n).collect(),
        }
    }

    fn validate(&self, n: usize, pop: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &k in self.strategic.iter().chain(&self.tactical) {
            if k >= n {
                return Err(CoreError::Validation(format!(
                    "population {pop}: partition node {k} outside 0..{n}"
                )));
            }
            if seen[k] {
                return Err(CoreError::Validation(format!(
                    "population {pop}: node {k} is in both strategic and tactical sets"
                )));
            }
            seen[k] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(CoreError::Validation(format!(
                "population {pop}: node {k} is in neither strategic nor tactical set"
            )));
        }
        Ok(())
    }
}

/// One nonzero of row `k` of W: neighbour index, weight and phase lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub col: usize,
    pub weight: f64,
    pub lag: f64,
}

/// Assembled multi-population network, immutable after construction.
#[derive(Debug, Clone)]
pub struct CoupledNetwork {
    populations: Vec<Graph>,
    interlinks: Vec<InterLinks>,
    couplings: Couplings,
    partitions: Vec<Partition>,
    omega: Vec<f64>,
    offsets: Vec<usize>,
    row_start: Vec<usize>,
    entries: Vec<CouplingEntry>,
}

/// Build a [`CoupledNetwork`], validating sizes, couplings and partitions.
pub fn assemble(
    populations: Vec<Graph>,
    interlinks: Vec<InterLinks>,
    couplings: Couplings,
    partitions: Vec<Partition>,
    omega: Vec<f64>,
) -> Result<CoupledNetwork> {
    let np = populations.len();
    if couplings.sigma.len() != np {
        return Err(CoreError::Dimension {
            expected: np,
            got: couplings.sigma.len(),
        });
    }
    if couplings.xi.len() != np || couplings.xi.iter().any(|r| r.len() != np) {
        return Err(CoreError::Validation(format!("xi must be {np}x{np}")));
    }
    if partitions.len() != np {
        return Err(CoreError::Dimension {
            expected: np,
            got: partitions.len(),
        });
    }
    let all_couplings = couplings
        .sigma
        .iter()
        .chain(couplings.xi.iter().flatten())
        .chain([&couplings.phi, &couplings.psi]);
    for &c in all_couplings {
        if !c.is_finite() {
            return Err(CoreError::InvalidParameter(format!("non-finite coupling {c}")));
        }
    }
    if couplings
        .sigma
        .iter()
        .chain(couplings.xi.iter().flatten())
        .any(|&c| c < 0.0)
    {
        return Err(CoreError::InvalidParameter("couplings must be nonnegative".into()));
    }
    for (i, (p, g)) in partitions.iter().zip(&populations).enumerate() {
        p.validate(g.n(), i)?;
    }
    let mut offsets = Vec::with_capacity(np + 1);
    offsets.push(0);
    for g in &populations {
        offsets.push(offsets.last().unwrap() + g.n());
    }
    let total = offsets[np];
    if omega.len() != total {
        return Err(CoreError::Dimension {
            expected: total,
            got: omega.len(),
        });
    }
    let mut seen_pairs = BTreeSet::new();
    for link in &interlinks {
        let (i, j) = (link.from, link.to);
        if i >= np || j >= np || i == j {
            return Err(CoreError::Validation(format!(
                "interlink between populations {i} and {j}"
            )));
        }
        if !seen_pairs.insert((i.min(j), i.max(j))) {
            return Err(CoreError::Validation(format!(
                "populations {i} and {j} have more than one interlink block"
            )));
        }
        for &(u, v) in &link.pairs {
            if u >= populations[i].n() || v >= populations[j].n() {
                return Err(CoreError::Validation(format!(
                    "interlink pair ({u}, {v}) outside populations {i}/{j}"
                )));
            }
        }
    }

    let mut rows: Vec<BTreeMap<usize, CouplingEntry>> = vec![BTreeMap::new(); total];
    for (i, g) in populations.iter().enumerate() {
        let off = offsets[i];
        for (u, v) in g.edges() {
            let w = couplings.sigma[i];
            rows[off + u].insert(
                off + v,
                CouplingEntry {
                    col: off + v,
                    weight: w,
                    lag: 0.0,
                },
            );
            rows[off + v].insert(
                off + u,
                CouplingEntry {
                    col: off + u,
                    weight: w,
                    lag: 0.0,
                },
            );
        }
    }
    let lag = |i: usize, j: usize| match (i, j) {
        (0, 1) => couplings.phi,
        (1, 0) => couplings.psi,
        _ => 0.0,
    };
    for link in &interlinks {
        let (i, j) = (link.from, link.to);
        for &(u, v) in &link.pairs {
            let (gu, gv) = (offsets[i] + u, offsets[j] + v);
            rows[gu].insert(
                gv,
                CouplingEntry {
                    col: gv,
                    weight: couplings.xi[i][j],
                    lag: lag(i, j),
                },
            );
            rows[gv].insert(
                gu,
                CouplingEntry {
                    col: gu,
                    weight: couplings.xi[j][i],
                    lag: lag(j, i),
                },
            );
        }
    }
    let mut row_start = Vec::with_capacity(total + 1);
    let mut entries = Vec::new();
    row_start.push(0);
    for row in rows {
        entries.extend(row.into_values().filter(|e| e.weight != 0.0));
        row_start.push(entries.len());
    }
    Ok(CoupledNetwork {
        populations,
        interlinks,
        couplings,
        partitions,
        omega,
        offsets,
        row_start,
        entries,
    })
}

impl CoupledNetwork {
    pub fn n_populations(&self) -> usize {
        self.populations.len()
    }

    pub fn n_nodes(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn population(&self, i: usize) -> &Graph {
        &self.populations[i]
    }

    pub fn populations(&self) -> &[Graph] {
        &self.populations
    }

    pub fn interlinks(&self) -> &[InterLinks] {
        &self.interlinks
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn partition(&self, i: usize) -> &Partition {
        &self.partitions[i]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Global index range of population `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Population owning global node `k`.
    pub fn population_of(&self, k: usize) -> usize {
        self.offsets.partition_point(|&o| o <= k) - 1
    }

    /// Global indices of the strategic nodes of population `i`.
    pub fn strategic_nodes(&self, i: usize) -> Vec<usize> {
        self.partitions[i]
            .strategic
            .iter()
            .map(|&k| self.offsets[i] + k)
            .collect()
    }

    /// Global indices of the tactical nodes of population `i`.
    pub fn tactical_nodes(&self, i: usize) -> Vec<usize> {
        self.partitions[i]
            .tactical
            .iter()
            .map(|&k| self.offsets[i] + k)
            .collect()
    }

    /// Nonzeros of row `k` of W with their phase lags.
    pub fn row(&self, k: usize) -> &[CouplingEntry] {
        &self.entries[self.row_start[k]..self.row_start[k + 1]]
    }

    /// Mean intrinsic frequency of population `i`.
    pub fn mean_omega(&self, i: usize) -> f64 {
        let r = self.range(i);
        let n = r.len() as f64;
        self.omega[r].iter().sum::<f64>() / n
    }

    /// Same graphs, partitions and frequencies with new coupling strengths.
    pub fn with_couplings(&self, couplings: Couplings) -> Result<Self> {
        assemble(
            self.populations.clone(),
            self.interlinks.clone(),
            couplings,
            self.partitions.clone(),
            self.omega.clone(),
        )
    }

    pub fn with_omega(&self, omega: Vec<f64>) -> Result<Self> {
        assemble(
            self.populations.clone(),
            self.interlinks.clone(),
            self.couplings.clone(),
            self.partitions.clone(),
            omega,
        )
    }

    /// Dense weighted adjacency W.
    pub fn dense_weights(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut w = DMatrix::zeros(n, n);
        for k in 0..n {
            for e in self.row(k) {
                w[(k, e.col)] = e.weight;
            }
        }
        w
    }

    /// Dense frustration matrix Φ: φ on the whole Blue→Red block and ψ on the
    /// whole Red→Blue block, whether or not links exist there.
    pub fn dense_frustration(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut f = DMatrix::zeros(n, n);
        if self.n_populations() >= 2 {
            for a in self.range(0) {
                for b in self.range(1) {
                    f[(a, b)] = self.couplings.phi;
                    f[(b, a)] = self.couplings.psi;
                }
            }
        }
        f
    }
}

/// Cross-degree aggregates of a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeStats {
    /// `per_node[&(i, j)][k]`: number of links from node `k` of population
    /// `i` into population `j`.
    pub per_node: BTreeMap<(usize, usize), Vec<usize>>,
    /// `total[&(i, j)]`: sum of `per_node[&(i, j)]`.
    pub total: BTreeMap<(usize, usize), usize>,
    /// Population sizes.
    pub sizes: Vec<usize>,
}

impl DegreeStats {
    /// Total cross degree `d_T^(ij)`; zero for unlinked pairs.
    pub fn d_total(&self, i: usize, j: usize) -> usize {
        self.total.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Cross coupling that normalizes the effective reduced coupling to 1:
    /// `N_i / d_T^(ij)`, or 0 when the pair is unlinked.
    pub fn normalized_xi(&self, i: usize, j: usize) -> f64 {
        match self.d_total(i, j) {
            0 => 0.0,
            d => self.sizes[i] as f64 / d as f64,
        }
    }

    /// Effective reduced coupling `ξ_ij d_T^(ij) / N_i`.
    pub fn gamma(&self, i: usize, j: usize, xi_ij: f64) -> f64 {
        xi_ij * self.d_total(i, j) as f64 / self.sizes[i] as f64
    }
}

pub fn degree_stats(net: &CoupledNetwork) -> DegreeStats {
    link_degree_stats(net.populations.iter().map(Graph::n).collect(), &net.interlinks)
}

/// Degree aggregates from population sizes and interlinks alone.
pub fn link_degree_stats(sizes: Vec<usize>, interlinks: &[InterLinks]) -> DegreeStats {
    let np = sizes.len();
    let mut per_node = BTreeMap::new();
    for i in 0..np {
        for j in 0..np {
            if i != j {
                per_node.insert((i, j), vec![0usize; sizes[i]]);
            }
        }
    }
    for link in interlinks {
        let (i, j) = (link.from, link.to);
        for &(u, v) in &link.pairs {
            per_node.get_mut(&(i, j)).unwrap()[u] += 1;
            per_node.get_mut(&(j, i)).unwrap()[v] += 1;
        }
    }
    let total = per_node.iter().map(|(&k, d)| (k, d.iter().sum())).collect();
    DegreeStats { per_node, total, sizes }
}

/// Declarative description of one population graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    KaryTree { branching: usize, layers: usize },
    ErdosRenyi { n: usize, p: f64 },
    WattsStrogatz { n: usize, k: usize, p_rewire: f64 },
    EdgeList { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph> {
        match *self {
            GraphSpec::KaryTree { branching, layers } => gen_kary_tree(branching, layers),
            GraphSpec::ErdosRenyi { n, p } => gen_erdos_renyi(n, p, seed),
            GraphSpec::WattsStrogatz { n, k, p_rewire } => gen_watts_strogatz(n, k, p_rewire, seed),
            GraphSpec::EdgeList { n, ref edges } => Graph::from_edges(n, edges.iter().copied()),
        }
    }

    /// Default strategic/tactical split: root plus first layer for trees,
    /// the first five nodes otherwise, always leaving one tactical node.
    pub fn default_partition(&self, n: usize) -> Partition {
        let s = match *self {
            GraphSpec::KaryTree { branching, .. } => branching + 1,
            _ => 5,
        };
        Partition::leading(n, s.min(n.saturating_sub(1)))
    }
}

/// How intrinsic frequencies are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaMode {
    /// Blue and Red draw U[0,1]; Red is then shifted so that the Blue–Red
    /// mean difference equals μ, and Blue so that the Blue–Green mean
    /// difference equals ν. Green is fixed at 0.5.
    #[default]
    Matched,
    /// Blue and Red draw U[0,1] with no shift; Green is fixed at 0.5.
    Raw,
}

/// Network section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub populations: Vec<GraphSpec>,
    #[serde(default)]
    pub interlinks: Vec<InterLinks>,
    /// Per-population strategic node lists; the rest are tactical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategic: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub omega_mode: OmegaMode,
}

/// Constant frequency of every Green node.
pub const GREEN_OMEGA: f64 = 0.5;

impl NetworkSpec {
    /// Tree (Blue), Erdős–Rényi (Red) and Watts–Strogatz (Green) with the
    /// published link pattern: Blue 0–4 ↔ Green 0–4, Blue 5–20 ↔ Red 5–20,
    /// Red 5–20 ↔ Green 5–20.
    pub fn paper_usecase() -> Self {
        Self {
            populations: vec![
                GraphSpec::KaryTree {
                    branching: 4,
                    layers: 2,
                },
                GraphSpec::ErdosRenyi { n: 21, p: 0.2 },
                GraphSpec::WattsStrogatz {
                    n: 21,
                    k: 6,
                    p_rewire: 0.4,
                },
            ],
            interlinks: vec![
                InterLinks::new(0, 1, (5..21).map(|k| (k, k)).collect()),
                InterLinks::new(0, 2, (0..5).map(|k| (k, k)).collect()),
                InterLinks::new(1, 2, (5..21).map(|k| (k, k)).collect()),
            ],
            strategic: None,
            omega_mode: OmegaMode::Matched,
        }
    }

    /// Blue tree and Red Erdős–Rényi graph linked on nodes 5–20.
    pub fn paper_usecase_two() -> Self {
        let mut spec = Self::paper_usecase();
        spec.populations.truncate(2);
        spec.interlinks.retain(|l| l.from < 2 && l.to < 2);
        spec
    }

    /// Generate the graphs. Population `i` uses the seed derived from
    /// `(master, graph stream, i)`.
    pub fn graphs(&self, master_seed: u64) -> Result<Vec<Graph>> {
        self.populations
            .iter()
            .enumerate()
            .map(|(i, g)| g.build(derive_seed(master_seed, &[STREAM_GRAPH, i as u64])))
            .collect()
    }

    pub fn partitions(&self, graphs: &[Graph]) -> Result<Vec<Partition>> {
        match &self.strategic {
            None => Ok(self
                .populations
                .iter()
                .zip(graphs)
                .map(|(spec, g)| spec.default_partition(g.n()))
                .collect()),
            Some(lists) => {
                if lists.len() != graphs.len() {
                    return Err(CoreError::Dimension {
                        expected: graphs.len(),
                        got: lists.len(),
                    });
                }
                Ok(lists
                    .iter()
                    .zip(graphs)
                    .map(|(s, g)| {
                        let set: BTreeSet<usize> = s.iter().copied().collect();
                        Partition {
                            strategic: s.clone(),
                            tactical: (0..g.n()).filter(|k| !set.contains(k)).collect(),
                        }
                    })
                    .collect())
            }
        }
    }

    /// Intrinsic frequencies for all nodes, in population order.
    pub fn omega(&self, graphs: &[Graph], mu: f64, nu: f64, master_seed: u64) -> Vec<f64> {
        let mut rng = rng_for(master_seed, &[STREAM_OMEGA]);
        let mut pops: Vec<Vec<f64>> = graphs
            .iter()
            .enumerate()
            .map(|(i, g)| {
                if i < 2 {
                    (0..g.n()).map(|_| rng.random::<f64>()).collect()
                } else {
                    vec![GREEN_OMEGA; g.n()]
                }
            })
            .collect();
        if self.omega_mode == OmegaMode::Matched && pops.len() >= 2 {
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            if pops.len() >= 3 {
                let shift = GREEN_OMEGA + nu - mean(&pops[0]);
                pops[0].iter_mut().for_each(|w| *w += shift);
            }
            let shift = mean(&pops[0]) - mu - mean(&pops[1]);
            pops[1].iter_mut().for_each(|w| *w += shift);
        }
        pops.concat()
    }

    /// Generate graphs, partitions and frequencies, then assemble.
    pub fn build(&self, couplings: Couplings, mu: f64, nu: f64, master_seed: u64) -> Result<CoupledNetwork> {
        let graphs = self.graphs(master_seed)?;
        let partitions = self.partitions(&graphs)?;
        let omega = self.omega(&graphs, mu, nu, master_seed);
        assemble(graphs, self.interlinks.clone(), couplings, partitions, omega)
    }

    /// Degree aggregates without building the full network.
    pub fn degree_stats(&self, master_seed: u64) -> Result<DegreeStats> {
        let graphs = self.graphs(master_seed)?;
        Ok(link_degree_stats(
            graphs.iter().map(Graph::n).collect(),
            &self.interlinks,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_couplings(np: usize) -> Couplings {
        Couplings {
            sigma: vec![1.0; np],
            xi: vec![vec![1.0; np]; np],
            phi: 0.0,
            psi: 0.0,
        }
    }

    #[test]
    fn kary_tree_sizes() {
        let g = gen_kary_tree(4, 2).unwrap();
        assert_eq!((g.n(), g.edge_count()), (21, 20));
        assert!(g.is_connected());

        let path = gen_kary_tree(1, 3).unwrap();
        assert_eq!(path.n(), 4);
        assert_eq!(path.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);

        let bin = gen_kary_tree(2, 2).unwrap();
        let d = bin.degrees();
        assert_eq!(bin.n(), 7);
        assert_eq!(d[0], 2);
        assert!(d[3..].iter().all(|&x| x == 1));
    }

    #[test]
    fn kary_tree_rejects_bad_input() {
        assert!(matches!(gen_kary_tree(0, 2), Err(CoreError::InvalidParameter(_))));
        assert!(matches!(gen_kary_tree(usize::MAX, 3), Err(CoreError::SizeOverflow(_))));
    }

    #[test]
    fn erdos_renyi_extremes() {
        assert_eq!(gen_erdos_renyi(21, 0.0, 3).unwrap().edge_count(), 0);
        assert_eq!(gen_erdos_renyi(21, 1.0, 3).unwrap().edge_count(), 210);
        assert!(gen_erdos_renyi(21, 1.5, 3).is_err());
        assert_eq!(
            gen_erdos_renyi(21, 0.2, 9).unwrap(),
            gen_erdos_renyi(21, 0.2, 9).unwrap()
        );
    }

    #[test]
    fn watts_strogatz_lattice() {
        let g = gen_watts_strogatz(21, 6, 0.0, 1).unwrap();
        assert_eq!(g.edge_count(), 63);
        assert!(g.degrees().iter().all(|&d| d == 6));

        let cycle = gen_watts_strogatz(6, 2, 0.0, 1).unwrap();
        assert_eq!(cycle.edge_count(), 6);
        assert!((0..6).all(|u| cycle.has_edge(u, (u + 1) % 6)));

        assert!(gen_watts_strogatz(6, 6, 0.1, 1).is_err());
        assert!(gen_watts_strogatz(6, 3, 0.1, 1).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_kary_tree(3, 2).unwrap();
        let back = Graph::from_edge_list(&g.to_edge_list(), Some(g.n())).unwrap();
        assert_eq!(g, back);
        assert!(Graph::from_edge_list("0 1 2\n", None).is_err());
        assert!(Graph::from_edge_list("1 1\n", None).is_err());
    }

    #[test]
    fn two_by_two_assembly() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let net = assemble(
            vec![g.clone(), g],
            vec![InterLinks::new(0, 1, vec![(0, 0)])],
            unit_couplings(2),
            vec![Partition::leading(2, 1); 2],
            vec![0.0; 4],
        )
        .unwrap();
        let w = net.dense_weights();
        assert_eq!(w.iter().filter(|&&x| x != 0.0).count(), 6);
        assert_eq!(w, w.transpose());
        // Two internal blocks with two entries each, two cross entries.
        assert_eq!((w[(0, 2)], w[(2, 0)]), (1.0, 1.0));
        assert_eq!(net.population_of(3), 1);
    }

    #[test]
    fn frustration_blocks_fill_whole_block() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let mut c = unit_couplings(2);
        c.phi = 0.3;
        c.psi = -0.1;
        let net = assemble(
            vec![g.clone(), g],
            vec![],
            c,
            vec![Partition::leading(2, 1); 2],
            vec![0.0; 4],
        )
        .unwrap();
        let f = net.dense_frustration();
        assert_eq!(f[(0, 3)], 0.3);
        assert_eq!(f[(3, 0)], -0.1);
        assert_eq!(f[(0, 1)], 0.0);
        let stats = degree_stats(&net);
        assert_eq!(stats.d_total(0, 1), 0);
        // Without links, the lag never enters the sparse rows.
        assert!(net.row(0).iter().all(|e| e.lag == 0.0));
    }

    #[test]
    fn partition_validation() {
        let g = Graph::empty(3);
        let bad = Partition {
            strategic: vec![0, 1],
            tactical: vec![1, 2],
        };
        let err = assemble(vec![g.clone()], vec![], unit_couplings(1), vec![bad], vec![0.0; 3]);
        assert!(matches!(err, Err(CoreError::Validation(_))));
        let missing = Partition {
            strategic: vec![0],
            tactical: vec![2],
        };
        let err = assemble(vec![g], vec![], unit_couplings(1), vec![missing], vec![0.0; 3]);
        assert!(matches!(err, Err(CoreError::Validation(_))));
    }

    #[test]
    fn complete_bipartite_degrees() {
        let pairs = (0..3).flat_map(|u| (0..4).map(move |v| (u, v))).collect();
        let stats = link_degree_stats(vec![3, 4], &[InterLinks::new(0, 1, pairs)]);
        assert_eq!(stats.d_total(0, 1), 12);
        assert_eq!(stats.d_total(1, 0), 12);
        assert_eq!(stats.per_node[&(1, 0)], vec![3; 4]);
    }

    #[test]
    fn paper_usecase_degrees() {
        let stats = NetworkSpec::paper_usecase().degree_stats(0).unwrap();
        assert_eq!(stats.d_total(0, 1), 16);
        assert_eq!(stats.d_total(0, 2), 5);
        assert_eq!(stats.d_total(1, 2), 16);
        assert!((stats.normalized_xi(0, 1) - 21.0 / 16.0).abs() < 1e-15);
        assert!((stats.gamma(0, 1, stats.normalized_xi(0, 1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_partitions() {
        let spec = NetworkSpec::paper_usecase();
        let graphs = spec.graphs(0).unwrap();
        let parts = spec.partitions(&graphs).unwrap();
        for p in &parts {
            assert_eq!(p.strategic, vec![0, 1, 2, 3, 4]);
            assert_eq!(p.tactical.len(), 16);
        }
    }

    #[test]
    fn matched_frequencies_hit_targets() {
        let spec = NetworkSpec::paper_usecase();
        let c = Couplings {
            sigma: vec![1.0; 3],
            xi: vec![vec![1.0; 3]; 3],
            phi: 0.0,
            psi: 0.0,
        };
        let net = spec.build(c, 0.25, -0.25, 11).unwrap();
        assert!((net.mean_omega(0) - net.mean_omega(1) - 0.25).abs() < 1e-12);
        assert!((net.mean_omega(0) - net.mean_omega(2) + 0.25).abs() < 1e-12);
        assert!(net.omega()[net.range(2)].iter().all(|&w| w == GREEN_OMEGA));
    }
}
