//! Growth algorithms: line-breaking constructions I and II, Aldous'
//! Brownian construction, the normalized variants, and the discrete shape
//! chains of Marchal and Rémy.
//!
//! Constructions I and II first draw the whole chain trajectory up to the
//! target leaf count (the normalized variants draw `β_p` at the start of each
//! round instead). Each round then consumes the branch fraction `B`, the
//! edge/vertex selector, and the position (edge and offset, or vertex), in
//! that order. Replaying a seed therefore replays the whole trace.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{chain_init, AlphaParam, ChainState};
use crate::distributions::{sample_beta, sample_gamma, M1Sampler};
use crate::error::{ensure, Error, Result};
use crate::fenwick::Fenwick;
use crate::rng::RngStream;
use crate::rtree::{labelled_signature, signature_from_parents, ShapeSignature, VertexRecord, WeightedRTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "aldous")]
    Aldous,
    #[serde(rename = "normalized-I")]
    NormalizedI,
    #[serde(rename = "normalized-II")]
    NormalizedII,
    #[serde(rename = "marchal")]
    Marchal,
    #[serde(rename = "remy")]
    Remy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::I,
        Algorithm::II,
        Algorithm::Aldous,
        Algorithm::NormalizedI,
        Algorithm::NormalizedII,
        Algorithm::Marchal,
        Algorithm::Remy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::I => "I",
            Algorithm::II => "II",
            Algorithm::Aldous => "aldous",
            Algorithm::NormalizedI => "normalized-I",
            Algorithm::NormalizedII => "normalized-II",
            Algorithm::Marchal => "marchal",
            Algorithm::Remy => "remy",
        }
    }

    /// Discrete algorithms produce shapes only (exported with unit lengths).
    pub fn is_discrete(self) -> bool {
        matches!(self, Algorithm::Marchal | Algorithm::Remy)
    }

    pub fn requires_brownian(self) -> bool {
        matches!(self, Algorithm::Aldous | Algorithm::Remy)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL.into_iter().find(|a| a.name().to_ascii_lowercase() == key).ok_or_else(|| {
            Error::Parameter(format!(
                "unknown algorithm {s:?}; expected one of I, II, aldous, normalized-I, normalized-II, marchal, remy"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub alpha: AlphaParam,
    pub p_target: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub m1: M1Sampler,
    #[serde(default)]
    pub weight_tracking: bool,
    /// Leaf counts at which a copy of the tree is kept.
    #[serde(default)]
    pub snapshots: Vec<usize>,
    /// Intensity constant `c` of the Poisson points `c·t dt` in Aldous'
    /// construction. `1` is Aldous' convention; `1/2` matches the chain.
    #[serde(default = "default_intensity")]
    pub aldous_intensity: f64,
    #[serde(default)]
    pub trace: bool,
    /// Re-check the weight and degree ledgers after every round.
    #[serde(default)]
    pub check_ledgers: bool,
}

fn default_intensity() -> f64 {
    1.0
}

impl GrowthConfig {
    pub fn new(alpha: f64, p_target: usize, algorithm: Algorithm, seed: u64) -> Result<Self> {
        let cfg = Self {
            alpha: AlphaParam::new(alpha)?,
            p_target,
            algorithm,
            seed,
            stream: 0,
            m1: M1Sampler::Exact,
            weight_tracking: matches!(algorithm, Algorithm::II | Algorithm::NormalizedII),
            snapshots: Vec::new(),
            aldous_intensity: default_intensity(),
            trace: false,
            check_ledgers: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.p_target >= 1, Parameter, "p_target must be >= 1");
        ensure!(u32::try_from(2 * self.p_target).is_ok(), Range, "p_target {} is too large", self.p_target);
        ensure!(
            !self.algorithm.requires_brownian() || self.alpha.is_brownian(),
            Parameter,
            "algorithm {} requires alpha = 2, got {}",
            self.algorithm,
            self.alpha.value()
        );
        ensure!(
            self.aldous_intensity.is_finite() && self.aldous_intensity > 0.0,
            Parameter,
            "aldous intensity must be > 0"
        );
        for &s in &self.snapshots {
            ensure!(s >= 1 && s <= self.p_target, Parameter, "snapshot {s} outside 1..={}", self.p_target);
        }
        if let M1Sampler::Truncated { n_trunc } = self.m1 {
            ensure!(n_trunc >= 1, Parameter, "n_trunc must be >= 1");
        }
        Ok(())
    }

    pub fn rng(&self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlueKind {
    Edge,
    Vertex,
}

/// One gluing round, from `p` leaves to `p + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub p: usize,
    pub m_p: f64,
    pub l_p: f64,
    pub m_next: f64,
    pub b: f64,
    pub kind: GlueKind,
    /// Edge id for edge gluing, vertex id for vertex gluing.
    pub host: u32,
    pub branch_length: f64,
    pub leftover: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub rows: Vec<TraceRow>,
}

impl GrowthTrace {
    pub const CSV_HEADER: &'static str = "p,M_p,L_p,M_next,B,kind,host,branch_length,leftover";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let kind = match r.kind {
                GlueKind::Edge => "edge",
                GlueKind::Vertex => "vertex",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.p, r.m_p, r.l_p, r.m_next, r.b, kind, r.host, r.branch_length, r.leftover
            ));
        }
        out
    }

    /// Largest relative deviation of `branch = ΔM·B` and `leftover = ΔM·(1-B)`,
    /// both measured against `ΔM`.
    pub fn max_consistency_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let dm = r.m_next - r.m_p;
                let e1 = (r.branch_length - dm * r.b).abs() / dm;
                let e2 = (r.leftover - dm * (1.0 - r.b)).abs() / dm;
                e1.max(e2)
            })
            .fold(0.0, f64::max)
    }
}

/// Worst relative errors seen by the per-round ledger checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerStats {
    pub rounds: usize,
    pub max_weight_error: f64,
    pub max_degree_error: f64,
}

#[derive(Debug, Clone)]
pub struct GrowthOutcome {
    pub tree: WeightedRTree,
    /// Final chain value `M_p` (Aldous: `R_p`); `None` for discrete algorithms.
    pub m: Option<f64>,
    pub snapshots: Vec<(usize, WeightedRTree)>,
    pub trace: Option<GrowthTrace>,
    pub ledger: Option<LedgerStats>,
}

/// Runs the configured algorithm with its own stream.
pub fn grow(config: &GrowthConfig) -> Result<GrowthOutcome> {
    let mut rng = config.rng();
    grow_with(config, &mut rng)
}

/// Runs the configured algorithm, drawing from `rng`.
pub fn grow_with(config: &GrowthConfig, rng: &mut RngStream) -> Result<GrowthOutcome> {
    config.validate()?;
    match config.algorithm {
        Algorithm::I | Algorithm::II | Algorithm::NormalizedI | Algorithm::NormalizedII => line_breaking(config, rng),
        Algorithm::Aldous => aldous(config, rng),
        Algorithm::Marchal | Algorithm::Remy => {
            let mut tree = MarchalTree::new(config.alpha);
            let mut snapshots = Vec::new();
            if config.snapshots.contains(&1) {
                snapshots.push((1, tree.to_rtree()?));
            }
            while tree.leaf_count() < config.p_target {
                tree.step(rng)?;
                if config.snapshots.contains(&tree.leaf_count()) {
                    snapshots.push((tree.leaf_count(), tree.to_rtree()?));
                }
            }
            Ok(GrowthOutcome { tree: tree.to_rtree()?, m: None, snapshots, trace: None, ledger: None })
        }
    }
}

pub fn grow_algorithm_i(config: &GrowthConfig, rng: &mut RngStream) -> Result<GrowthOutcome> {
    ensure!(config.algorithm == Algorithm::I, Parameter, "expected algorithm I, got {}", config.algorithm);
    grow_with(config, rng)
}

pub fn grow_algorithm_ii(config: &GrowthConfig, rng: &mut RngStream) -> Result<GrowthOutcome> {
    ensure!(config.algorithm == Algorithm::II, Parameter, "expected algorithm II, got {}", config.algorithm);
    grow_with(config, rng)
}

pub fn grow_normalized(config: &GrowthConfig, rng: &mut RngStream) -> Result<GrowthOutcome> {
    ensure!(
        matches!(config.algorithm, Algorithm::NormalizedI | Algorithm::NormalizedII),
        Parameter,
        "expected a normalized algorithm, got {}",
        config.algorithm
    );
    grow_with(config, rng)
}

/// Aldous' construction with Poisson intensity `intensity · t dt`.
pub fn grow_aldous(p_target: usize, intensity: f64, rng: &mut RngStream) -> Result<WeightedRTree> {
    let mut cfg = GrowthConfig::new(2.0, p_target, Algorithm::Aldous, rng.seed())?;
    cfg.aldous_intensity = intensity;
    Ok(grow_with(&cfg, rng)?.tree)
}

/// Shapes `T_1, …, T_{p_target}` of one run of Marchal's algorithm.
///
/// Each signature is rebuilt from scratch, so this is quadratic in
/// `p_target`; use [`MarchalTree`] directly for long runs.
pub fn grow_marchal(alpha: AlphaParam, p_target: usize, rng: &mut RngStream) -> Result<Vec<ShapeSignature>> {
    ensure!(p_target >= 1, Parameter, "p_target must be >= 1");
    let mut tree = MarchalTree::new(alpha);
    let mut out = Vec::with_capacity(p_target);
    out.push(tree.shape());
    while tree.leaf_count() < p_target {
        tree.step(rng)?;
        out.push(tree.shape());
    }
    Ok(out)
}

/// Rémy's algorithm: Marchal's algorithm at α = 2.
pub fn grow_remy(p_target: usize, rng: &mut RngStream) -> Result<Vec<ShapeSignature>> {
    grow_marchal(AlphaParam::new(2.0)?, p_target, rng)
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn check_ledgers(tree: &WeightedRTree, alpha: AlphaParam, m: f64, stats: &mut LedgerStats) -> Result<()> {
    const TOL: f64 = 1e-10;
    let p = tree.leaf_count() as f64;
    let a = alpha.value();
    let (_, lhs) = tree.vertex_selection_weights(alpha);
    let rhs = if alpha.is_brownian() { 0.0 } else { p * a - 1.0 - tree.size() as f64 * (a - 1.0) };
    let de = rel_err(lhs, rhs);
    stats.max_degree_error = stats.max_degree_error.max(de);
    ensure!(de <= TOL, State, "degree identity broken at p = {p}: {lhs} vs {rhs}");
    if let Some(ws) = tree.weights() {
        let sum: f64 = ws.iter().sum();
        let target = m - tree.total_length();
        // Relative to M_p: at α = 2 both sides vanish up to rounding.
        let we = (sum - target).abs() / m;
        stats.max_weight_error = stats.max_weight_error.max(we);
        ensure!(we <= TOL, State, "weight ledger broken at p = {p}: {sum} vs {target}");
    }
    stats.rounds += 1;
    Ok(())
}

fn line_breaking(config: &GrowthConfig, rng: &mut RngStream) -> Result<GrowthOutcome> {
    let alpha = config.alpha;
    let normalized = matches!(config.algorithm, Algorithm::NormalizedI | Algorithm::NormalizedII);
    let by_weight = matches!(config.algorithm, Algorithm::II | Algorithm::NormalizedII);
    let tracking = config.weight_tracking || by_weight;

    let mut chain = if normalized {
        ChainState::start(1.0, false)?
    } else {
        chain_init(alpha, config.m1, config.p_target, false, rng)?
    };
    let mut tree = WeightedRTree::new_segment(chain.m(), tracking)?;
    let mut snapshots = Vec::new();
    let mut trace = config.trace.then(GrowthTrace::default);
    let mut ledger = config.check_ledgers.then(LedgerStats::default);
    if let Some(stats) = ledger.as_mut() {
        check_ledgers(&tree, alpha, chain.m(), stats)?;
    }
    if config.snapshots.contains(&1) {
        snapshots.push((1, tree.clone()));
    }
    let b_param = alpha.branch_fraction_b();

    while chain.p() < config.p_target {
        let p = chain.p();
        let m_p = chain.m();
        let l_p = tree.total_length();
        chain = if normalized { chain.step_independent(alpha, rng)?.0 } else { chain.next(alpha, rng)? };
        let m_next = chain.m();
        let dm = m_next - m_p;
        let (b, branch) = loop {
            let b = sample_beta(1.0, b_param, rng)?;
            let branch = dm * b;
            if branch > 0.0 {
                break (b, branch);
            }
        };
        let leftover = dm * (1.0 - b);
        let u = rng.open01();
        // At α = 2, L_p = M_p up to rounding and the vertex branch is unreachable.
        let want_edge = alpha.is_brownian() || u * m_p < l_p;
        let vertex = if want_edge {
            None
        } else if by_weight {
            tree.sample_vertex_by_weight(rng)
        } else {
            tree.sample_vertex_by_degree(alpha, rng)
        };
        let (kind, host) = match vertex {
            Some(v) => {
                tree.glue_at_vertex(v, branch)?;
                if tracking && leftover > 0.0 {
                    tree.add_vertex_weight(v, leftover)?;
                }
                (GlueKind::Vertex, v.0)
            }
            None => {
                debug_assert!(want_edge || by_weight, "degree-based vertex selection found no vertex");
                let point = tree.sample_skeleton_point(rng);
                let (mid, _) = tree.glue_at_point(point, branch)?;
                if tracking && leftover > 0.0 {
                    tree.add_vertex_weight(mid, leftover)?;
                }
                (GlueKind::Edge, point.edge.0)
            }
        };
        if let Some(t) = trace.as_mut() {
            t.rows.push(TraceRow { p, m_p, l_p, m_next, b, kind, host, branch_length: branch, leftover });
        }
        if let Some(stats) = ledger.as_mut() {
            check_ledgers(&tree, alpha, m_next, stats)?;
        }
        if config.snapshots.contains(&tree.leaf_count()) {
            snapshots.push((tree.leaf_count(), tree.clone()));
        }
    }
    Ok(GrowthOutcome { tree, m: Some(chain.m()), snapshots, trace, ledger })
}

fn aldous(config: &GrowthConfig, rng: &mut RngStream) -> Result<GrowthOutcome> {
    // Points of a Poisson process of intensity c·t dt: R_k = sqrt(2 Γ_k / c).
    let c = config.aldous_intensity;
    let mut gamma_k = sample_gamma(1.0, rng)?;
    let mut r = (2.0 * gamma_k / c).sqrt();
    let mut tree = WeightedRTree::new_segment(r, false)?;
    let mut snapshots = Vec::new();
    let mut trace = config.trace.then(GrowthTrace::default);
    if config.snapshots.contains(&1) {
        snapshots.push((1, tree.clone()));
    }
    while tree.leaf_count() < config.p_target {
        let p = tree.leaf_count();
        let (r_next, gamma_next) = loop {
            let g = gamma_k + sample_gamma(1.0, rng)?;
            let r_next = (2.0 * g / c).sqrt();
            if r_next > r {
                break (r_next, g);
            }
        };
        let branch = r_next - r;
        let point = tree.sample_skeleton_point(rng);
        tree.glue_at_point(point, branch)?;
        if let Some(t) = trace.as_mut() {
            t.rows.push(TraceRow {
                p,
                m_p: r,
                l_p: tree.total_length() - branch,
                m_next: r_next,
                b: 1.0,
                kind: GlueKind::Edge,
                host: point.edge.0,
                branch_length: branch,
                leftover: 0.0,
            });
        }
        r = r_next;
        gamma_k = gamma_next;
        if config.snapshots.contains(&tree.leaf_count()) {
            snapshots.push((tree.leaf_count(), tree.clone()));
        }
    }
    Ok(GrowthOutcome { tree, m: Some(r), snapshots, trace, ledger: None })
}

/// Discrete tree grown by Marchal's algorithm: every edge has weight `α-1`
/// and every vertex of degree `d ≥ 3` has weight `d-1-α`, so the total is
/// `pα-1` with `p` leaves.
#[derive(Debug, Clone)]
pub struct MarchalTree {
    alpha: AlphaParam,
    parent: Vec<Option<u32>>,
    degree: Vec<u32>,
    leaf_label: Vec<Option<u32>>,
    internals: Vec<u32>,
    slot: Vec<Option<u32>>,
    surplus: Fenwick<u64>,
    leaves: usize,
}

impl MarchalTree {
    /// Root joined to leaf 1.
    pub fn new(alpha: AlphaParam) -> Self {
        Self {
            alpha,
            parent: vec![None, Some(0)],
            degree: vec![1, 1],
            leaf_label: vec![None, Some(1)],
            internals: Vec::new(),
            slot: vec![None, None],
            surplus: Fenwick::new(),
            leaves: 1,
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    /// Sum of all edge and vertex weights.
    pub fn total_weight(&self) -> f64 {
        let a = self.alpha.value();
        let vertices: f64 = self.internals.iter().map(|&v| self.degree[v as usize] as f64 - 1.0 - a).sum();
        self.edge_count() as f64 * (a - 1.0) + vertices
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        self.parent.iter().map(|p| p.map(|x| x as usize)).collect()
    }

    pub fn shape(&self) -> ShapeSignature {
        signature_from_parents(&self.parents(), 0)
    }

    pub fn labelled_shape(&self) -> ShapeSignature {
        labelled_signature(&self.parents(), 0, &self.leaf_label)
    }

    fn push_vertex(&mut self, parent: u32, degree: u32, label: Option<u32>) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(Some(parent));
        self.degree.push(degree);
        self.leaf_label.push(label);
        let slot = (degree >= 3).then(|| {
            self.internals.push(id);
            self.surplus.push(u64::from(degree - 3));
            self.internals.len() as u32 - 1
        });
        self.slot.push(slot);
        id
    }

    /// Splits the edge above non-root vertex `v` and hangs a new leaf there.
    pub fn split_edge(&mut self, v: usize) -> Result<()> {
        ensure!(v >= 1 && v < self.parent.len(), Structure, "no edge above vertex {v}");
        let up = self.parent[v].unwrap();
        let mid = self.push_vertex(up, 3, None);
        self.parent[v] = Some(mid);
        self.leaves += 1;
        self.push_vertex(mid, 1, Some(self.leaves as u32));
        Ok(())
    }

    /// Hangs a new leaf from internal vertex `v`.
    pub fn attach_to_vertex(&mut self, v: usize) -> Result<()> {
        let slot =
            self.slot.get(v).copied().flatten().ok_or_else(|| Error::Domain(format!("vertex {v} is not internal")))?;
        self.degree[v] += 1;
        self.surplus.add(slot as usize, 1);
        self.leaves += 1;
        self.push_vertex(v as u32, 1, Some(self.leaves as u32));
        Ok(())
    }

    /// One step: pick an edge or vertex with probability proportional to
    /// its weight, using a single uniform.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<()> {
        let a = self.alpha.value();
        let edge_mass = self.edge_count() as f64 * (a - 1.0);
        let base = 2.0 - a;
        let vertex_mass = self.internals.len() as f64 * base + self.surplus.total() as f64;
        let total = self.leaves as f64 * a - 1.0;
        debug_assert!(rel_err(edge_mass + vertex_mass, total) < 1e-12);
        let target = rng.open01() * (edge_mass + vertex_mass);
        if target < edge_mass || vertex_mass <= 0.0 {
            let e = ((target / (a - 1.0)) as usize).min(self.edge_count() - 1);
            return self.split_edge(e + 1);
        }
        let t = target - edge_mass;
        let n_int = self.internals.len();
        let v = if t < n_int as f64 * base {
            self.internals[((t / base) as usize).min(n_int - 1)]
        } else {
            let ticket = ((t - n_int as f64 * base) as u64).min(self.surplus.total().saturating_sub(1));
            match self.surplus.find(ticket) {
                Some(slot) => self.internals[slot],
                None => self.internals[n_int - 1],
            }
        };
        self.attach_to_vertex(v as usize)
    }

    /// The tree with every edge of length 1.
    pub fn to_rtree(&self) -> Result<WeightedRTree> {
        let records: Vec<VertexRecord> = (0..self.parent.len())
            .map(|v| VertexRecord {
                id: v as u32,
                parent: self.parent[v],
                length: self.parent[v].map(|_| 1.0),
                weight: None,
            })
            .collect();
        let mut order = vec![0u32; self.leaves];
        for (v, l) in self.leaf_label.iter().enumerate() {
            if let Some(k) = l {
                order[*k as usize - 1] = v as u32;
            }
        }
        WeightedRTree::from_records(&records, &order, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alpha: f64, p: usize, alg: Algorithm, seed: u64) -> GrowthConfig {
        GrowthConfig::new(alpha, p, alg, seed).unwrap()
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("Normalized_II".parse::<Algorithm>().unwrap(), Algorithm::NormalizedII);
        assert!("III".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(GrowthConfig::new(1.5, 3, Algorithm::Aldous, 1).is_err());
        assert!(GrowthConfig::new(1.5, 3, Algorithm::Remy, 1).is_err());
        assert!(GrowthConfig::new(2.0, 0, Algorithm::I, 1).is_err());
        let mut c = cfg(1.5, 3, Algorithm::I, 1);
        c.snapshots = vec![4];
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_leaf_is_a_segment() {
        let out = grow(&cfg(1.5, 1, Algorithm::I, 3)).unwrap();
        assert_eq!(out.tree.leaf_count(), 1);
        assert_eq!(out.tree.total_length(), out.m.unwrap());
        let out = grow(&cfg(1.5, 1, Algorithm::NormalizedII, 3)).unwrap();
        assert_eq!(out.tree.distance_to_root(out.tree.leaf(1).unwrap()), 1.0);
    }

    #[test]
    fn brownian_trees_are_binary() {
        for alg in [Algorithm::I, Algorithm::II, Algorithm::Aldous, Algorithm::Remy] {
            let out = grow(&cfg(2.0, 200, alg, 11)).unwrap();
            assert_eq!(out.tree.leaf_count(), 200);
            assert!(out.tree.degree_census().keys().all(|&d| d == 3), "{alg}");
            out.tree.check_invariants().unwrap();
        }
    }

    #[test]
    fn trace_rows_are_consistent() {
        let mut c = cfg(1.5, 300, Algorithm::II, 5);
        c.trace = true;
        c.check_ledgers = true;
        let out = grow(&c).unwrap();
        let t = out.trace.unwrap();
        assert_eq!(t.rows.len(), 299);
        assert!(t.max_consistency_error() < 1e-12);
        assert!(t.rows.iter().any(|r| r.kind == GlueKind::Vertex));
        let ledger = out.ledger.unwrap();
        assert_eq!(ledger.rounds, 300);
        assert!(ledger.max_weight_error < 1e-10 && ledger.max_degree_error < 1e-10);
        let csv = t.to_csv();
        assert!(csv.starts_with(GrowthTrace::CSV_HEADER));
        assert_eq!(csv.lines().count(), 300);
    }

    #[test]
    fn same_seed_same_tree() {
        let a = grow(&cfg(1.3, 100, Algorithm::I, 9)).unwrap();
        let b = grow(&cfg(1.3, 100, Algorithm::I, 9)).unwrap();
        assert_eq!(a.tree.to_newick(), b.tree.to_newick());
        let c = grow(&cfg(1.3, 100, Algorithm::I, 10)).unwrap();
        assert_ne!(a.tree.to_newick(), c.tree.to_newick());
    }

    #[test]
    fn snapshots_are_nested() {
        let mut c = cfg(1.4, 40, Algorithm::I, 21);
        c.snapshots = vec![10, 11, 39, 40];
        let out = grow(&c).unwrap();
        assert_eq!(out.snapshots.len(), 4);
        for w in out.snapshots.windows(2) {
            let (p, small) = (&w[0].0, &w[0].1);
            let big = &w[1].1;
            let r = big.restrict_to_leaves(*p).unwrap();
            assert!(r.distance_matrix().max_abs_diff(&small.distance_matrix()) < 1e-12);
            assert_eq!(r.labelled_shape(), small.labelled_shape());
        }
    }

    #[test]
    fn marchal_weight_total() {
        let alpha = AlphaParam::new(1.3).unwrap();
        let mut t = MarchalTree::new(alpha);
        let mut rng = RngStream::new(4, 0);
        for p in 1..200 {
            assert!((t.total_weight() - (p as f64 * 1.3 - 1.0)).abs() < 1e-9);
            t.step(&mut rng).unwrap();
        }
        let r = t.to_rtree().unwrap();
        r.check_invariants().unwrap();
        assert_eq!(r.shape(), t.shape());
        assert_eq!(r.labelled_shape(), t.labelled_shape());
    }

    #[test]
    fn marchal_p2_is_binary() {
        let mut rng = RngStream::new(1, 0);
        let shapes = grow_marchal(AlphaParam::new(1.5).unwrap(), 2, &mut rng).unwrap();
        assert_eq!(shapes[1].as_str(), "((()()))");
    }
}
