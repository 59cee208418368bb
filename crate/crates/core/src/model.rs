//! Instance data: body-part graph, detections, costs, solver configuration.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Index of a detection. Ids are dense in `[0, n_detections)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetId(pub usize);

/// Index of a body part in `PartGraph::part_names`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartId(pub usize);

impl fmt::Display for DetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for PartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Body parts with a spanning tree and a distinguished anchor part.
///
/// The anchor (`star_root`) is the part every pose must instantiate; pairwise
/// costs may connect it to any other part, while the remaining cross-part
/// costs live on tree edges only.
#[derive(Debug, Clone, PartialEq)]
pub struct PartGraph {
    pub part_names: Vec<String>,
    /// `major[p]` marks parts whose presence certifies a pose.
    pub major: Vec<bool>,
    pub tree_edges: Vec<(PartId, PartId)>,
    pub star_root: PartId,
}

impl PartGraph {
    pub fn n_parts(&self) -> usize {
        self.part_names.len()
    }

    pub fn is_major(&self, p: PartId) -> bool {
        self.major.get(p.0).copied().unwrap_or(false)
    }

    pub fn major_parts(&self) -> Vec<PartId> {
        (0..self.n_parts())
            .filter(|&p| self.major[p])
            .map(PartId)
            .collect()
    }

    /// Adjacency lists of the part tree. Out-of-range edges are skipped so
    /// the validator can still run on malformed input.
    pub fn tree_adjacency(&self) -> Vec<Vec<PartId>> {
        let mut adj = vec![Vec::new(); self.n_parts()];
        for &(a, b) in &self.tree_edges {
            if a.0 < self.n_parts() && b.0 < self.n_parts() && a != b {
                adj[a.0].push(b);
                adj[b.0].push(a);
            }
        }
        adj
    }

    pub fn tree_adjacent(&self, a: PartId, b: PartId) -> bool {
        self.tree_edges
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    /// Parent map and root-first traversal order of the tree rooted at `root`.
    /// Returns `None` when the edges do not connect every part.
    pub fn rooted_at(&self, root: PartId) -> Option<(Vec<Option<PartId>>, Vec<PartId>)> {
        let n = self.n_parts();
        if root.0 >= n {
            return None;
        }
        let adj = self.tree_adjacency();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        seen[root.0] = true;
        while let Some(p) = stack.pop() {
            order.push(p);
            for &q in &adj[p.0] {
                if !seen[q.0] {
                    seen[q.0] = true;
                    parent[q.0] = Some(p);
                    stack.push(q);
                }
            }
        }
        if order.len() == n {
            Some((parent, order))
        } else {
            None
        }
    }
}

/// A detection and the part it hypothesizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: DetId,
    pub part: PartId,
}

/// Unary, pairwise and pose-instancing costs.
///
/// `phi` stores each unordered pair once; every quadratic form in the solver
/// sums a pair exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    /// Per-detection cost, indexed by detection id.
    pub theta: Vec<f64>,
    /// Sparse pairwise costs, normalized to `a < b` and sorted.
    pub phi: Vec<(DetId, DetId, f64)>,
    /// Cost of instancing a pose.
    pub omega: f64,
}

/// A full problem instance plus derived lookup tables.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub graph: PartGraph,
    pub detections: Vec<Detection>,
    pub costs: CostModel,
    dets_by_part: Vec<Vec<DetId>>,
    phi_map: HashMap<(DetId, DetId), f64>,
    phi_neighbors: Vec<Vec<(DetId, f64)>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.graph == other.graph
            && self.detections == other.detections
            && self.costs == other.costs
    }
}

impl Instance {
    /// Builds an instance and its lookup tables. Tolerates semantically
    /// invalid data so that `validate_instance` can report it.
    pub fn new(
        name: impl Into<String>,
        graph: PartGraph,
        mut detections: Vec<Detection>,
        mut costs: CostModel,
    ) -> Instance {
        detections.sort_by_key(|d| d.id);
        for t in &mut costs.phi {
            if t.0 > t.1 {
                std::mem::swap(&mut t.0, &mut t.1);
            }
        }
        costs.phi.sort_by_key(|t| (t.0, t.1));
        let n_dets = detections.len();
        let mut dets_by_part = vec![Vec::new(); graph.n_parts()];
        for d in &detections {
            if d.part.0 < dets_by_part.len() {
                dets_by_part[d.part.0].push(d.id);
            }
        }
        let mut phi_map = HashMap::new();
        let mut phi_neighbors = vec![Vec::new(); n_dets];
        for &(a, b, w) in &costs.phi {
            phi_map.insert((a, b), w);
            if a.0 < n_dets && b.0 < n_dets {
                phi_neighbors[a.0].push((b, w));
                phi_neighbors[b.0].push((a, w));
            }
        }
        for nb in &mut phi_neighbors {
            nb.sort_by_key(|&(d, _)| d);
        }
        Instance {
            name: name.into(),
            graph,
            detections,
            costs,
            dets_by_part,
            phi_map,
            phi_neighbors,
        }
    }

    pub fn n_detections(&self) -> usize {
        self.detections.len()
    }

    pub fn n_parts(&self) -> usize {
        self.graph.n_parts()
    }

    pub fn part_of(&self, d: DetId) -> PartId {
        self.detections[d.0].part
    }

    pub fn theta(&self, d: DetId) -> f64 {
        self.costs.theta[d.0]
    }

    /// Pairwise cost for an unordered pair, zero when absent.
    pub fn phi(&self, a: DetId, b: DetId) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.phi_map.get(&key).copied().unwrap_or(0.0)
    }

    pub fn phi_neighbors(&self, d: DetId) -> &[(DetId, f64)] {
        &self.phi_neighbors[d.0]
    }

    pub fn dets_of_part(&self, p: PartId) -> &[DetId] {
        &self.dets_by_part[p.0]
    }

    /// Detections of major parts, ascending by id.
    pub fn major_detections(&self) -> Vec<DetId> {
        self.detections
            .iter()
            .filter(|d| self.graph.is_major(d.part))
            .map(|d| d.id)
            .collect()
    }

    /// Largest absolute cost entry; feeds the default dual-bias magnitude.
    pub fn max_abs_cost(&self) -> f64 {
        let t = self
            .costs
            .theta
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        let p = self
            .costs
            .phi
            .iter()
            .fold(0.0f64, |m, &(_, _, w)| m.max(w.abs()));
        t.max(p)
    }

    /// Non-fatal advisories, currently only the multi-major-part warning.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let majors = self.graph.major_parts();
        if majors.len() > 1 {
            out.push(format!(
                "instance has {} major parts; solvers only price skeletons anchored at the star root",
                majors.len()
            ));
        }
        out
    }

    /// Errors with the violation list unless the instance is valid.
    pub fn ensure_valid(&self) -> Result<(), Error> {
        let violations = validate_instance(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(
                violations.iter().map(|v| v.to_string()).collect(),
            ))
        }
    }
}

/// A single validation failure, printable with offending ids.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoParts,
    DuplicatePartName(String),
    TreeNotSpanning(String),
    StarRootNotMajor(PartId),
    NoMajorPart,
    DuplicateDetectionId(DetId),
    NonDenseDetectionIds { expected: usize, got: usize },
    DetectionPartOutOfRange(DetId, PartId),
    ThetaLengthMismatch { expected: usize, got: usize },
    NonFiniteCost(String),
    PhiSelfPair(DetId),
    PhiDetOutOfRange(DetId, DetId),
    PhiDuplicatePair(DetId, DetId),
    PhiUnsupportedPair(DetId, DetId),
    NoMajorDetection,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoParts => write!(f, "instance has no parts"),
            DuplicatePartName(n) => write!(f, "duplicate part name {n:?}"),
            TreeNotSpanning(why) => write!(f, "tree_edges do not form a spanning tree: {why}"),
            StarRootNotMajor(p) => write!(f, "star_root part {p} is not marked major"),
            NoMajorPart => write!(f, "no part is marked major"),
            DuplicateDetectionId(d) => write!(f, "duplicate detection id {d}"),
            NonDenseDetectionIds { expected, got } => {
                write!(f, "detection ids must be dense 0..{expected}, got max {got}")
            }
            DetectionPartOutOfRange(d, p) => {
                write!(f, "detection {d} references out-of-range part {p}")
            }
            ThetaLengthMismatch { expected, got } => {
                write!(f, "theta has {got} entries, expected {expected}")
            }
            NonFiniteCost(what) => write!(f, "non-finite cost in {what}"),
            PhiSelfPair(d) => write!(f, "phi pair ({d}, {d}) pairs a detection with itself"),
            PhiDetOutOfRange(a, b) => write!(f, "phi pair ({a}, {b}) references unknown detection"),
            PhiDuplicatePair(a, b) => write!(f, "phi pair ({a}, {b}) appears more than once"),
            PhiUnsupportedPair(a, b) => write!(
                f,
                "phi pair ({a}, {b}) spans parts that are neither tree-adjacent nor anchored at the star root"
            ),
            NoMajorDetection => write!(f, "no detection belongs to a major part"),
        }
    }
}

/// Checks every structural invariant; returns an empty list iff the instance
/// is well formed. Multi-major instances are legal here (see
/// `Instance::warnings`).
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = &inst.graph;
    let n_parts = g.n_parts();
    if n_parts == 0 {
        out.push(Violation::NoParts);
        return out;
    }
    let mut names = HashSet::new();
    for n in &g.part_names {
        if !names.insert(n.clone()) {
            out.push(Violation::DuplicatePartName(n.clone()));
        }
    }
    if g.major.len() != n_parts || !g.major.iter().any(|&m| m) {
        out.push(Violation::NoMajorPart);
    } else if !g.is_major(g.star_root) {
        out.push(Violation::StarRootNotMajor(g.star_root));
    }
    if g.tree_edges.len() != n_parts.saturating_sub(1) {
        out.push(Violation::TreeNotSpanning(format!(
            "{} edges for {} parts",
            g.tree_edges.len(),
            n_parts
        )));
    } else if g
        .tree_edges
        .iter()
        .any(|&(a, b)| a.0 >= n_parts || b.0 >= n_parts || a == b)
    {
        out.push(Violation::TreeNotSpanning(
            "edge endpoint out of range or self-loop".into(),
        ));
    } else if g.rooted_at(PartId(0)).is_none() {
        out.push(Violation::TreeNotSpanning("edges are not connected".into()));
    }

    let n_dets = inst.detections.len();
    let mut seen = HashSet::new();
    let mut max_id = 0usize;
    for d in &inst.detections {
        if !seen.insert(d.id) {
            out.push(Violation::DuplicateDetectionId(d.id));
        }
        max_id = max_id.max(d.id.0);
        if d.part.0 >= n_parts {
            out.push(Violation::DetectionPartOutOfRange(d.id, d.part));
        }
    }
    if n_dets > 0 && (max_id != n_dets - 1 || seen.len() != n_dets) {
        if seen.len() == n_dets {
            out.push(Violation::NonDenseDetectionIds {
                expected: n_dets,
                got: max_id,
            });
        }
    }

    if inst.costs.theta.len() != n_dets {
        out.push(Violation::ThetaLengthMismatch {
            expected: n_dets,
            got: inst.costs.theta.len(),
        });
    }
    if inst.costs.theta.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFiniteCost("theta".into()));
    }
    if !inst.costs.omega.is_finite() {
        out.push(Violation::NonFiniteCost("omega".into()));
    }

    let ids_ok = out.iter().all(|v| {
        !matches!(
            v,
            Violation::DuplicateDetectionId(_)
                | Violation::NonDenseDetectionIds { .. }
                | Violation::DetectionPartOutOfRange(..)
        )
    });
    let mut pair_seen = HashSet::new();
    for &(a, b, w) in &inst.costs.phi {
        if a == b {
            out.push(Violation::PhiSelfPair(a));
            continue;
        }
        if a.0 >= n_dets || b.0 >= n_dets {
            out.push(Violation::PhiDetOutOfRange(a, b));
            continue;
        }
        if !pair_seen.insert((a, b)) {
            out.push(Violation::PhiDuplicatePair(a, b));
        }
        if !w.is_finite() {
            out.push(Violation::NonFiniteCost(format!("phi ({a}, {b})")));
        }
        if ids_ok {
            let (pa, pb) = (inst.part_of(a), inst.part_of(b));
            let supported = pa == pb
                || g.tree_adjacent(pa, pb)
                || pa == g.star_root
                || pb == g.star_root;
            if !supported {
                out.push(Violation::PhiUnsupportedPair(a, b));
            }
        }
    }

    if ids_ok
        && !inst
            .detections
            .iter()
            .any(|d| d.part.0 < n_parts && g.is_major(d.part))
    {
        out.push(Violation::NoMajorDetection);
    }
    out
}

// ---- file format ----

#[derive(Serialize, Deserialize)]
struct PartFile {
    name: String,
    major: bool,
}

#[derive(Serialize, Deserialize)]
struct PhiFile {
    d1: usize,
    d2: usize,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct DetectionFile {
    id: usize,
    part: String,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default)]
    name: String,
    parts: Vec<PartFile>,
    tree_edges: Vec<(String, String)>,
    star_root: String,
    detections: Vec<DetectionFile>,
    theta: Vec<f64>,
    phi: Vec<PhiFile>,
    omega: f64,
}

fn part_index(names: &[String], name: &str) -> Result<PartId, Error> {
    names
        .iter()
        .position(|n| n == name)
        .map(PartId)
        .ok_or_else(|| Error::Format(format!("unknown part name {name:?}")))
}

/// Parses an instance from its JSON representation and validates it.
pub fn instance_from_json(text: &str) -> Result<Instance, Error> {
    let raw: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let names: Vec<String> = raw.parts.iter().map(|p| p.name.clone()).collect();
    let graph = PartGraph {
        major: raw.parts.iter().map(|p| p.major).collect(),
        star_root: part_index(&names, &raw.star_root)?,
        tree_edges: raw
            .tree_edges
            .iter()
            .map(|(a, b)| Ok((part_index(&names, a)?, part_index(&names, b)?)))
            .collect::<Result<_, Error>>()?,
        part_names: names,
    };
    let detections = raw
        .detections
        .iter()
        .map(|d| {
            Ok(Detection {
                id: DetId(d.id),
                part: part_index(&graph.part_names, &d.part)?,
            })
        })
        .collect::<Result<_, Error>>()?;
    let costs = CostModel {
        theta: raw.theta,
        phi: raw
            .phi
            .iter()
            .map(|t| (DetId(t.d1), DetId(t.d2), t.w))
            .collect(),
        omega: raw.omega,
    };
    let inst = Instance::new(raw.name, graph, detections, costs);
    inst.ensure_valid()?;
    Ok(inst)
}

/// Serializes an instance to its canonical JSON form (stable field and
/// element order, so equal instances produce identical bytes).
pub fn instance_to_json(inst: &Instance) -> String {
    let raw = InstanceFile {
        name: inst.name.clone(),
        parts: inst
            .graph
            .part_names
            .iter()
            .enumerate()
            .map(|(i, n)| PartFile {
                name: n.clone(),
                major: inst.graph.major[i],
            })
            .collect(),
        tree_edges: inst
            .graph
            .tree_edges
            .iter()
            .map(|&(a, b)| {
                (
                    inst.graph.part_names[a.0].clone(),
                    inst.graph.part_names[b.0].clone(),
                )
            })
            .collect(),
        star_root: inst.graph.part_names[inst.graph.star_root.0].clone(),
        detections: inst
            .detections
            .iter()
            .map(|d| DetectionFile {
                id: d.id.0,
                part: inst.graph.part_names[d.part.0].clone(),
            })
            .collect(),
        theta: inst.costs.theta.clone(),
        phi: inst
            .costs
            .phi
            .iter()
            .map(|&(a, b, w)| PhiFile {
                d1: a.0,
                d2: b.0,
                w,
            })
            .collect(),
        omega: inst.costs.omega,
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("instance serialization");
    s.push('\n');
    s
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    instance_from_json(&text)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    std::fs::write(path, instance_to_json(inst))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

// ---- generator ----

/// Random instance: part 0 is the sole major part and star root, the part
/// tree is a random attachment tree, `theta` is uniform `[-cost_scale, 0]`,
/// `phi` is uniform `[-cost_scale/2, cost_scale/2]` with density 0.5 on the
/// supported pairs, and `omega = cost_scale / 2`. Deterministic in `seed`.
pub fn generate_instance(
    n_parts: usize,
    dets_per_part: usize,
    cost_scale: f64,
    seed: u64,
) -> Instance {
    assert!(n_parts >= 1 && dets_per_part >= 1 && cost_scale > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part_names = (0..n_parts).map(|p| format!("p{p}")).collect::<Vec<_>>();
    let mut major = vec![false; n_parts];
    major[0] = true;
    let mut tree_edges = Vec::with_capacity(n_parts.saturating_sub(1));
    for i in 1..n_parts {
        let parent = rng.random_range(0..i);
        tree_edges.push((PartId(parent), PartId(i)));
    }
    let graph = PartGraph {
        part_names,
        major,
        tree_edges,
        star_root: PartId(0),
    };
    let mut detections = Vec::with_capacity(n_parts * dets_per_part);
    for p in 0..n_parts {
        for k in 0..dets_per_part {
            detections.push(Detection {
                id: DetId(p * dets_per_part + k),
                part: PartId(p),
            });
        }
    }
    let n_dets = detections.len();
    let theta: Vec<f64> = (0..n_dets)
        .map(|_| -cost_scale * rng.random::<f64>())
        .collect();
    let mut phi = Vec::new();
    for a in 0..n_dets {
        for b in (a + 1)..n_dets {
            let (pa, pb) = (detections[a].part, detections[b].part);
            let supported = pa == pb
                || graph.tree_adjacent(pa, pb)
                || pa == graph.star_root
                || pb == graph.star_root;
            if !supported {
                continue;
            }
            if rng.random::<f64>() < 0.5 {
                let w = (rng.random::<f64>() - 0.5) * cost_scale;
                phi.push((DetId(a), DetId(b), w));
            }
        }
    }
    let costs = CostModel {
        theta,
        phi,
        omega: cost_scale / 2.0,
    };
    let name = format!("gen-p{n_parts}-d{dets_per_part}-s{seed}");
    Instance::new(name, graph, detections, costs)
}

// ---- solver configuration ----

/// How local-assignment pricing searches over local detection sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMode {
    /// Enumerates all local sets up to the configured size cap. Always valid.
    ExactEnumeration,
    /// Thresholds each local detection independently. Only valid when the
    /// candidate local detections carry no pairwise cost among themselves.
    SeparableFast,
}

/// Numeric and search knobs shared by every solver entry point.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub lp_tolerance: f64,
    /// Dual-bias magnitude; `None` derives `1e-6 * (1 + max |cost|)` from the
    /// instance at solve time.
    pub bias_epsilon: Option<f64>,
    pub time_cap_seconds: f64,
    /// Cap on local detections per local assignment; `usize::MAX` = no cap.
    pub max_locals_per_assignment: usize,
    pub rng_seed: u64,
    pub pricing_mode: PricingMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lp_tolerance: 1e-7,
            bias_epsilon: None,
            time_cap_seconds: 300.0,
            max_locals_per_assignment: usize::MAX,
            rng_seed: 0,
            pricing_mode: PricingMode::ExactEnumeration,
        }
    }
}

impl SolverConfig {
    pub fn bias_for(&self, inst: &Instance) -> f64 {
        match self.bias_epsilon {
            Some(e) => e,
            None => 1e-6 * (1.0 + inst.max_abs_cost()),
        }
    }

    pub fn check(&self) -> Result<(), Error> {
        if !(self.lp_tolerance > 0.0) {
            return Err(Error::Config("lp_tolerance must be positive".into()));
        }
        if let Some(e) = self.bias_epsilon {
            if !(e > 0.0) {
                return Err(Error::Config("bias_epsilon must be positive".into()));
            }
        }
        if !(self.time_cap_seconds > 0.0) {
            return Err(Error::Config("time_cap_seconds must be positive".into()));
        }
        Ok(())
    }
}
