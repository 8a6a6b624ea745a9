//! Directed acyclic graphs over named, typed variables.
//!
//! A [`Dag`] is the structural prior the scoring layer consumes: node names
//! line up with dataset columns, node kinds with column kinds. All operations
//! here are pure (they borrow `&self` and return new values), so graphs can
//! be shared freely across worker threads.
//!
//! Besides validation and topological ordering this module provides the
//! graph surgery used by the experiment suites: pruning a target's outgoing
//! edges, sampling random edge-subset subgraphs, mutating a graph into a
//! near-miss "imposter", structural Hamming distance, and brute-force Markov
//! equivalence class size for small graphs.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Variable kind attached to each vertex, mirrored by dataset columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Continuous,
    /// Categorical with the given number of levels; values are codes
    /// `0..cardinality`.
    Discrete(usize),
}

impl NodeKind {
    pub fn is_discrete(self) -> bool {
        matches!(self, NodeKind::Discrete(_))
    }

    pub fn cardinality(self) -> Option<usize> {
        match self {
            NodeKind::Discrete(k) => Some(k),
            NodeKind::Continuous => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cycle detected through node indices {cycle:?}")]
    CycleDetected { cycle: Vec<usize> },
    #[error("edge ({parent}, {child}) references a node outside 0..{nodes}")]
    DanglingEdge {
        parent: usize,
        child: usize,
        nodes: usize,
    },
    #[error("duplicate edge ({parent}, {child})")]
    DuplicateEdge { parent: usize, child: usize },
    #[error("duplicate node name {name:?}")]
    DuplicateNodeName { name: String },
    #[error("{names} names but {kinds} kinds")]
    ShapeMismatch { names: usize, kinds: usize },
    #[error("discrete node {node} must have cardinality >= 1")]
    InvalidCardinality { node: usize },
    #[error("node index {index} out of range for {nodes} nodes")]
    InvalidNode { index: usize, nodes: usize },
    #[error("graphs are defined over different node sets")]
    NodeSetMismatch,
    #[error(
        "equivalence class enumeration supports at most 10 nodes and 12 \
         skeleton edges, got {nodes} nodes and {skeleton_edges} edges"
    )]
    TooLarge {
        nodes: usize,
        skeleton_edges: usize,
    },
    #[error("no acyclic mutation available after resampling")]
    NoFeasibleMutation,
    #[error("mutation count must be at least 1")]
    InvalidMutationCount,
    #[error("edge ({parent}, {child}) is both required and forbidden")]
    PriorConflict { parent: usize, child: usize },
    #[error("node {node} appears in more than one tier")]
    NodeInMultipleTiers { node: usize },
    #[error("edge ({parent}, {child}) points from a later tier to an earlier one")]
    TierViolation { parent: usize, child: usize },
    #[error("required edge ({parent}, {child}) is absent from the graph")]
    RequiredEdgeAbsent { parent: usize, child: usize },
    #[error("forbidden edge ({parent}, {child}) is present in the graph")]
    ForbiddenEdgePresent { parent: usize, child: usize },
}

/// A directed acyclic graph over named, typed nodes.
///
/// Edges are stored as `(parent, child)` index pairs, kept sorted and
/// deduplicated, so structurally equal graphs compare equal and serialize
/// identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    edges: Vec<(usize, usize)>,
}

impl Dag {
    /// Builds a DAG and validates it (shape, names, dangling/duplicate
    /// edges, acyclicity). Edge order in the input does not matter.
    pub fn new(
        names: Vec<String>,
        kinds: Vec<NodeKind>,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        edges.sort_unstable();
        let dag = Dag { names, kinds, edges };
        dag.validate()?;
        Ok(dag)
    }

    /// Convenience constructor for all-continuous graphs.
    pub fn all_continuous(
        names: Vec<String>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        let kinds = vec![NodeKind::Continuous; names.len()];
        Dag::new(names, kinds, edges)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    /// Sorted `(parent, child)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.edges.binary_search(&(parent, child)).is_ok()
    }

    /// Parents of `node` in ascending index order.
    pub fn parents(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, c)| c == node)
            .map(|&(p, _)| p)
            .collect()
    }

    /// Children of `node` in ascending index order.
    pub fn children(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(p, _)| p == node)
            .map(|&(_, c)| c)
            .collect()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(p, c)| p == node || c == node)
            .count()
    }

    /// Checks every structural invariant: matching name/kind arity, unique
    /// names, valid cardinalities, edges within range, no duplicates, no
    /// self-loops, and acyclicity. The cycle error lists one offending cycle.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.names.len();
        if self.kinds.len() != n {
            return Err(GraphError::ShapeMismatch {
                names: n,
                kinds: self.kinds.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for name in &self.names {
            if !seen.insert(name.as_str()) {
                return Err(GraphError::DuplicateNodeName { name: name.clone() });
            }
        }
        for (node, kind) in self.kinds.iter().enumerate() {
            if kind.cardinality() == Some(0) {
                return Err(GraphError::InvalidCardinality { node });
            }
        }
        let mut sorted = self.edges.clone();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(GraphError::DuplicateEdge {
                    parent: pair[0].0,
                    child: pair[0].1,
                });
            }
        }
        for &(p, c) in &self.edges {
            if p >= n || c >= n {
                return Err(GraphError::DanglingEdge {
                    parent: p,
                    child: c,
                    nodes: n,
                });
            }
            if p == c {
                return Err(GraphError::CycleDetected { cycle: vec![p] });
            }
        }
        self.topological_order().map(|_| ())
    }

    /// Kahn's algorithm; among the ready nodes the smallest index is emitted
    /// first, so the order is deterministic.
    pub fn topological_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.names.len();
        let mut indegree = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &self.edges {
            indegree[c] += 1;
            children[p].push(c);
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let residual: BTreeSet<usize> =
                (0..n).filter(|v| !order.contains(v)).collect();
            return Err(GraphError::CycleDetected {
                cycle: self.find_cycle(&residual),
            });
        }
        Ok(order)
    }

    /// Walks predecessors inside the residual (cyclic) node set until a node
    /// repeats; the repeated segment, reversed, is a directed cycle.
    fn find_cycle(&self, residual: &BTreeSet<usize>) -> Vec<usize> {
        let start = *residual.iter().next().expect("residual set is non-empty");
        let mut path = vec![start];
        let mut current = start;
        loop {
            let pred = self
                .edges
                .iter()
                .filter(|&&(p, c)| c == current && residual.contains(&p))
                .map(|&(p, _)| p)
                .next()
                .expect("every residual node has a residual predecessor");
            if let Some(pos) = path.iter().position(|&v| v == pred) {
                let mut cycle: Vec<usize> = path[pos..].to_vec();
                cycle.reverse();
                return cycle;
            }
            path.push(pred);
            current = pred;
        }
    }

    /// Returns a copy with every edge out of `target` removed. Parents of
    /// `target` are untouched.
    pub fn prune_target_outgoing(&self, target: usize) -> Result<Dag, GraphError> {
        self.check_node(target)?;
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(p, _)| p != target)
            .collect();
        Ok(Dag {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            edges,
        })
    }

    /// Structural Hamming distance over ordered edge pairs: each missing or
    /// extra directed edge counts 1, so a reversed edge costs 2. Nodes are
    /// matched by name; both graphs must cover the same name set.
    pub fn hamming_distance(&self, other: &Dag) -> Result<usize, GraphError> {
        if self.names.len() != other.names.len() {
            return Err(GraphError::NodeSetMismatch);
        }
        let mut map = Vec::with_capacity(other.names.len());
        for name in &other.names {
            match self.index_of(name) {
                Some(i) => map.push(i),
                None => return Err(GraphError::NodeSetMismatch),
            }
        }
        let mine: BTreeSet<(usize, usize)> = self.edges.iter().copied().collect();
        let theirs: BTreeSet<(usize, usize)> = other
            .edges
            .iter()
            .map(|&(p, c)| (map[p], map[c]))
            .collect();
        Ok(mine.symmetric_difference(&theirs).count())
    }

    /// Keeps a uniformly random subset of `ceil(keep_fraction * E)` edges.
    /// `keep_fraction` is clamped to `[0, 1]`; 1.0 returns an identical graph
    /// and 0.0 an edgeless one.
    pub fn random_subgraph(&self, keep_fraction: f64, seed: u64) -> Dag {
        let e = self.edges.len();
        let kf = keep_fraction.clamp(0.0, 1.0);
        let keep = ((kf * e as f64).ceil() as usize).min(e);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen: Vec<usize> = sample(&mut rng, e, keep).into_vec();
        chosen.sort_unstable();
        let edges = chosen.iter().map(|&i| self.edges[i]).collect();
        Dag {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            edges,
        }
    }

    /// Produces a plausible-but-wrong variant of the graph by applying
    /// `n_mutations` distinct edits around `target`: reversing an edge
    /// incident to it or adding a new edge into it. Mutations that would
    /// create a cycle are resampled (up to 1000 draws per mutation); each
    /// node pair is edited at most once so edits cannot cancel out.
    pub fn make_imposter(
        &self,
        target: usize,
        n_mutations: usize,
        seed: u64,
    ) -> Result<Dag, GraphError> {
        self.check_node(target)?;
        if n_mutations == 0 {
            return Err(GraphError::InvalidMutationCount);
        }
        let n = self.names.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: BTreeSet<(usize, usize)> = self.edges.iter().copied().collect();
        let mut touched: BTreeSet<(usize, usize)> = BTreeSet::new();
        for _ in 0..n_mutations {
            let mut candidates = Vec::new();
            for &(p, c) in &edges {
                let pair = (p.min(c), p.max(c));
                if (p == target || c == target) && !touched.contains(&pair) {
                    candidates.push(Mutation::Reverse(p, c));
                }
            }
            for u in 0..n {
                let pair = (u.min(target), u.max(target));
                if u != target && !edges.contains(&(u, target)) && !touched.contains(&pair)
                {
                    candidates.push(Mutation::Add(u, target));
                }
            }
            let mut attempts = 0;
            loop {
                if candidates.is_empty() || attempts >= 1000 {
                    return Err(GraphError::NoFeasibleMutation);
                }
                attempts += 1;
                let i = rng.random_range(0..candidates.len());
                let mutation = candidates[i];
                let mut trial = edges.clone();
                let pair = match mutation {
                    Mutation::Reverse(p, c) => {
                        trial.remove(&(p, c));
                        trial.insert((c, p));
                        (p.min(c), p.max(c))
                    }
                    Mutation::Add(u, t) => {
                        trial.insert((u, t));
                        (u.min(t), u.max(t))
                    }
                };
                if edge_set_is_acyclic(n, &trial) {
                    edges = trial;
                    touched.insert(pair);
                    break;
                }
                candidates.swap_remove(i);
            }
        }
        Ok(Dag {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            edges: edges.into_iter().collect(),
        })
    }

    /// Size of the graph's Markov equivalence class, by enumerating every
    /// orientation of the skeleton and counting the acyclic ones with the
    /// same v-structures. Intended for small graphs; larger ones get
    /// [`GraphError::TooLarge`].
    pub fn mec_size(&self) -> Result<usize, GraphError> {
        let n = self.names.len();
        let skeleton: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(p, c)| (p.min(c), p.max(c)))
            .collect();
        if n > 10 || skeleton.len() > 12 {
            return Err(GraphError::TooLarge {
                nodes: n,
                skeleton_edges: skeleton.len(),
            });
        }
        let adjacent: BTreeSet<(usize, usize)> = skeleton.iter().copied().collect();
        let own = v_structures(n, &self.edges, &adjacent);
        let mut count = 0usize;
        for mask in 0u32..(1u32 << skeleton.len()) {
            let oriented: BTreeSet<(usize, usize)> = skeleton
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 0 { (a, b) } else { (b, a) })
                .collect();
            if !edge_set_is_acyclic(n, &oriented) {
                continue;
            }
            let oriented_vec: Vec<(usize, usize)> = oriented.iter().copied().collect();
            if v_structures(n, &oriented_vec, &adjacent) == own {
                count += 1;
            }
        }
        Ok(count)
    }

    fn check_node(&self, node: usize) -> Result<(), GraphError> {
        if node >= self.names.len() {
            return Err(GraphError::InvalidNode {
                index: node,
                nodes: self.names.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Mutation {
    Reverse(usize, usize),
    Add(usize, usize),
}

fn edge_set_is_acyclic(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(p, c) in edges {
        indegree[c] += 1;
        children[p].push(c);
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                stack.push(c);
            }
        }
    }
    seen == n
}

/// Colliders `a -> v <- b` where `a` and `b` are not adjacent, encoded as
/// `(min(a, b), v, max(a, b))`.
fn v_structures(
    n: usize,
    edges: &[(usize, usize)],
    adjacent: &BTreeSet<(usize, usize)>,
) -> BTreeSet<(usize, usize, usize)> {
    let mut parents = vec![Vec::new(); n];
    for &(p, c) in edges {
        parents[c].push(p);
    }
    let mut out = BTreeSet::new();
    for (v, ps) in parents.iter().enumerate() {
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                let (a, b) = (ps[i].min(ps[j]), ps[i].max(ps[j]));
                if !adjacent.contains(&(a, b)) {
                    out.insert((a, v, b));
                }
            }
        }
    }
    out
}

// ── Prior knowledge ─────────────────────────────────────────────────────────

/// Background constraints that a graph can be checked against: edges that
/// must exist, edges that must not, and optional temporal tiers (a node in a
/// later tier cannot point at an earlier one). Nodes left out of `tiers` are
/// unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorKnowledge {
    pub required: BTreeSet<(usize, usize)>,
    pub forbidden: BTreeSet<(usize, usize)>,
    pub tiers: Option<Vec<Vec<usize>>>,
}

impl PriorKnowledge {
    /// Internal consistency: required and forbidden sets are disjoint, no
    /// node sits in two tiers, indices are in range, and no required edge
    /// points backwards in tier order.
    pub fn validate(&self, node_count: usize) -> Result<(), GraphError> {
        for &(p, c) in self.required.intersection(&self.forbidden) {
            return Err(GraphError::PriorConflict { parent: p, child: c });
        }
        for &(p, c) in self.required.iter().chain(self.forbidden.iter()) {
            if p >= node_count || c >= node_count {
                return Err(GraphError::DanglingEdge {
                    parent: p,
                    child: c,
                    nodes: node_count,
                });
            }
        }
        let tier_of = self.tier_map(node_count)?;
        for &(p, c) in &self.required {
            if let (Some(tp), Some(tc)) = (tier_of[p], tier_of[c]) {
                if tp > tc {
                    return Err(GraphError::TierViolation { parent: p, child: c });
                }
            }
        }
        Ok(())
    }

    /// Checks a graph against the constraints: every required edge present,
    /// no forbidden edge present, no edge violating tier order.
    pub fn check_dag(&self, dag: &Dag) -> Result<(), GraphError> {
        self.validate(dag.node_count())?;
        for &(p, c) in &self.required {
            if !dag.has_edge(p, c) {
                return Err(GraphError::RequiredEdgeAbsent { parent: p, child: c });
            }
        }
        for &(p, c) in &self.forbidden {
            if dag.has_edge(p, c) {
                return Err(GraphError::ForbiddenEdgePresent { parent: p, child: c });
            }
        }
        let tier_of = self.tier_map(dag.node_count())?;
        for &(p, c) in dag.edges() {
            if let (Some(tp), Some(tc)) = (tier_of[p], tier_of[c]) {
                if tp > tc {
                    return Err(GraphError::TierViolation { parent: p, child: c });
                }
            }
        }
        Ok(())
    }

    fn tier_map(&self, node_count: usize) -> Result<Vec<Option<usize>>, GraphError> {
        let mut tier_of = vec![None; node_count];
        if let Some(tiers) = &self.tiers {
            for (t, members) in tiers.iter().enumerate() {
                for &node in members {
                    if node >= node_count {
                        return Err(GraphError::InvalidNode {
                            index: node,
                            nodes: node_count,
                        });
                    }
                    if tier_of[node].is_some() {
                        return Err(GraphError::NodeInMultipleTiers { node });
                    }
                    tier_of[node] = Some(t);
                }
            }
        }
        Ok(tier_of)
    }
}

// ── On-disk format ──────────────────────────────────────────────────────────

/// A DAG plus optional prior knowledge, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagFile {
    pub dag: Dag,
    pub prior_knowledge: Option<PriorKnowledge>,
}

#[derive(Debug, Error)]
pub enum DagFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dag file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown node name {name:?}")]
    UnknownNode { name: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    name: String,
    kind: NodeKind,
}

#[derive(Serialize, Deserialize)]
struct PriorKnowledgeRepr {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    required_edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbidden_edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tiers: Option<Vec<Vec<String>>>,
}

/// Name-based JSON shape of a graph, shared by the standalone DAG file and
/// the structural-model file.
#[derive(Serialize, Deserialize)]
pub(crate) struct DagRepr {
    nodes: Vec<NodeRepr>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct DagFileRepr {
    #[serde(flatten)]
    dag: DagRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_knowledge: Option<PriorKnowledgeRepr>,
}

impl Dag {
    pub(crate) fn to_repr(&self) -> DagRepr {
        DagRepr {
            nodes: (0..self.node_count())
                .map(|i| NodeRepr {
                    name: self.name(i).to_string(),
                    kind: self.kind(i),
                })
                .collect(),
            edges: self
                .edges()
                .iter()
                .map(|&(p, c)| (self.name(p).to_string(), self.name(c).to_string()))
                .collect(),
        }
    }

    pub(crate) fn from_repr(repr: &DagRepr) -> Result<Dag, DagFileError> {
        let names: Vec<String> = repr.nodes.iter().map(|n| n.name.clone()).collect();
        let kinds: Vec<NodeKind> = repr.nodes.iter().map(|n| n.kind).collect();
        let mut edges = Vec::with_capacity(repr.edges.len());
        for (p, c) in &repr.edges {
            let resolve = |name: &String| {
                names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| DagFileError::UnknownNode { name: name.clone() })
            };
            edges.push((resolve(p)?, resolve(c)?));
        }
        Ok(Dag::new(names, kinds, edges)?)
    }
}

impl DagFile {
    pub fn new(dag: Dag) -> Self {
        DagFile {
            dag,
            prior_knowledge: None,
        }
    }

    /// Parses and fully validates a JSON graph file: node names in edges and
    /// prior knowledge must resolve, the graph must be a valid DAG, and the
    /// graph must satisfy its own prior knowledge.
    pub fn load(path: &Path) -> Result<DagFile, DagFileError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<DagFile, DagFileError> {
        let repr: DagFileRepr = serde_json::from_str(text)?;
        let dag = Dag::from_repr(&repr.dag)?;
        let resolve = |name: &str| -> Result<usize, DagFileError> {
            dag.index_of(name).ok_or_else(|| DagFileError::UnknownNode {
                name: name.to_string(),
            })
        };
        let prior_knowledge = match &repr.prior_knowledge {
            None => None,
            Some(pk) => {
                let mut required = BTreeSet::new();
                for (p, c) in &pk.required_edges {
                    required.insert((resolve(p)?, resolve(c)?));
                }
                let mut forbidden = BTreeSet::new();
                for (p, c) in &pk.forbidden_edges {
                    forbidden.insert((resolve(p)?, resolve(c)?));
                }
                let tiers = match &pk.tiers {
                    None => None,
                    Some(tiers) => {
                        let mut out = Vec::with_capacity(tiers.len());
                        for tier in tiers {
                            let mut members = Vec::with_capacity(tier.len());
                            for name in tier {
                                members.push(resolve(name)?);
                            }
                            out.push(members);
                        }
                        Some(out)
                    }
                };
                Some(PriorKnowledge {
                    required,
                    forbidden,
                    tiers,
                })
            }
        };
        if let Some(pk) = &prior_knowledge {
            pk.check_dag(&dag)?;
        }
        Ok(DagFile {
            dag,
            prior_knowledge,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), DagFileError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Canonical JSON: nodes in index order, edges sorted, trailing newline.
    /// Loading and saving a file is byte-stable.
    pub fn to_json(&self) -> String {
        let dag = &self.dag;
        let name = |i: usize| dag.name(i).to_string();
        let repr = DagFileRepr {
            dag: dag.to_repr(),
            prior_knowledge: self.prior_knowledge.as_ref().map(|pk| PriorKnowledgeRepr {
                required_edges: pk.required.iter().map(|&(p, c)| (name(p), name(c))).collect(),
                forbidden_edges: pk.forbidden.iter().map(|&(p, c)| (name(p), name(c))).collect(),
                tiers: pk.tiers.as_ref().map(|tiers| {
                    tiers
                        .iter()
                        .map(|tier| tier.iter().map(|&v| name(v)).collect())
                        .collect()
                }),
            }),
        };
        let mut text = serde_json::to_string_pretty(&repr).expect("dag serialization");
        text.push('\n');
        text
    }
}
