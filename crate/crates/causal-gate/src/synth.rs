//! Synthetic data generation from linear or exponential additive-noise
//! structural models.
//!
//! A [`Scm`] attaches a mechanism to every node of a continuous DAG. Each
//! node carries an enumeration number (a permutation of `0..n`), and the
//! coefficient a node contributes *as a parent* is `+1` when its enumeration
//! number is odd and `-1` when it is even. A node's value is the signed sum
//! of its (possibly exponentiated) parent values plus Gaussian noise, so a
//! model is fully described by its graph, per-node function kinds, and
//! per-node noise laws. Sampling walks the graph in topological order with a
//! seeded generator, making every dataset reproducible from `(model, seed)`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Column, ColumnSpec, DataError, Schema, Table};
use crate::graph::{Dag, DagFileError, GraphError, NodeKind};
use crate::seeding::derive_seed;

/// Arguments to the exponential mechanism are clamped to this magnitude so
/// deep chains cannot overflow to infinity.
pub const EXP_CLIP: f64 = 10.0;

// ── Mechanisms and noise ──────────────────────────────────────────────────

/// Functional form of a node's mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    /// `x = sum_j s_j * pa_j + u`
    Linear,
    /// `x = sum_j s_j * exp(clip(pa_j)) + u`
    Exponential,
}

/// A univariate normal law, parameterised by variance rather than standard
/// deviation to match how perturbations are usually reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Self {
        Gaussian { mean, variance }
    }

    pub fn standard() -> Self {
        Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }

    /// Draws `n` values. Zero variance yields the constant mean, which the
    /// underlying sampler does not support directly but is useful for tests
    /// and degenerate models.
    fn sample_n(&self, rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<f64>, SynthError> {
        if !self.mean.is_finite() || !self.variance.is_finite() || self.variance < 0.0 {
            return Err(SynthError::InvalidNoise {
                mean: self.mean,
                variance: self.variance,
            });
        }
        if self.variance == 0.0 {
            return Ok(vec![self.mean; n]);
        }
        let normal = Normal::new(self.mean, self.variance.sqrt()).expect("checked parameters");
        Ok((0..n).map(|_| normal.sample(rng)).collect())
    }
}

/// Replaces the noise law of a chosen set of nodes during sampling; the
/// remaining nodes keep the law stored in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub nodes: BTreeSet<usize>,
    pub noise: Gaussian,
}

impl Perturbation {
    pub fn all_nodes(dag: &Dag, noise: Gaussian) -> Self {
        Perturbation {
            nodes: (0..dag.node_count()).collect(),
            noise,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("synthetic graphs need at least 2 nodes, got {n}")]
    TooFewNodes { n: usize },
    #[error("graph construction failed: {0}")]
    Graph(#[from] GraphError),
    #[error("model field `{field}` has length {got}, expected one entry per node ({expected})")]
    FieldLength {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("enumeration is not a permutation of 0..{n}")]
    BadEnumeration { n: usize },
    #[error("sign for node {node} is {sign}, inconsistent with its enumeration parity")]
    BadSign { node: usize, sign: f64 },
    #[error("noise law with mean {mean} and variance {variance} is invalid")]
    InvalidNoise { mean: f64, variance: f64 },
    #[error("perturbation refers to node index {node}, graph has {n} nodes")]
    PerturbationNode { node: usize, n: usize },
    #[error("unknown node `{name}`")]
    UnknownNode { name: String },
    #[error("node `{name}` must be continuous for this operation")]
    NotContinuous { name: String },
    #[error("sampling produced a non-finite value at node `{name}`")]
    NonFinite { name: String },
    #[error("structural models require all-continuous graphs; node `{name}` is discrete")]
    DiscreteNode { name: String },
    #[error("table assembly failed: {0}")]
    Data(#[from] DataError),
    #[error("model file i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model file graph is invalid: {0}")]
    DagFile(#[from] DagFileError),
}

// ── Random graphs ─────────────────────────────────────────────────────────

/// Samples a uniformly random labelled DAG layout on `n` continuous nodes
/// named `x0..x{n-1}`.
///
/// A random permutation fixes a causal order, the edge count is drawn
/// uniformly from `[n, n(n-1)/2]`, and that many forward pairs of the order
/// are kept. Every node therefore touches an edge with high probability and
/// the graph is acyclic by construction. For `n = 2` the upper bound is
/// below `n` and the single possible edge is always used.
pub fn random_dag(n: usize, seed: u64) -> Result<Dag, SynthError> {
    if n < 2 {
        return Err(SynthError::TooFewNodes { n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_edges = n * (n - 1) / 2;
    let min_edges = n.min(max_edges);
    let n_edges = rng.random_range(min_edges..=max_edges);

    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);

    let mut forward: Vec<(usize, usize)> = Vec::with_capacity(max_edges);
    for i in 0..n {
        for j in (i + 1)..n {
            forward.push((order[i], order[j]));
        }
    }
    let chosen = rand::seq::index::sample(&mut rng, forward.len(), n_edges);
    let edges: Vec<(usize, usize)> = chosen.iter().map(|k| forward[k]).collect();

    let names = (0..n).map(|i| format!("x{i}")).collect();
    Ok(Dag::all_continuous(names, edges)?)
}

/// Picks a node with degree at least one, uniformly at random. Returns
/// `None` when the graph has no edges at all.
pub fn random_connected_target(dag: &Dag, seed: u64) -> Option<usize> {
    let connected: Vec<usize> = (0..dag.node_count())
        .filter(|&v| dag.degree(v) > 0)
        .collect();
    if connected.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(connected[rng.random_range(0..connected.len())])
}

// ── Structural models ─────────────────────────────────────────────────────

/// A complete generative model: graph, enumeration numbers, function kinds,
/// parent signs, and per-node noise laws.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    dag: Dag,
    enumeration: Vec<usize>,
    kinds: Vec<FunctionKind>,
    signs: Vec<f64>,
    noise: Vec<Gaussian>,
}

fn parity_sign(enumeration_number: usize) -> f64 {
    if enumeration_number % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl Scm {
    /// Assembles a model from explicit parts and validates their mutual
    /// consistency. The graph must be all-continuous, `enumeration` must be
    /// a permutation of the node indices, and each sign must equal the
    /// parity sign of the node's enumeration number.
    pub fn new(
        dag: Dag,
        enumeration: Vec<usize>,
        kinds: Vec<FunctionKind>,
        signs: Vec<f64>,
        noise: Vec<Gaussian>,
    ) -> Result<Scm, SynthError> {
        let n = dag.node_count();
        for v in 0..n {
            if dag.kind(v).is_discrete() {
                return Err(SynthError::DiscreteNode {
                    name: dag.name(v).to_string(),
                });
            }
        }
        for (field, got) in [
            ("enumeration", enumeration.len()),
            ("kinds", kinds.len()),
            ("signs", signs.len()),
            ("noise", noise.len()),
        ] {
            if got != n {
                return Err(SynthError::FieldLength {
                    field,
                    got,
                    expected: n,
                });
            }
        }
        let mut seen = vec![false; n];
        for &e in &enumeration {
            if e >= n || seen[e] {
                return Err(SynthError::BadEnumeration { n });
            }
            seen[e] = true;
        }
        for v in 0..n {
            if signs[v] != parity_sign(enumeration[v]) {
                return Err(SynthError::BadSign {
                    node: v,
                    sign: signs[v],
                });
            }
        }
        for law in &noise {
            if !law.mean.is_finite() || !law.variance.is_finite() || law.variance < 0.0 {
                return Err(SynthError::InvalidNoise {
                    mean: law.mean,
                    variance: law.variance,
                });
            }
        }
        Ok(Scm {
            dag,
            enumeration,
            kinds,
            signs,
            noise,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn enumeration(&self) -> &[usize] {
        &self.enumeration
    }

    pub fn kinds(&self) -> &[FunctionKind] {
        &self.kinds
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn noise(&self) -> &[Gaussian] {
        &self.noise
    }

    /// Draws `n_rows` joint samples by ancestral sampling in topological
    /// order. Nodes listed in the perturbation draw their noise from the
    /// perturbation's law instead of the model's own.
    pub fn sample(
        &self,
        n_rows: usize,
        seed: u64,
        perturbation: Option<&Perturbation>,
    ) -> Result<Table, SynthError> {
        let n = self.dag.node_count();
        if let Some(p) = perturbation {
            if let Some(&node) = p.nodes.iter().find(|&&v| v >= n) {
                return Err(SynthError::PerturbationNode { node, n });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = self.dag.topological_order().expect("validated DAG");

        let mut values: Vec<Vec<f64>> = vec![Vec::new(); n];
        for &v in &order {
            let law = match perturbation {
                Some(p) if p.nodes.contains(&v) => p.noise,
                _ => self.noise[v],
            };
            let mut column = law.sample_n(&mut rng, n_rows)?;
            for parent in self.dag.parents(v) {
                let sign = self.signs[parent];
                let parent_values = &values[parent];
                match self.kinds[v] {
                    FunctionKind::Linear => {
                        for (out, &x) in column.iter_mut().zip(parent_values) {
                            *out += sign * x;
                        }
                    }
                    FunctionKind::Exponential => {
                        for (out, &x) in column.iter_mut().zip(parent_values) {
                            *out += sign * x.clamp(-EXP_CLIP, EXP_CLIP).exp();
                        }
                    }
                }
            }
            if column.iter().any(|x| !x.is_finite()) {
                return Err(SynthError::NonFinite {
                    name: self.dag.name(v).to_string(),
                });
            }
            values[v] = column;
        }

        let specs = (0..n)
            .map(|v| ColumnSpec::continuous(self.dag.name(v)))
            .collect();
        let schema = Schema::new(specs)?;
        let columns = values.into_iter().map(Column::Continuous).collect();
        Ok(Table::new(schema, columns)?)
    }

    /// Generates the fixed nine-dataset evaluation suite: every node's noise
    /// is shifted to each combination of mean in {0.5, 1.0, 1.5} and
    /// variance in {1.5, 2.0, 2.5}, mean-major, with one table per
    /// combination. Seeds derive from `seed` so the suite is reproducible.
    pub fn perturbation_grid(&self, n_rows: usize, seed: u64) -> Result<Vec<Table>, SynthError> {
        let mut tables = Vec::with_capacity(9);
        let mut index = 0u64;
        for mean in [0.5, 1.0, 1.5] {
            for variance in [1.5, 2.0, 2.5] {
                let noise = Gaussian::new(mean, variance);
                let perturbation = Perturbation::all_nodes(&self.dag, noise);
                let table_seed = derive_seed(seed, "perturbation-grid", index);
                tables.push(self.sample(n_rows, table_seed, Some(&perturbation))?);
                index += 1;
            }
        }
        Ok(tables)
    }

    // ── Serialization ─────────────────────────────────────────────────

    pub fn load(path: &Path) -> Result<Scm, SynthError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scm, SynthError> {
        let repr: ScmRepr = serde_json::from_str(text)?;
        let dag = Dag::from_repr(&repr.dag)?;
        Scm::new(dag, repr.enumeration, repr.kinds, repr.signs, repr.noise)
    }

    pub fn save(&self, path: &Path) -> Result<(), SynthError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Canonical pretty JSON with a trailing newline; load then save is
    /// byte-stable.
    pub fn to_json(&self) -> String {
        let repr = ScmRepr {
            dag: self.dag.to_repr(),
            enumeration: self.enumeration.clone(),
            kinds: self.kinds.clone(),
            signs: self.signs.clone(),
            noise: self.noise.clone(),
        };
        let mut text = serde_json::to_string_pretty(&repr).expect("model serialization");
        text.push('\n');
        text
    }
}

#[derive(Serialize, Deserialize)]
struct ScmRepr {
    dag: crate::graph::DagRepr,
    enumeration: Vec<usize>,
    kinds: Vec<FunctionKind>,
    signs: Vec<f64>,
    noise: Vec<Gaussian>,
}

/// Equips a DAG with randomly drawn mechanisms: a fresh enumeration
/// permutation, one function kind per node chosen uniformly, parity signs,
/// and standard-normal noise everywhere.
pub fn build_scm(dag: &Dag, seed: u64) -> Result<Scm, SynthError> {
    let n = dag.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut enumeration: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    enumeration.shuffle(&mut rng);
    let kinds: Vec<FunctionKind> = (0..n)
        .map(|_| {
            if rng.random::<bool>() {
                FunctionKind::Linear
            } else {
                FunctionKind::Exponential
            }
        })
        .collect();
    let signs = enumeration.iter().map(|&e| parity_sign(e)).collect();
    let noise = vec![Gaussian::standard(); n];
    Scm::new(dag.clone(), enumeration, kinds, signs, noise)
}

// ── Derived targets ───────────────────────────────────────────────────────

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Converts a continuous column into a Bernoulli label: row `i` becomes 1
/// with probability `sigmoid(x_i)`. The returned table is identical except
/// that `target` is a binary discrete column with categories "0" and "1".
pub fn bernoulli_target(table: &Table, target: &str, seed: u64) -> Result<Table, SynthError> {
    let schema = table.schema();
    let target_index = schema.column_index(target).ok_or_else(|| SynthError::UnknownNode {
        name: target.to_string(),
    })?;
    let values = match table.column(target_index) {
        Column::Continuous(v) => v,
        Column::Discrete(_) => {
            return Err(SynthError::NotContinuous {
                name: target.to_string(),
            })
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes: Vec<u32> = values
        .iter()
        .map(|&x| {
            if rng.random::<f64>() < sigmoid(x) {
                1
            } else {
                0
            }
        })
        .collect();

    let mut specs: Vec<ColumnSpec> = Vec::with_capacity(schema.columns.len());
    let mut columns: Vec<Column> = Vec::with_capacity(schema.columns.len());
    for (i, spec) in schema.columns.iter().enumerate() {
        if i == target_index {
            let mut binary = ColumnSpec::discrete(&spec.name, 2);
            binary.categories = Some(vec!["0".to_string(), "1".to_string()]);
            specs.push(binary);
            columns.push(Column::Discrete(codes.clone()));
        } else {
            specs.push(spec.clone());
            columns.push(table.column(i).clone());
        }
    }
    Ok(Table::new(Schema::new(specs)?, columns)?)
}

/// Rewrites the target node of a graph as a binary discrete node, leaving
/// everything else unchanged. Used alongside [`bernoulli_target`] so graph
/// and data agree on the target's kind.
pub fn binarize_target_dag(dag: &Dag, target: &str) -> Result<Dag, SynthError> {
    let target_index = dag.index_of(target).ok_or_else(|| SynthError::UnknownNode {
        name: target.to_string(),
    })?;
    let names: Vec<String> = (0..dag.node_count()).map(|v| dag.name(v).to_string()).collect();
    let kinds: Vec<NodeKind> = (0..dag.node_count())
        .map(|v| {
            if v == target_index {
                NodeKind::Discrete(2)
            } else {
                dag.kind(v)
            }
        })
        .collect();
    Ok(Dag::new(names, kinds, dag.edges().to_vec())?)
}

// ── Tests ─────────────────────────────────────────────────────────────────
