//! Entropy-based scoring of a dataset under a DAG.
//!
//! The log-likelihood of a table under a graph decomposes into per-node
//! conditional entropies: `LL = -N * sum_i H(X_i | parents(X_i))`, with every
//! entropy in nats. Each node picks an estimator from its kind and its
//! parents' kinds:
//!
//! * discrete child, discrete parents — plug-in entropy from contingency
//!   counts, no smoothing;
//! * continuous child, continuous parents — linear-Gaussian residual
//!   variance, `H = 0.5 * ln(2*pi*e*var)`;
//! * continuous child, mixed parents — one Gaussian fit per discrete parent
//!   configuration, weighted by cell probability;
//! * discrete child, any continuous parent — multinomial logistic fit by
//!   damped Newton, mean negative log-likelihood.
//!
//! [`causal_assurance_term`] is the piece of the scored likelihood that
//! changes when the target column is swapped for model predictions: the
//! target's own conditional entropy, after pruning its outgoing edges so no
//! other term can depend on it.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Table};
use crate::graph::{Dag, NodeKind};

/// Residual variances below this are clamped before taking the log, keeping
/// entropies finite on deterministic relationships.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Diagonal jitter added to singular normal equations before retrying.
pub const RIDGE_JITTER: f64 = 1e-8;

const LOGISTIC_MAX_ITERS: usize = 100;
const LOGISTIC_GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("graph/table mismatch: {detail}")]
    SchemaMismatch { detail: String },
    #[error("node {name:?} not in graph")]
    UnknownNode { name: String },
    #[error("need at least {needed} rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("design matrix is singular even after ridge jitter")]
    SingularDesign,
    #[error("logistic fit for column {column:?} produced non-finite values")]
    NonConvergence { column: String },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Differential entropy of a Gaussian with the given variance, in nats.
/// The variance is clamped to [`VARIANCE_FLOOR`].
pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * ((2.0 * std::f64::consts::PI).ln() + 1.0 + variance.max(VARIANCE_FLOOR).ln())
}

/// A conditional entropy estimate plus the number of sparse cells that fell
/// back to the pooled fit (only ever non-zero for mixed-parent estimates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub fallback_cells: usize,
}

// ── Ordinary least squares ──────────────────────────────────────────────────

/// Maximum-likelihood residual variance (`RSS / N`) of `y` regressed on an
/// intercept plus the given columns, via normal equations and a Cholesky
/// solve. A singular system is retried once with [`RIDGE_JITTER`] on the
/// diagonal.
fn ols_residual_variance(y: &[f64], cols: &[&[f64]]) -> Result<f64, ScoreError> {
    let n = y.len();
    let p = cols.len() + 1;
    if n < cols.len() + 2 {
        return Err(ScoreError::TooFewRows {
            rows: n,
            needed: cols.len() + 2,
        });
    }
    let value = |i: usize, r: usize| if i == 0 { 1.0 } else { cols[i - 1][r] };
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for r in 0..n {
        for i in 0..p {
            let xi = value(i, r);
            xty[i] += xi * y[r];
            for j in i..p {
                xtx[(i, j)] += xi * value(j, r);
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            xtx[(i, j)] = xtx[(j, i)];
        }
    }
    let beta = match Cholesky::new(xtx.clone()) {
        Some(chol) => chol.solve(&xty),
        None => {
            let mut jittered = xtx;
            for i in 0..p {
                jittered[(i, i)] += RIDGE_JITTER;
            }
            Cholesky::new(jittered)
                .ok_or(ScoreError::SingularDesign)?
                .solve(&xty)
        }
    };
    let mut rss = 0.0;
    for r in 0..n {
        let mut fitted = 0.0;
        for i in 0..p {
            fitted += beta[i] * value(i, r);
        }
        let resid = y[r] - fitted;
        rss += resid * resid;
    }
    Ok(rss / n as f64)
}

// ── Estimators ──────────────────────────────────────────────────────────────

/// Plug-in conditional entropy of a discrete column given discrete parents,
/// in nats. Unsmoothed maximum likelihood: empty configurations simply never
/// appear in the sum.
pub fn cond_entropy_discrete(
    table: &Table,
    x: usize,
    parents: &[usize],
) -> Result<f64, ScoreError> {
    let child = table.discrete(x)?;
    let parent_cols: Vec<&[u32]> = parents
        .iter()
        .map(|&p| table.discrete(p))
        .collect::<Result<_, _>>()?;
    let n = child.len();
    let mut counts: BTreeMap<Vec<u32>, BTreeMap<u32, u64>> = BTreeMap::new();
    for r in 0..n {
        let key: Vec<u32> = parent_cols.iter().map(|col| col[r]).collect();
        *counts.entry(key).or_default().entry(child[r]).or_insert(0) += 1;
    }
    let mut h = 0.0;
    for cell in counts.values() {
        let n_pa: u64 = cell.values().sum();
        let ln_pa = (n_pa as f64).ln();
        for &n_pax in cell.values() {
            h += n_pax as f64 * (ln_pa - (n_pax as f64).ln());
        }
    }
    Ok(h / n as f64)
}

/// Linear-Gaussian conditional entropy of a continuous column given
/// continuous parents, in nats.
pub fn cond_entropy_gaussian(
    table: &Table,
    x: usize,
    parents: &[usize],
) -> Result<f64, ScoreError> {
    let y = table.continuous(x)?;
    let cols: Vec<&[f64]> = parents
        .iter()
        .map(|&p| table.continuous(p))
        .collect::<Result<_, _>>()?;
    let sigma2 = ols_residual_variance(y, &cols)?;
    Ok(gaussian_entropy(sigma2))
}

/// Conditional entropy of a continuous column given a mix of discrete and
/// continuous parents: rows are partitioned by the discrete parent
/// configuration, each cell gets its own Gaussian fit on the continuous
/// parents, and cells are combined weighted by their empirical probability.
/// Cells too small to fit (< |continuous parents| + 2 rows) fall back to the
/// pooled fit over all rows and are counted in `fallback_cells`.
pub fn cond_entropy_mixed(
    table: &Table,
    x: usize,
    parents: &[usize],
) -> Result<EntropyEstimate, ScoreError> {
    let kinds = &table.schema().columns;
    let discrete_parents: Vec<usize> = parents
        .iter()
        .copied()
        .filter(|&p| kinds[p].kind.is_discrete())
        .collect();
    let continuous_parents: Vec<usize> = parents
        .iter()
        .copied()
        .filter(|&p| !kinds[p].kind.is_discrete())
        .collect();
    if discrete_parents.is_empty() {
        let value = cond_entropy_gaussian(table, x, parents)?;
        return Ok(EntropyEstimate {
            value,
            fallback_cells: 0,
        });
    }
    let y = table.continuous(x)?;
    let cont_cols: Vec<&[f64]> = continuous_parents
        .iter()
        .map(|&p| table.continuous(p))
        .collect::<Result<_, _>>()?;
    let disc_cols: Vec<&[u32]> = discrete_parents
        .iter()
        .map(|&p| table.discrete(p))
        .collect::<Result<_, _>>()?;
    let n = table.n_rows();
    let mut cells: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for r in 0..n {
        let key: Vec<u32> = disc_cols.iter().map(|col| col[r]).collect();
        cells.entry(key).or_default().push(r);
    }
    let min_rows = continuous_parents.len() + 2;
    let mut pooled: Option<f64> = None;
    let mut h = 0.0;
    let mut fallback_cells = 0;
    for rows in cells.values() {
        let weight = rows.len() as f64 / n as f64;
        let cell_h = if rows.len() < min_rows {
            fallback_cells += 1;
            let pooled_h = match pooled {
                Some(v) => v,
                None => {
                    let sigma2 = ols_residual_variance(y, &cont_cols)?;
                    let v = gaussian_entropy(sigma2);
                    pooled = Some(v);
                    v
                }
            };
            pooled_h
        } else {
            let cell_y: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            let cell_cols: Vec<Vec<f64>> = cont_cols
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect();
            let refs: Vec<&[f64]> = cell_cols.iter().map(Vec::as_slice).collect();
            gaussian_entropy(ols_residual_variance(&cell_y, &refs)?)
        };
        h += weight * cell_h;
    }
    Ok(EntropyEstimate {
        value: h,
        fallback_cells,
    })
}

/// Conditional entropy of a discrete column given parents that include at
/// least one continuous column: the mean negative log-likelihood of a
/// multinomial logistic regression (continuous parents as-is, discrete
/// parents one-hot with the first level dropped), fitted by damped Newton.
pub fn cond_entropy_logistic(
    table: &Table,
    x: usize,
    parents: &[usize],
) -> Result<f64, ScoreError> {
    let child = table.discrete(x)?;
    let k = table.schema().columns[x]
        .kind
        .cardinality()
        .expect("discrete child");
    if k == 1 {
        return Ok(0.0);
    }
    let n = table.n_rows();
    // Design matrix with intercept, row-major.
    let mut feature_cols: Vec<Vec<f64>> = Vec::new();
    for &p in parents {
        match table.schema().columns[p].kind {
            NodeKind::Continuous => feature_cols.push(table.continuous(p)?.to_vec()),
            NodeKind::Discrete(card) => {
                let codes = table.discrete(p)?;
                for level in 1..card {
                    feature_cols.push(
                        codes
                            .iter()
                            .map(|&c| if c as usize == level { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }
    let d = feature_cols.len() + 1;
    if n < d + 1 {
        return Err(ScoreError::TooFewRows {
            rows: n,
            needed: d + 1,
        });
    }
    let feature = |r: usize, j: usize| {
        if j == 0 {
            1.0
        } else {
            feature_cols[j - 1][r]
        }
    };
    let classes = k - 1;
    let dim = classes * d;
    let mut theta = DVector::<f64>::zeros(dim);
    let column_name = || table.schema().columns[x].name.clone();

    // Mean NLL and per-row class probabilities at the current parameters.
    let evaluate = |theta: &DVector<f64>, probs: &mut Vec<f64>| -> f64 {
        let mut nll = 0.0;
        for r in 0..n {
            let mut scores = vec![0.0f64; k];
            for c in 0..classes {
                let mut s = 0.0;
                for j in 0..d {
                    s += theta[c * d + j] * feature(r, j);
                }
                scores[c + 1] = s;
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z_sum = 0.0;
            for s in &scores {
                z_sum += (s - max).exp();
            }
            let log_z = max + z_sum.ln();
            for c in 0..k {
                probs[r * k + c] = (scores[c] - log_z).exp();
            }
            nll -= scores[child[r] as usize] - log_z;
        }
        nll / n as f64
    };

    let mut probs = vec![0.0f64; n * k];
    let mut nll = evaluate(&theta, &mut probs);
    for _ in 0..LOGISTIC_MAX_ITERS {
        // Gradient and Hessian of the mean NLL.
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for r in 0..n {
            for c in 0..classes {
                let pc = probs[r * k + c + 1];
                let indicator = if child[r] as usize == c + 1 { 1.0 } else { 0.0 };
                let gscale = (pc - indicator) / n as f64;
                for j in 0..d {
                    grad[c * d + j] += gscale * feature(r, j);
                }
                for d2 in c..classes {
                    let pd = probs[r * k + d2 + 1];
                    let w = (pc * (if c == d2 { 1.0 } else { 0.0 } - pd)) / n as f64;
                    if w == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        let fj = feature(r, j) * w;
                        for j2 in 0..d {
                            hess[(c * d + j, d2 * d + j2)] += fj * feature(r, j2);
                        }
                    }
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                hess[(i, j)] = hess[(j, i)];
            }
        }
        if grad.amax() < LOGISTIC_GRAD_TOL {
            break;
        }
        let step = match Cholesky::new(hess.clone()) {
            Some(chol) => chol.solve(&grad),
            None => {
                let mut jittered = hess;
                for i in 0..dim {
                    jittered[(i, i)] += RIDGE_JITTER;
                }
                Cholesky::new(jittered)
                    .ok_or(ScoreError::SingularDesign)?
                    .solve(&grad)
            }
        };
        // Damped update: halve the step until the objective stops increasing.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &theta - scale * &step;
            let trial_nll = evaluate(&trial, &mut probs);
            if !trial_nll.is_finite() {
                return Err(ScoreError::NonConvergence {
                    column: column_name(),
                });
            }
            if trial_nll <= nll {
                theta = trial;
                nll = trial_nll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !nll.is_finite() {
        return Err(ScoreError::NonConvergence {
            column: column_name(),
        });
    }
    Ok(nll)
}

/// Dispatches to the right estimator for the child's kind and its parents'
/// kinds.
pub fn conditional_entropy(
    table: &Table,
    x: usize,
    parents: &[usize],
) -> Result<EntropyEstimate, ScoreError> {
    let kinds = &table.schema().columns;
    let any_continuous_parent = parents
        .iter()
        .any(|&p| !kinds[p].kind.is_discrete());
    if kinds[x].kind.is_discrete() {
        let value = if any_continuous_parent {
            cond_entropy_logistic(table, x, parents)?
        } else {
            cond_entropy_discrete(table, x, parents)?
        };
        Ok(EntropyEstimate {
            value,
            fallback_cells: 0,
        })
    } else {
        cond_entropy_mixed(table, x, parents)
    }
}

// ── Graph-level scores ──────────────────────────────────────────────────────

/// Log-likelihood and BIC of a table under a DAG, with the per-node entropy
/// breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_rows: usize,
    pub log_likelihood: f64,
    pub bic: f64,
    pub dimension: usize,
    pub per_node_entropy: BTreeMap<String, f64>,
    pub fallback_cells: usize,
}

/// Number of free parameters the graph implies:
///
/// * discrete node with discrete parents: `(card - 1) * prod(parent cards)`;
/// * discrete node with any continuous parent: `(card - 1)` weights per
///   logistic feature plus intercept;
/// * continuous node: slope per continuous parent plus intercept and
///   variance, once per discrete parent configuration.
pub fn model_dimension(dag: &Dag) -> usize {
    let mut total = 0usize;
    for node in 0..dag.node_count() {
        let parents = dag.parents(node);
        let disc_card_product: usize = parents
            .iter()
            .filter_map(|&p| dag.kind(p).cardinality())
            .product();
        let n_continuous = parents
            .iter()
            .filter(|&&p| !dag.kind(p).is_discrete())
            .count();
        total += match dag.kind(node) {
            NodeKind::Discrete(card) => {
                if n_continuous == 0 {
                    (card - 1) * disc_card_product
                } else {
                    let one_hot: usize = parents
                        .iter()
                        .filter_map(|&p| dag.kind(p).cardinality())
                        .map(|c| c - 1)
                        .sum();
                    (card - 1) * (1 + n_continuous + one_hot)
                }
            }
            NodeKind::Continuous => (n_continuous + 2) * disc_card_product,
        };
    }
    total
}

/// Maps every graph node to its table column, requiring identical names and
/// kinds. Extra table columns are allowed and ignored.
fn column_map(dag: &Dag, table: &Table) -> Result<Vec<usize>, ScoreError> {
    let mut map = Vec::with_capacity(dag.node_count());
    for node in 0..dag.node_count() {
        let name = dag.name(node);
        let idx = table
            .column_index(name)
            .ok_or_else(|| ScoreError::SchemaMismatch {
                detail: format!("graph node {name:?} has no table column"),
            })?;
        let col_kind = table.schema().columns[idx].kind;
        if col_kind != dag.kind(node) {
            return Err(ScoreError::SchemaMismatch {
                detail: format!(
                    "node {name:?} is {:?} in the graph but {col_kind:?} in the table",
                    dag.kind(node)
                ),
            });
        }
        map.push(idx);
    }
    Ok(map)
}

/// Scores the table under the graph: `LL = -N * sum_i H(X_i | PA_i)` and
/// `BIC = -LL + (log2(N) / 2) * dimension`. Lower BIC is better.
pub fn log_likelihood(dag: &Dag, table: &Table) -> Result<ScoreReport, ScoreError> {
    let map = column_map(dag, table)?;
    let n = table.n_rows();
    let mut per_node_entropy = BTreeMap::new();
    let mut entropy_sum = 0.0;
    let mut fallback_cells = 0;
    for node in 0..dag.node_count() {
        let parents: Vec<usize> = dag.parents(node).iter().map(|&p| map[p]).collect();
        let estimate = conditional_entropy(table, map[node], &parents)?;
        entropy_sum += estimate.value;
        fallback_cells += estimate.fallback_cells;
        per_node_entropy.insert(dag.name(node).to_string(), estimate.value);
    }
    let log_likelihood = -(n as f64) * entropy_sum;
    let dimension = model_dimension(dag);
    let bic = -log_likelihood + (n as f64).log2() / 2.0 * dimension as f64;
    Ok(ScoreReport {
        n_rows: n,
        log_likelihood,
        bic,
        dimension,
        per_node_entropy,
        fallback_cells,
    })
}

/// The graph-fitness term used for model selection: the target's conditional
/// entropy given its parents, scaled by N, computed on the graph with the
/// target's outgoing edges pruned. With no parents the term is exactly 0, so
/// every candidate target column scores alike.
pub fn causal_assurance_term(
    dag: &Dag,
    target: &str,
    table: &Table,
) -> Result<f64, ScoreError> {
    let node = dag
        .index_of(target)
        .ok_or_else(|| ScoreError::UnknownNode {
            name: target.to_string(),
        })?;
    let pruned = dag
        .prune_target_outgoing(node)
        .expect("node index comes from the same graph");
    let parents = pruned.parents(node);
    if parents.is_empty() {
        return Ok(0.0);
    }
    let map = column_map(&pruned, table)?;
    let parent_cols: Vec<usize> = parents.iter().map(|&p| map[p]).collect();
    let estimate = conditional_entropy(table, map[node], &parent_cols)?;
    Ok(table.n_rows() as f64 * estimate.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnSpec, Schema};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn continuous_table(names: &[&str], cols: Vec<Vec<f64>>) -> Table {
        let schema = Schema::new(
            names.iter().map(|n| ColumnSpec::continuous(n)).collect(),
        )
        .unwrap();
        Table::new(schema, cols.into_iter().map(Column::Continuous).collect()).unwrap()
    }

    fn discrete_table(names: &[&str], card: usize, cols: Vec<Vec<u32>>) -> Table {
        let schema = Schema::new(
            names.iter().map(|n| ColumnSpec::discrete(n, card)).collect(),
        )
        .unwrap();
        Table::new(schema, cols.into_iter().map(Column::Discrete).collect()).unwrap()
    }

    #[test]
    fn fair_coin_entropy_is_ln_two() {
        let mut codes = vec![0u32; 50];
        codes.extend(vec![1u32; 50]);
        let table = discrete_table(&["x"], 2, vec![codes]);
        let h = cond_entropy_discrete(&table, 0, &[]).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12, "h = {h}");
    }

    #[test]
    fn balanced_uniform_entropy_is_ln_k() {
        let codes: Vec<u32> = (0..999).map(|i| i % 3).collect();
        let table = discrete_table(&["x"], 3, vec![codes]);
        let h = cond_entropy_discrete(&table, 0, &[]).unwrap();
        assert!((h - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_discrete_relation_has_zero_entropy() {
        let parent: Vec<u32> = (0..100).map(|i| i % 4).collect();
        let child = parent.clone();
        let table = discrete_table(&["x", "pa"], 4, vec![child, parent]);
        let h = cond_entropy_discrete(&table, 0, &[1]).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn conditioning_never_increases_discrete_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 500;
            let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<u32> = (0..n)
                .map(|i| (a[i] + rng.random_range(0..2)) % 3)
                .collect();
            let c: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let table = discrete_table(&["x", "p1", "p2"], 3, vec![b, a, c]);
            let h0 = cond_entropy_discrete(&table, 0, &[]).unwrap();
            let h1 = cond_entropy_discrete(&table, 0, &[1]).unwrap();
            let h2 = cond_entropy_discrete(&table, 0, &[1, 2]).unwrap();
            assert!(h1 <= h0 + 1e-12);
            assert!(h2 <= h1 + 1e-12);
        }
    }

    #[test]
    fn unit_variance_gaussian_entropy_matches_closed_form() {
        // ML variance of {-1, 1} is exactly 1.
        let table = continuous_table(&["x"], vec![vec![-1.0, 1.0]]);
        let h = cond_entropy_gaussian(&table, 0, &[]).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h - expected).abs() < 1e-12, "h = {h}");
        assert!((expected - 1.418_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn exact_linear_relation_hits_the_variance_floor() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let table = continuous_table(&["y", "x"], vec![y, x]);
        let h = cond_entropy_gaussian(&table, 0, &[1]).unwrap();
        assert!((h - gaussian_entropy(VARIANCE_FLOOR)).abs() < 1e-9);
    }

    #[test]
    fn independent_parent_leaves_entropy_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 50_000;
        let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let table = continuous_table(&["x", "z"], vec![x, z]);
        let marginal = cond_entropy_gaussian(&table, 0, &[]).unwrap();
        let conditional = cond_entropy_gaussian(&table, 0, &[1]).unwrap();
        assert!((marginal - conditional).abs() < 0.01);
    }

    #[test]
    fn conditioning_on_more_parents_never_increases_gaussian_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let normal = Normal::new(0.0, 1.0).unwrap();
        for _ in 0..20 {
            let n = 200;
            let a: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| a[i] - b[i] + normal.sample(&mut rng))
                .collect();
            let table = continuous_table(&["y", "a", "b"], vec![y, a, b]);
            let h0 = cond_entropy_gaussian(&table, 0, &[]).unwrap();
            let h1 = cond_entropy_gaussian(&table, 0, &[1]).unwrap();
            let h2 = cond_entropy_gaussian(&table, 0, &[1, 2]).unwrap();
            assert!(h1 <= h0 + 1e-9);
            assert!(h2 <= h1 + 1e-9);
        }
    }

    #[test]
    fn too_few_rows_is_reported() {
        let table = continuous_table(&["y", "a"], vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(
            cond_entropy_gaussian(&table, 0, &[1]),
            Err(ScoreError::TooFewRows { rows: 2, needed: 3 })
        ));
    }

    fn mixed_table(n: usize, seed: u64, shift: f64) -> Table {
        // Cell 0 and cell 1 distributions differ by `shift`.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let group: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let x: Vec<f64> = group
            .iter()
            .map(|&g| normal.sample(&mut rng) + shift * g as f64)
            .collect();
        let schema = Schema::new(vec![
            ColumnSpec::continuous("x"),
            ColumnSpec::discrete("g", 2),
        ])
        .unwrap();
        Table::new(
            schema,
            vec![Column::Continuous(x), Column::Discrete(group)],
        )
        .unwrap()
    }

    #[test]
    fn identical_cells_match_plain_gaussian_entropy() {
        let table = mixed_table(20_000, 3, 0.0);
        let mixed = cond_entropy_mixed(&table, 0, &[1]).unwrap();
        let plain = cond_entropy_gaussian(&table, 0, &[]).unwrap();
        assert_eq!(mixed.fallback_cells, 0);
        assert!((mixed.value - plain).abs() < 0.01);
    }

    #[test]
    fn informative_cells_reduce_mixed_entropy() {
        let table = mixed_table(20_000, 3, 3.0);
        let mixed = cond_entropy_mixed(&table, 0, &[1]).unwrap();
        let plain = cond_entropy_gaussian(&table, 0, &[]).unwrap();
        assert!(mixed.value < plain - 0.3);
    }

    #[test]
    fn sparse_cells_fall_back_to_pooled_fit() {
        let schema = Schema::new(vec![
            ColumnSpec::continuous("x"),
            ColumnSpec::discrete("g", 3),
            ColumnSpec::continuous("z"),
        ])
        .unwrap();
        // Group 2 has a single row: too small for a per-cell fit.
        let table = Table::new(
            schema,
            vec![
                Column::Continuous(vec![0.1, 0.9, 0.4, 0.6, 0.5, 0.2, 0.8]),
                Column::Discrete(vec![0, 0, 0, 1, 1, 1, 2]),
                Column::Continuous(vec![1.0, 2.0, 3.0, 1.5, 2.5, 0.5, 2.0]),
            ],
        )
        .unwrap();
        let est = cond_entropy_mixed(&table, 0, &[1, 2]).unwrap();
        assert_eq!(est.fallback_cells, 1);
        assert!(est.value.is_finite());
    }

    #[test]
    fn logistic_ignores_uninformative_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 20_000;
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let z: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let schema = Schema::new(vec![
            ColumnSpec::discrete("y", 2),
            ColumnSpec::continuous("z"),
        ])
        .unwrap();
        let table = Table::new(
            schema,
            vec![Column::Discrete(labels.clone()), Column::Continuous(z)],
        )
        .unwrap();
        let h = cond_entropy_logistic(&table, 0, &[1]).unwrap();
        let marginal = {
            let ones = labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
            -(ones * ones.ln() + (1.0 - ones) * (1.0 - ones).ln())
        };
        assert!((h - marginal).abs() < 0.02, "h = {h}, marginal = {marginal}");
    }

    #[test]
    fn logistic_learns_a_separable_threshold() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 - 250.0) / 100.0).collect();
        let y: Vec<u32> = x.iter().map(|&v| u32::from(v > 0.0)).collect();
        let schema = Schema::new(vec![
            ColumnSpec::discrete("y", 2),
            ColumnSpec::continuous("x"),
        ])
        .unwrap();
        let table =
            Table::new(schema, vec![Column::Discrete(y), Column::Continuous(x)]).unwrap();
        let h = cond_entropy_logistic(&table, 0, &[1]).unwrap();
        assert!(h < 0.01, "separable data should drive the NLL near 0, got {h}");
    }

    #[test]
    fn logistic_handles_three_classes_and_discrete_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 5000;
        let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let g: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let y: Vec<u32> = (0..n)
            .map(|i| {
                let score = x[i] + g[i] as f64 + 0.5 * normal.sample(&mut rng);
                if score < -0.5 {
                    0
                } else if score < 1.0 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let schema = Schema::new(vec![
            ColumnSpec::discrete("y", 3),
            ColumnSpec::continuous("x"),
            ColumnSpec::discrete("g", 2),
        ])
        .unwrap();
        let table = Table::new(
            schema,
            vec![
                Column::Discrete(y.clone()),
                Column::Continuous(x),
                Column::Discrete(g),
            ],
        )
        .unwrap();
        let conditional = cond_entropy_logistic(&table, 0, &[1, 2]).unwrap();
        let marginal = cond_entropy_discrete(&table, 0, &[]).unwrap();
        assert!(conditional < marginal - 0.1);
    }

    // Independent oracle for the likelihood: fit each node by QR least
    // squares on an explicit design matrix and sum per-row Gaussian log
    // densities.
    fn oracle_gaussian_ll(table: &Table, dag: &Dag) -> f64 {
        let n = table.n_rows();
        let mut total = 0.0;
        for node in 0..dag.node_count() {
            let y = DVector::from_column_slice(
                table.continuous(table.column_index(dag.name(node)).unwrap()).unwrap(),
            );
            let parents = dag.parents(node);
            let mut design = DMatrix::zeros(n, parents.len() + 1);
            for r in 0..n {
                design[(r, 0)] = 1.0;
            }
            for (j, &p) in parents.iter().enumerate() {
                let col = table
                    .continuous(table.column_index(dag.name(p)).unwrap())
                    .unwrap();
                for r in 0..n {
                    design[(r, j + 1)] = col[r];
                }
            }
            let beta = design
                .clone()
                .svd(true, true)
                .solve(&y, 1e-12)
                .expect("full-rank design");
            let resid = &y - &design * beta;
            let sigma2 = (resid.norm_squared() / n as f64).max(VARIANCE_FLOOR);
            for r in 0..n {
                let z = resid[r];
                total += -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln()
                    - z * z / (2.0 * sigma2);
            }
        }
        total
    }

    #[test]
    fn log_likelihood_matches_per_row_density_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 5000;
        let a: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| 2.0 * a[i] + normal.sample(&mut rng))
            .collect();
        let table = continuous_table(&["a", "b"], vec![a, b]);
        let dag = Dag::all_continuous(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
        let report = log_likelihood(&dag, &table).unwrap();
        let oracle = oracle_gaussian_ll(&table, &dag);
        let rel = (report.log_likelihood - oracle).abs() / oracle.abs();
        assert!(rel < 5e-3, "ll = {}, oracle = {oracle}", report.log_likelihood);
    }

    #[test]
    fn empty_graph_likelihood_is_sum_of_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 500;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let table = continuous_table(&["a", "b", "c"], cols);
        let dag =
            Dag::all_continuous(vec!["a".into(), "b".into(), "c".into()], vec![]).unwrap();
        let report = log_likelihood(&dag, &table).unwrap();
        let mut expected = 0.0;
        for i in 0..3 {
            expected -= n as f64 * cond_entropy_gaussian(&table, i, &[]).unwrap();
        }
        assert!((report.log_likelihood - expected).abs() < 1e-9);
    }

    #[test]
    fn adding_a_true_edge_never_decreases_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        for trial in 0..10 {
            let n = 400;
            let a: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..n)
                .map(|i| 0.8 * a[i] + normal.sample(&mut rng))
                .collect();
            let table = continuous_table(&["a", "b"], vec![a, b]);
            let without =
                Dag::all_continuous(vec!["a".into(), "b".into()], vec![]).unwrap();
            let with =
                Dag::all_continuous(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
            let ll0 = log_likelihood(&without, &table).unwrap().log_likelihood;
            let ll1 = log_likelihood(&with, &table).unwrap().log_likelihood;
            assert!(ll1 >= ll0 - 1e-9, "trial {trial}: {ll1} < {ll0}");
        }
    }

    #[test]
    fn dimension_formulas() {
        use crate::graph::NodeKind::*;
        // d3(c=3) <- {d1(c=2), x1}; x2 <- {d1, x1}; roots d1, x1.
        let dag = Dag::new(
            vec!["d1".into(), "x1".into(), "d3".into(), "x2".into()],
            vec![Discrete(2), Continuous, Discrete(3), Continuous],
            vec![(0, 2), (1, 2), (0, 3), (1, 3)],
        )
        .unwrap();
        // d1 root: (2-1)*1 = 1; x1 root: (0+2)*1 = 2;
        // d3: continuous parent present -> (3-1)*(1 + 1 + (2-1)) = 6;
        // x2: (1+2)*2 = 6.
        assert_eq!(model_dimension(&dag), 1 + 2 + 6 + 6);
    }

    #[test]
    fn bic_combines_likelihood_and_dimension() {
        let table = continuous_table(
            &["a", "b"],
            vec![vec![0.1, 0.4, -0.2, 0.9], vec![1.0, 0.3, 0.2, -0.5]],
        );
        let dag = Dag::all_continuous(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
        let report = log_likelihood(&dag, &table).unwrap();
        assert_eq!(report.dimension, 2 + 3);
        let expected =
            -report.log_likelihood + 4f64.log2() / 2.0 * report.dimension as f64;
        assert!((report.bic - expected).abs() < 1e-12);
        assert_eq!(report.per_node_entropy.len(), 2);
    }

    #[test]
    fn schema_mismatch_is_detected() {
        let table = continuous_table(&["a", "b"], vec![vec![0.0; 3], vec![0.0; 3]]);
        let dag = Dag::all_continuous(vec!["a".into(), "zzz".into()], vec![]).unwrap();
        assert!(matches!(
            log_likelihood(&dag, &table),
            Err(ScoreError::SchemaMismatch { .. })
        ));
        let dag = Dag::new(
            vec!["a".into(), "b".into()],
            vec![NodeKind::Continuous, NodeKind::Discrete(2)],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            log_likelihood(&dag, &table),
            Err(ScoreError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn assurance_term_is_the_scaled_target_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 1000;
        let a: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| a[i] + 0.5 * normal.sample(&mut rng))
            .collect();
        let c: Vec<f64> = (0..n)
            .map(|i| y[i] + normal.sample(&mut rng))
            .collect();
        let table = continuous_table(&["a", "y", "c"], vec![a, y, c]);
        let dag = Dag::all_continuous(
            vec!["a".into(), "y".into(), "c".into()],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let f = causal_assurance_term(&dag, "y", &table).unwrap();
        let expected = n as f64 * cond_entropy_gaussian(&table, 1, &[0]).unwrap();
        assert!((f - expected).abs() < 1e-9);
    }

    #[test]
    fn parentless_target_scores_zero() {
        let table = continuous_table(&["a", "b"], vec![vec![0.5; 4], vec![0.1, 0.2, 0.3, 0.4]]);
        let dag = Dag::all_continuous(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
        assert_eq!(causal_assurance_term(&dag, "a", &table).unwrap(), 0.0);
        assert!(matches!(
            causal_assurance_term(&dag, "nope", &table),
            Err(ScoreError::UnknownNode { .. })
        ));
    }

    #[test]
    fn noisier_predictions_raise_the_assurance_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut wins = 0;
        for trial in 0..20 {
            let n = 10_000;
            let p1: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let p2: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let clean: Vec<f64> = (0..n).map(|i| p1[i] - p2[i]).collect();
            let noisy: Vec<f64> = clean
                .iter()
                .map(|v| v + 0.3 * normal.sample(&mut rng))
                .collect();
            let dag = Dag::all_continuous(
                vec!["p1".into(), "p2".into(), "y".into()],
                vec![(0, 2), (1, 2)],
            )
            .unwrap();
            let table_clean =
                continuous_table(&["p1", "p2", "y"], vec![p1.clone(), p2.clone(), clean]);
            let table_noisy = continuous_table(&["p1", "p2", "y"], vec![p1, p2, noisy]);
            let f_clean = causal_assurance_term(&dag, "y", &table_clean).unwrap();
            let f_noisy = causal_assurance_term(&dag, "y", &table_noisy).unwrap();
            if f_noisy > f_clean {
                wins += 1;
            } else {
                eprintln!("trial {trial}: clean {f_clean} noisy {f_noisy}");
            }
        }
        assert!(wins >= 18, "only {wins}/20 trials ordered correctly");
    }
}
