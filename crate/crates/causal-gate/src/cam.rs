//! The combined selection score and the model-selection loop.
//!
//! Each candidate model gets two numbers on the selection split: `f`, the
//! graph-fitness term from [`crate::scoring::causal_assurance_term`] computed
//! on the data with the target column replaced by the model's predictions,
//! and `h`, a statistical metric on the same predictions (MSE for continuous
//! targets, AUROC for binary ones). They combine into a single score,
//!
//! * metrics where lower is better: `r = lambda * f + h`,
//! * metrics where higher is better: `r = lambda * f - h`,
//!
//! so lower `r` always wins and selection is the argmin over the model set,
//! ties broken by the lowest `model_id`. The weight `lambda` is either fixed
//! up front or estimated as `E[f] / (gamma * E[h])`, with `gamma` the size of
//! the graph's Markov equivalence class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{substitute_predictions, Column, DataError, NodeKind, Table};
use crate::eval::{self, EvalError};
use crate::graph::Dag;
use crate::scoring::{causal_assurance_term, ScoreError};

#[derive(Debug, Error)]
pub enum CamError {
    #[error("gamma must be at least 1")]
    InvalidGamma,
    #[error("lambda must be positive and finite, got {lambda}")]
    NonPositiveLambda { lambda: f64 },
    #[error("cannot estimate lambda with expected h metric of 0")]
    ZeroExpectedMetric,
    #[error("k_folds must be between 1 and the number of rows, got {k}")]
    InvalidFolds { k: usize },
    #[error("target {name:?} is {kind:?}; selection needs continuous or binary targets")]
    UnsupportedTarget { name: String, kind: NodeKind },
    #[error(
        "h_direction {configured:?} contradicts the target's natural metric \
         direction {natural:?}"
    )]
    DirectionMismatch {
        configured: HDirection,
        natural: HDirection,
    },
    #[error("model set is empty")]
    EmptyModelSet,
    #[error("duplicate model_id {id}")]
    DuplicateModelId { id: usize },
    #[error("model {model_id} failed to predict: {message}")]
    Prediction { model_id: usize, message: String },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Whether larger values of the statistical metric are better (AUROC) or
/// worse (MSE).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HDirection {
    Minimize,
    Maximize,
}

/// How the combination weight is chosen. A fixed value takes precedence over
/// estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    Fixed(f64),
    Estimated { expected_f: f64, expected_h: f64 },
}

/// Estimates the combination weight as `expected_f / (gamma * expected_h)`.
pub fn estimate_lambda(
    expected_f: f64,
    expected_h: f64,
    gamma: usize,
) -> Result<f64, CamError> {
    if gamma == 0 {
        return Err(CamError::InvalidGamma);
    }
    if expected_h == 0.0 {
        return Err(CamError::ZeroExpectedMetric);
    }
    let lambda = expected_f / (gamma as f64 * expected_h);
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(CamError::NonPositiveLambda { lambda });
    }
    Ok(lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamConfig {
    pub lambda: LambdaMode,
    /// Markov equivalence class size of the graph; only used when lambda is
    /// estimated.
    pub gamma: usize,
    pub h_direction: HDirection,
    /// `None` scores the whole selection split at once; `Some(k)` averages f
    /// and h over k disjoint folds. `Some(1)` is identical to `None`.
    pub k_folds: Option<usize>,
    pub fold_seed: u64,
}

impl Default for CamConfig {
    fn default() -> Self {
        CamConfig {
            lambda: LambdaMode::Fixed(1.25),
            gamma: 1,
            h_direction: HDirection::Minimize,
            k_folds: None,
            fold_seed: 0,
        }
    }
}

impl CamConfig {
    pub fn resolve_lambda(&self) -> Result<f64, CamError> {
        if self.gamma == 0 {
            return Err(CamError::InvalidGamma);
        }
        match self.lambda {
            LambdaMode::Fixed(lambda) => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(CamError::NonPositiveLambda { lambda });
                }
                Ok(lambda)
            }
            LambdaMode::Estimated {
                expected_f,
                expected_h,
            } => estimate_lambda(expected_f, expected_h, self.gamma),
        }
    }
}

/// Combines the two terms so that lower is always better.
pub fn combine(lambda: f64, f: f64, h: f64, direction: HDirection) -> f64 {
    match direction {
        HDirection::Minimize => lambda * f + h,
        HDirection::Maximize => lambda * f - h,
    }
}

/// One model's scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model_id: usize,
    pub f: f64,
    pub h: f64,
    pub r: f64,
}

/// Scores a single model from precomputed terms.
pub fn cam_score(
    model_id: usize,
    f: f64,
    h: f64,
    config: &CamConfig,
) -> Result<ModelScore, CamError> {
    let lambda = config.resolve_lambda()?;
    Ok(ModelScore {
        model_id,
        f,
        h,
        r: combine(lambda, f, h, config.h_direction),
    })
}

/// Sort key for [`rank`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKey {
    R,
    F,
    H,
}

/// Orders scores ascending by the chosen key, ties broken by `model_id`.
pub fn rank(scores: &[ModelScore], key: RankKey) -> Vec<ModelScore> {
    let mut out = scores.to_vec();
    out.sort_by(|a, b| {
        let (x, y) = match key {
            RankKey::R => (a.r, b.r),
            RankKey::F => (a.f, b.f),
            RankKey::H => (a.h, b.h),
        };
        x.partial_cmp(&y)
            .expect("scores are finite")
            .then(a.model_id.cmp(&b.model_id))
    });
    out
}

// ── Models ──────────────────────────────────────────────────────────────────

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("expected {expected} input features, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Other(String),
}

/// Anything that can produce one prediction per row of a table. Regression
/// models return target values; binary classifiers return positive-class
/// probabilities.
pub trait SelectionModel: Sync {
    fn model_id(&self) -> usize;

    fn label(&self) -> Option<&str> {
        None
    }

    fn predict(&self, table: &Table, target: &str) -> Result<Vec<f64>, PredictionError>;
}

impl<M: SelectionModel + ?Sized> SelectionModel for &M {
    fn model_id(&self) -> usize {
        (**self).model_id()
    }
    fn label(&self) -> Option<&str> {
        (**self).label()
    }
    fn predict(&self, table: &Table, target: &str) -> Result<Vec<f64>, PredictionError> {
        (**self).predict(table, target)
    }
}

impl<M: SelectionModel + ?Sized> SelectionModel for Box<M> {
    fn model_id(&self) -> usize {
        (**self).model_id()
    }
    fn label(&self) -> Option<&str> {
        (**self).label()
    }
    fn predict(&self, table: &Table, target: &str) -> Result<Vec<f64>, PredictionError> {
        (**self).predict(table, target)
    }
}

/// Externally computed predictions (from models trained in another stack)
/// wrapped as a selection model. The values must line up with the rows of
/// the table handed to [`select`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionVector {
    pub model_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub values: Vec<f64>,
}

impl SelectionModel for PredictionVector {
    fn model_id(&self) -> usize {
        self.model_id
    }

    fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    fn predict(&self, table: &Table, _target: &str) -> Result<Vec<f64>, PredictionError> {
        if self.values.len() != table.n_rows() {
            return Err(PredictionError::WidthMismatch {
                expected: table.n_rows(),
                got: self.values.len(),
            });
        }
        Ok(self.values.clone())
    }
}

// ── Selection ───────────────────────────────────────────────────────────────

/// One model's full record in a selection report. Ranks are 1-based and
/// best-first (for `h` that respects the metric direction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredModel {
    pub model_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub f: f64,
    pub h: f64,
    pub r: f64,
    pub rank_by_r: usize,
    pub rank_by_h: usize,
}

impl ScoredModel {
    pub fn score(&self) -> ModelScore {
        ModelScore {
            model_id: self.model_id,
            f: self.f,
            h: self.h,
            r: self.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub target: String,
    /// `"mse"` or `"auroc"`, chosen from the target column kind.
    pub h_metric: String,
    pub h_direction: HDirection,
    pub lambda: f64,
    pub gamma: usize,
    pub k_folds: Option<usize>,
    pub n_rows: usize,
    pub n_models: usize,
    pub best_model_id: usize,
    /// Sorted by `model_id`.
    pub models: Vec<ScoredModel>,
}

impl SelectionReport {
    pub fn best(&self) -> &ScoredModel {
        self.models
            .iter()
            .find(|m| m.model_id == self.best_model_id)
            .expect("best_model_id comes from the model list")
    }

    pub fn scores(&self) -> Vec<ModelScore> {
        self.models.iter().map(ScoredModel::score).collect()
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }
}

/// Splits `0..n` into `k` folds: a seeded shuffle cut into contiguous blocks
/// (the first `n % k` folds get the extra row), each fold sorted ascending.
/// With `k == 1` the single fold is exactly `0..n`.
fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if k <= 1 {
        return vec![(0..n).collect()];
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut offset = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let mut fold: Vec<usize> = perm[offset..offset + size].to_vec();
        offset += size;
        fold.sort_unstable();
        folds.push(fold);
    }
    folds
}

/// Scores every model on the selection split and picks the one with the
/// lowest combined score, ties broken by the lowest `model_id`. Models are
/// scored in parallel; the result is independent of thread scheduling.
pub fn select<M: SelectionModel>(
    models: &[M],
    dag: &Dag,
    target: &str,
    d_sel: &Table,
    config: &CamConfig,
) -> Result<SelectionReport, CamError> {
    if models.is_empty() {
        return Err(CamError::EmptyModelSet);
    }
    let n = d_sel.n_rows();
    let target_idx = d_sel.require_column(target)?;
    let target_kind = d_sel.schema().columns[target_idx].kind;
    let (h_metric, natural) = match target_kind {
        NodeKind::Continuous => ("mse", HDirection::Minimize),
        NodeKind::Discrete(2) => ("auroc", HDirection::Maximize),
        other => {
            return Err(CamError::UnsupportedTarget {
                name: target.to_string(),
                kind: other,
            })
        }
    };
    if config.h_direction != natural {
        return Err(CamError::DirectionMismatch {
            configured: config.h_direction,
            natural,
        });
    }
    let lambda = config.resolve_lambda()?;
    let k = config.k_folds.unwrap_or(1);
    if k == 0 || k > n {
        return Err(CamError::InvalidFolds { k });
    }
    let folds = fold_indices(n, k, config.fold_seed);
    let truth = d_sel.target_values(target)?;
    let labels: Option<Vec<u32>> = match target_kind {
        NodeKind::Discrete(_) => Some(d_sel.discrete(target_idx)?.to_vec()),
        NodeKind::Continuous => None,
    };

    let mut ids = std::collections::BTreeSet::new();
    for m in models {
        if !ids.insert(m.model_id()) {
            return Err(CamError::DuplicateModelId { id: m.model_id() });
        }
    }

    let score_one = |model: &M| -> Result<ScoredModel, CamError> {
        let model_id = model.model_id();
        let preds = model
            .predict(d_sel, target)
            .map_err(|e| CamError::Prediction {
                model_id,
                message: e.to_string(),
            })?;
        if preds.len() != n {
            return Err(CamError::Prediction {
                model_id,
                message: format!("{} predictions for {n} rows", preds.len()),
            });
        }
        let column = match target_kind {
            NodeKind::Continuous => Column::Continuous(preds.clone()),
            // Probabilities become hard labels for the graph-fitness term.
            NodeKind::Discrete(_) => {
                Column::Discrete(preds.iter().map(|&p| u32::from(p > 0.5)).collect())
            }
        };
        let d_prime = substitute_predictions(d_sel, target, &column)?;
        let mut f_sum = 0.0;
        let mut h_sum = 0.0;
        for fold in &folds {
            let sub = d_prime.select_rows(fold)?;
            f_sum += causal_assurance_term(dag, target, &sub)?;
            let fold_preds: Vec<f64> = fold.iter().map(|&r| preds[r]).collect();
            h_sum += match &labels {
                None => {
                    let fold_truth: Vec<f64> = fold.iter().map(|&r| truth[r]).collect();
                    eval::mse(&fold_truth, &fold_preds)?
                }
                Some(labels) => {
                    let fold_labels: Vec<u32> =
                        fold.iter().map(|&r| labels[r]).collect();
                    eval::auroc(&fold_labels, &fold_preds)?
                }
            };
        }
        let f = f_sum / folds.len() as f64;
        let h = h_sum / folds.len() as f64;
        Ok(ScoredModel {
            model_id,
            label: model.label().map(str::to_string),
            f,
            h,
            r: combine(lambda, f, h, config.h_direction),
            rank_by_r: 0,
            rank_by_h: 0,
        })
    };

    let mut scored: Vec<ScoredModel> = models
        .par_iter()
        .map(score_one)
        .collect::<Result<_, _>>()?;
    scored.sort_by_key(|m| m.model_id);

    let plain: Vec<ModelScore> = scored.iter().map(ScoredModel::score).collect();
    let by_r = eval::order_best_first(&plain, RankKey::R, config.h_direction);
    let by_h = eval::order_best_first(&plain, RankKey::H, config.h_direction);
    for (pos, &i) in by_r.iter().enumerate() {
        scored[i].rank_by_r = pos + 1;
    }
    for (pos, &i) in by_h.iter().enumerate() {
        scored[i].rank_by_h = pos + 1;
    }
    let best_model_id = scored[by_r[0]].model_id;

    Ok(SelectionReport {
        target: target.to_string(),
        h_metric: h_metric.to_string(),
        h_direction: config.h_direction,
        lambda,
        gamma: config.gamma,
        k_folds: config.k_folds,
        n_rows: n,
        n_models: scored.len(),
        best_model_id,
        models: scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnSpec, Schema};

    #[test]
    fn lambda_estimation_divides_by_gamma() {
        assert_eq!(estimate_lambda(10.0, 2.0, 4).unwrap(), 1.25);
        assert!(matches!(
            estimate_lambda(10.0, 2.0, 0),
            Err(CamError::InvalidGamma)
        ));
        assert!(matches!(
            estimate_lambda(10.0, 0.0, 1),
            Err(CamError::ZeroExpectedMetric)
        ));
        assert!(matches!(
            estimate_lambda(-10.0, 2.0, 1),
            Err(CamError::NonPositiveLambda { .. })
        ));
    }

    #[test]
    fn fixed_lambda_takes_precedence() {
        let config = CamConfig {
            lambda: LambdaMode::Fixed(2.5),
            gamma: 7,
            ..CamConfig::default()
        };
        assert_eq!(config.resolve_lambda().unwrap(), 2.5);
    }

    #[test]
    fn combined_score_is_exact() {
        let config = CamConfig::default();
        let s = cam_score(3, 2.0, 0.5, &config).unwrap();
        assert_eq!(s.r, 1.25 * 2.0 + 0.5);
        let config = CamConfig {
            h_direction: HDirection::Maximize,
            ..CamConfig::default()
        };
        let s = cam_score(3, 2.0, 0.5, &config).unwrap();
        assert_eq!(s.r, 1.25 * 2.0 - 0.5);
    }

    #[test]
    fn rank_is_ascending_with_id_tie_break() {
        let scores = vec![
            ModelScore { model_id: 2, f: 0.0, h: 1.0, r: 5.0 },
            ModelScore { model_id: 0, f: 1.0, h: 0.5, r: 5.0 },
            ModelScore { model_id: 1, f: 2.0, h: 0.1, r: 1.0 },
        ];
        let by_r: Vec<usize> = rank(&scores, RankKey::R)
            .iter()
            .map(|m| m.model_id)
            .collect();
        assert_eq!(by_r, vec![1, 0, 2]);
        let by_h: Vec<usize> = rank(&scores, RankKey::H)
            .iter()
            .map(|m| m.model_id)
            .collect();
        assert_eq!(by_h, vec![1, 0, 2]);
    }

    #[test]
    fn rank_by_r_ignores_constant_shifts_of_f() {
        // Values on a dyadic grid keep every sum and product exact, so the
        // shift invariance holds bit-for-bit, not just approximately.
        let mut rng_state = 88172645463325252u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state % 1025) as f64 / 256.0 - 2.0
        };
        let config = CamConfig::default();
        let lambda = config.resolve_lambda().unwrap();
        for _ in 0..50 {
            let scores: Vec<ModelScore> = (0..20)
                .map(|id| {
                    let f = next();
                    let h = next().abs();
                    ModelScore {
                        model_id: id,
                        f,
                        h,
                        r: combine(lambda, f, h, HDirection::Minimize),
                    }
                })
                .collect();
            // Shift every f by the same power of two: identical ordering.
            let shifted: Vec<ModelScore> = scores
                .iter()
                .map(|s| {
                    let f = s.f + 4.0;
                    ModelScore {
                        model_id: s.model_id,
                        f,
                        h: s.h,
                        r: combine(lambda, f, s.h, HDirection::Minimize),
                    }
                })
                .collect();
            let order: Vec<usize> =
                rank(&scores, RankKey::R).iter().map(|m| m.model_id).collect();
            let shifted_order: Vec<usize> = rank(&shifted, RankKey::R)
                .iter()
                .map(|m| m.model_id)
                .collect();
            assert_eq!(order, shifted_order);
        }
    }

    #[test]
    fn argmin_is_invariant_to_power_of_two_rescaling() {
        // Scaling every f by c and lambda by 1/c is exact in binary floats.
        let scores = [(0.75, 0.5), (1.5, 0.25), (0.375, 1.0), (3.0, 0.125)];
        let pick = |lambda: f64, scale: f64| -> usize {
            let scored: Vec<ModelScore> = scores
                .iter()
                .enumerate()
                .map(|(id, &(f, h))| ModelScore {
                    model_id: id,
                    f: f * scale,
                    h,
                    r: combine(lambda, f * scale, h, HDirection::Minimize),
                })
                .collect();
            rank(&scored, RankKey::R)[0].model_id
        };
        for scale in [1.0, 2.0, 4.0, 0.5, 0.25] {
            assert_eq!(pick(1.25 / scale, scale), pick(1.25, 1.0));
        }
    }

    fn sel_table(n: usize) -> Table {
        let schema = Schema::new(vec![
            ColumnSpec::continuous("pa"),
            ColumnSpec::continuous("y"),
        ])
        .unwrap();
        let pa: Vec<f64> = (0..n).map(|i| (i as f64) / n as f64).collect();
        let y: Vec<f64> = pa.iter().map(|v| 2.0 * v).collect();
        Table::new(
            schema,
            vec![Column::Continuous(pa), Column::Continuous(y)],
        )
        .unwrap()
    }

    fn chain_dag() -> Dag {
        Dag::all_continuous(vec!["pa".into(), "y".into()], vec![(0, 1)]).unwrap()
    }

    #[test]
    fn selection_prefers_parent_consistent_predictions() {
        let table = sel_table(64);
        let pa: Vec<f64> = table.continuous(0).unwrap().to_vec();
        // Model 0 tracks the parent; model 1 adds parent-independent wiggle
        // with a slightly better fit to the noiseless truth.
        let clean = PredictionVector {
            model_id: 0,
            label: None,
            values: pa.iter().map(|v| 2.0 * v + 0.05).collect(),
        };
        let wiggly = PredictionVector {
            model_id: 1,
            label: None,
            values: pa
                .iter()
                .enumerate()
                .map(|(i, v)| 2.0 * v + if i % 2 == 0 { 0.04 } else { -0.04 })
                .collect(),
        };
        let report = select(
            &[clean, wiggly],
            &chain_dag(),
            "y",
            &table,
            &CamConfig::default(),
        )
        .unwrap();
        assert_eq!(report.best_model_id, 0);
        let m0 = &report.models[0];
        let m1 = &report.models[1];
        assert!(m1.h < m0.h, "wiggly model should win on raw MSE");
        assert!(m0.f < m1.f, "clean model should win on graph fitness");
        assert_eq!(m0.rank_by_r, 1);
        assert_eq!(m1.rank_by_h, 1);
    }

    #[test]
    fn ties_break_toward_the_lowest_model_id() {
        let table = sel_table(16);
        let values: Vec<f64> = table.continuous(1).unwrap().to_vec();
        let models: Vec<PredictionVector> = [5usize, 2, 9]
            .iter()
            .map(|&id| PredictionVector {
                model_id: id,
                label: None,
                values: values.clone(),
            })
            .collect();
        let report = select(
            &models,
            &chain_dag(),
            "y",
            &table,
            &CamConfig::default(),
        )
        .unwrap();
        assert_eq!(report.best_model_id, 2);
    }

    #[test]
    fn single_fold_equals_unfolded_exactly() {
        let table = sel_table(50);
        let pa: Vec<f64> = table.continuous(0).unwrap().to_vec();
        let models: Vec<PredictionVector> = (0..4)
            .map(|id| PredictionVector {
                model_id: id,
                label: None,
                values: pa
                    .iter()
                    .map(|v| 2.0 * v + 0.01 * id as f64)
                    .collect(),
            })
            .collect();
        let unfolded = select(
            &models,
            &chain_dag(),
            "y",
            &table,
            &CamConfig::default(),
        )
        .unwrap();
        let one_fold = select(
            &models,
            &chain_dag(),
            "y",
            &table,
            &CamConfig {
                k_folds: Some(1),
                fold_seed: 99,
                ..CamConfig::default()
            },
        )
        .unwrap();
        for (a, b) in unfolded.models.iter().zip(&one_fold.models) {
            assert_eq!(a.f, b.f);
            assert_eq!(a.h, b.h);
            assert_eq!(a.r, b.r);
        }
    }

    #[test]
    fn k_folds_partition_and_average() {
        let folds = fold_indices(10, 3, 7);
        assert_eq!(folds.len(), 3);
        assert_eq!(folds.iter().map(Vec::len).sum::<usize>(), 10);
        assert_eq!(folds[0].len(), 4);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for fold in &folds {
            assert!(fold.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let table = sel_table(8);
        let model = PredictionVector {
            model_id: 0,
            label: None,
            values: vec![0.0; 8],
        };
        let err = select(
            &[model.clone()],
            &chain_dag(),
            "y",
            &table,
            &CamConfig {
                k_folds: Some(9),
                ..CamConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, CamError::InvalidFolds { k: 9 }));

        let err = select(
            &[model.clone()],
            &chain_dag(),
            "y",
            &table,
            &CamConfig {
                h_direction: HDirection::Maximize,
                ..CamConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, CamError::DirectionMismatch { .. }));

        let empty: [PredictionVector; 0] = [];
        assert!(matches!(
            select(&empty, &chain_dag(), "y", &table, &CamConfig::default()),
            Err(CamError::EmptyModelSet)
        ));

        let err = select(
            &[model.clone(), model],
            &chain_dag(),
            "y",
            &table,
            &CamConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CamError::DuplicateModelId { id: 0 }));
    }

    #[test]
    fn prediction_length_mismatch_is_reported() {
        let table = sel_table(8);
        let short = PredictionVector {
            model_id: 4,
            label: None,
            values: vec![0.0; 3],
        };
        let err = select(
            &[short],
            &chain_dag(),
            "y",
            &table,
            &CamConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CamError::Prediction { model_id: 4, .. }));
    }

    #[test]
    fn selection_report_serializes_with_metric_name() {
        let table = sel_table(8);
        let model = PredictionVector {
            model_id: 0,
            label: Some("external".into()),
            values: vec![0.5; 8],
        };
        let report =
            select(&[model], &chain_dag(), "y", &table, &CamConfig::default()).unwrap();
        let json = report.to_json();
        assert!(json.contains("\"h_metric\": \"mse\""));
        assert!(json.contains("\"label\": \"external\""));
        let back: SelectionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
