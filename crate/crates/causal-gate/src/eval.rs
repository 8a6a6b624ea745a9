//! Evaluation metrics and experiment-report assembly.
//!
//! Selection strategies are compared on held-out perturbed data with two
//! summaries: the mean test metric of the top 10% of models under each
//! ranking, and the normalized inversion count of the test metric read in
//! ranked order (0 = the ranking orders the test metric perfectly, 1 =
//! perfectly backwards; ties count as ordered).

use std::collections::BTreeMap;
use std::io::Write as IoWrite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cam::{CamError, HDirection, ModelScore, RankKey, SelectionModel};
use crate::data::{NodeKind, Table};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("input is empty")]
    Empty,
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("fraction {fraction} not in (0, 1]")]
    InvalidFraction { fraction: f64 },
    #[error("no test metric for model {id}")]
    MissingModel { id: usize },
    #[error("metric is constant; correlation is undefined")]
    Degenerate,
}

/// Mean squared error.
pub fn mse(truth: &[f64], pred: &[f64]) -> Result<f64, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let sum: f64 = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(sum / truth.len() as f64)
}

/// Midranks (average rank for ties), 1-based.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks;
/// tied scores across classes count half. Labels are 0/1.
pub fn auroc(labels: &[u32], scores: &[f64]) -> Result<f64, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    if labels.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l == 1)
        .map(|(_, &r)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Spearman rank correlation (midranks, then Pearson on the ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(EvalError::TooFew {
            needed: 2,
            got: a.len(),
        });
    }
    let ra = midranks(a);
    let rb = midranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..a.len() {
        let da = ra[i] - mean;
        let db = rb[i] - mean;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(EvalError::Degenerate);
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Counts strictly decreasing pairs in `O(n log n)` by merge counting.
fn count_inversions(values: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = values.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut count = count_inversions(left, scratch) + count_inversions(right, scratch);
    let mut i = 0;
    let mut j = 0;
    let mut k = 0;
    while i < left.len() && j < right.len() {
        // Equal values are not inversions: take from the left first.
        if left[i] <= right[j] {
            scratch[k] = left[i];
            i += 1;
        } else {
            scratch[k] = right[j];
            count += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        scratch[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        scratch[k] = right[j];
        j += 1;
        k += 1;
    }
    values.copy_from_slice(&scratch[..n]);
    count
}

/// Fraction of model pairs whose test metrics are out of order when read in
/// the given ranked order: strictly decreasing pairs over `n * (n - 1) / 2`.
/// 0 means the ranking sorts the metrics ascending; ties never count.
pub fn inversion_count_normalized(metrics_in_rank_order: &[f64]) -> Result<f64, EvalError> {
    let n = metrics_in_rank_order.len();
    if n < 2 {
        return Err(EvalError::TooFew { needed: 2, got: n });
    }
    let mut values = metrics_in_rank_order.to_vec();
    let mut scratch = vec![0.0; n];
    let inversions = count_inversions(&mut values, &mut scratch);
    Ok(inversions as f64 / (n * (n - 1) / 2) as f64)
}

/// Indices into `scores` ordered best-first by the chosen key. For `H` the
/// metric direction decides which end is best; `R` and `F` are always
/// ascending. Ties break toward the lower `model_id`.
pub fn order_best_first(
    scores: &[ModelScore],
    key: RankKey,
    direction: HDirection,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let value = |s: &ModelScore| match key {
        RankKey::R => s.r,
        RankKey::F => s.f,
        RankKey::H => match direction {
            HDirection::Minimize => s.h,
            HDirection::Maximize => -s.h,
        },
    };
    order.sort_by(|&a, &b| {
        value(&scores[a])
            .partial_cmp(&value(&scores[b]))
            .expect("scores are finite")
            .then(scores[a].model_id.cmp(&scores[b].model_id))
    });
    order
}

/// Mean test metric of the best `ceil(fraction * n)` models under the given
/// ranking.
pub fn top_fraction_mean(
    scores: &[ModelScore],
    key: RankKey,
    direction: HDirection,
    fraction: f64,
    test_metric: &BTreeMap<usize, f64>,
) -> Result<f64, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EvalError::InvalidFraction { fraction });
    }
    let take = ((fraction * scores.len() as f64).ceil() as usize).clamp(1, scores.len());
    let order = order_best_first(scores, key, direction);
    let mut sum = 0.0;
    for &i in order.iter().take(take) {
        let id = scores[i].model_id;
        sum += test_metric
            .get(&id)
            .copied()
            .ok_or(EvalError::MissingModel { id })?;
    }
    Ok(sum / take as f64)
}

/// Statistical test metric reported on held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMetricKind {
    Mse,
    Auroc,
}

impl TestMetricKind {
    pub fn direction(self) -> HDirection {
        match self {
            TestMetricKind::Mse => HDirection::Minimize,
            TestMetricKind::Auroc => HDirection::Maximize,
        }
    }
}

/// One model's row in an experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerModelRow {
    pub model_id: usize,
    pub f: f64,
    pub h: f64,
    pub r: f64,
    pub test_metric: f64,
}

/// Comparison of combined-score selection against plain statistical
/// selection on one model population.
///
/// `mse10`/`auroc10` is the mean test metric of the top 10% of models ranked
/// by the statistical metric alone; `cam10` ranks by the combined score.
/// `delta_mse` is oriented so that positive favors the combined score, for
/// either metric direction. `ic_*` are normalized inversion counts of the
/// test metric under each ranking (lower = more faithful), and
/// `delta_ic = ic_mse - ic_cam`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metric: TestMetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse10: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auroc10: Option<f64>,
    pub cam10: f64,
    pub ic_mse: f64,
    pub ic_cam: f64,
    pub delta_mse: f64,
    pub delta_ic: f64,
    pub per_model: Vec<PerModelRow>,
}

impl ExperimentReport {
    /// The statistical-baseline top-10% mean, whichever field holds it.
    pub fn stat10(&self) -> f64 {
        self.mse10.or(self.auroc10).expect("one baseline field is set")
    }

    /// Flat CSV, one row per model.
    pub fn write_csv<W: IoWrite>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "model_id,f,h,r,test_metric")?;
        for row in &self.per_model {
            writeln!(
                writer,
                "{},{},{},{},{}",
                row.model_id, row.f, row.h, row.r, row.test_metric
            )?;
        }
        Ok(())
    }
}

/// Assembles the full comparison for one scored model population. The test
/// metric map must cover every scored model.
pub fn build_experiment_report(
    scores: &[ModelScore],
    test_metric: &BTreeMap<usize, f64>,
    metric: TestMetricKind,
) -> Result<ExperimentReport, EvalError> {
    if scores.len() < 2 {
        return Err(EvalError::TooFew {
            needed: 2,
            got: scores.len(),
        });
    }
    let direction = metric.direction();
    let cam10 = top_fraction_mean(scores, RankKey::R, direction, 0.1, test_metric)?;
    let stat10 = top_fraction_mean(scores, RankKey::H, direction, 0.1, test_metric)?;
    let metric_in_order = |key: RankKey| -> Result<Vec<f64>, EvalError> {
        order_best_first(scores, key, direction)
            .iter()
            .map(|&i| {
                let id = scores[i].model_id;
                let v = test_metric
                    .get(&id)
                    .copied()
                    .ok_or(EvalError::MissingModel { id })?;
                // For maximize metrics a faithful ranking descends, so flip
                // the sign before counting ascending-order inversions.
                Ok(match direction {
                    HDirection::Minimize => v,
                    HDirection::Maximize => -v,
                })
            })
            .collect()
    };
    let ic_cam = inversion_count_normalized(&metric_in_order(RankKey::R)?)?;
    let ic_mse = inversion_count_normalized(&metric_in_order(RankKey::H)?)?;
    let (mse10, auroc10, delta_mse) = match metric {
        TestMetricKind::Mse => (Some(stat10), None, stat10 - cam10),
        TestMetricKind::Auroc => (None, Some(stat10), cam10 - stat10),
    };
    let per_model = scores
        .iter()
        .map(|s| {
            Ok(PerModelRow {
                model_id: s.model_id,
                f: s.f,
                h: s.h,
                r: s.r,
                test_metric: *test_metric
                    .get(&s.model_id)
                    .ok_or(EvalError::MissingModel { id: s.model_id })?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(ExperimentReport {
        metric,
        mse10,
        auroc10,
        cam10,
        ic_mse,
        ic_cam,
        delta_mse,
        delta_ic: ic_mse - ic_cam,
        per_model,
    })
}

/// Mean held-out metric per model over a suite of perturbed tables: MSE for
/// continuous targets, AUROC for binary ones. Returns one value per model,
/// in input order.
pub fn perturbed_average<M: SelectionModel>(
    models: &[M],
    suite: &[Table],
    target: &str,
) -> Result<Vec<f64>, CamError> {
    if suite.is_empty() {
        return Err(EvalError::Empty.into());
    }
    let mut out = Vec::with_capacity(models.len());
    for model in models {
        let mut sum = 0.0;
        for table in suite {
            let idx = table.require_column(target)?;
            let preds = model
                .predict(table, target)
                .map_err(|e| CamError::Prediction {
                    model_id: model.model_id(),
                    message: e.to_string(),
                })?;
            sum += match table.schema().columns[idx].kind {
                NodeKind::Continuous => {
                    mse(table.continuous(idx)?, &preds)?
                }
                NodeKind::Discrete(_) => {
                    auroc(table.discrete(idx)?, &preds)?
                }
            };
        }
        out.push(sum / suite.len() as f64);
    }
    Ok(out)
}
