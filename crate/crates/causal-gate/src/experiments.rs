//! End-to-end benchmark presets.
//!
//! Each preset is a fully seeded pipeline: draw graphs and generative
//! models, sample data, train a population of candidate networks, select
//! one with the graph-aware combined score, and compare that selection
//! against purely statistical baselines on held-out, distribution-shifted
//! data. A run writes a directory of artifacts, `config_echo.json` (the
//! fully resolved configuration), `report.json`, `report.csv`, and a
//! selection-versus-test scatter, and re-running from the echoed config
//! reproduces every artifact byte for byte.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cam::{self, CamConfig, CamError, HDirection, SelectionReport};
use crate::data::{
    self, DataError, HoldoutSide, MissingPolicy, Preprocessor, Schema, SplitIndices, SplitSpec,
    Table,
};
use crate::eval::{self, EvalError, ExperimentReport, TestMetricKind};
use crate::graph::{Dag, DagFile, DagFileError, GraphError};
use crate::mlp::{self, MlpError, MlpModel, Task, TrainConfig};
use crate::seeding::derive_seed;
use crate::synth::{self, Gaussian, Perturbation, SynthError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {detail}")]
    InvalidSpec { detail: String },
    #[error("preset `{preset}` requires the `{field}` input")]
    MissingInput { preset: Preset, field: &'static str },
    #[error("no node with positive degree to use as a target")]
    NoConnectedTarget,
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    DagFile(#[from] DagFileError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Cam(#[from] CamError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("artifact i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("artifact is malformed: {0}")]
    Json(#[from] serde_json::Error),
}

// ── Configuration ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Fixed two-parent collider; compares rank correlations against mean
    /// performance over a grid of noise shifts.
    Motivating,
    /// Random graphs of several sizes; top-decile and whole-ranking
    /// comparison on a shifted test set.
    Robustness,
    /// Same pipeline, then re-selects with edge-thinned copies of the graph.
    Subgraph,
    /// Same pipeline, then re-selects with deliberately mis-specified
    /// graphs.
    Imposter,
    /// Binary-target variant of the robustness pipeline, ranked by AUROC.
    Classification,
    /// Real tabular data: holds out one extreme tail of a column as the
    /// shifted test set.
    OodCsv,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Motivating,
        Preset::Robustness,
        Preset::Subgraph,
        Preset::Imposter,
        Preset::Classification,
        Preset::OodCsv,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Motivating => "motivating",
            Preset::Robustness => "robustness",
            Preset::Subgraph => "subgraph",
            Preset::Imposter => "imposter",
            Preset::Classification => "classification",
            Preset::OodCsv => "ood_csv",
        }
    }

    pub fn parse(name: &str) -> Option<Preset> {
        Preset::ALL.iter().copied().find(|p| p.name() == name)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved description of one experiment run. Serialized verbatim to
/// `config_echo.json`; feeding that file back in reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub seed: u64,
    /// Graph sizes for the synthetic presets.
    pub n_vertices: Vec<usize>,
    /// Graphs drawn per size (seeds, for the motivating preset).
    pub n_dags: usize,
    /// Candidate networks trained per graph.
    pub n_models: usize,
    /// Rows sampled for the train/validation/selection pool.
    pub n_rows: usize,
    /// Rows per shifted test table.
    pub n_test_rows: usize,
    /// How many nodes the test-set shift perturbs.
    pub n_perturbed: usize,
    /// Edge fractions retained by the subgraph preset.
    pub keep_fractions: Vec<f64>,
    /// Edit counts applied by the imposter preset.
    pub mutation_counts: Vec<usize>,
    pub cam: CamConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub emit_svg: bool,
    // Inputs for the ood_csv preset.
    pub csv: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub dag: Option<PathBuf>,
    pub target: Option<String>,
    /// Column whose tail is held out; defaults to the target.
    pub holdout_column: Option<String>,
    pub holdout_side: HoldoutSide,
    pub holdout_fraction: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            preset: Preset::Robustness,
            seed: 0,
            n_vertices: vec![4, 8],
            n_dags: 20,
            n_models: 25,
            n_rows: 10_000,
            n_test_rows: 2_000,
            n_perturbed: 1,
            keep_fractions: vec![1.0, 0.75, 0.5, 0.25, 0.0],
            mutation_counts: vec![1, 2, 4],
            cam: CamConfig::default(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            emit_svg: false,
            csv: None,
            schema: None,
            dag: None,
            target: None,
            holdout_column: None,
            holdout_side: HoldoutSide::High,
            holdout_fraction: 0.2,
        }
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            preset,
            ..ExperimentSpec::default()
        };
        match preset {
            Preset::Classification => {
                spec.n_dags = 10;
                spec.cam.h_direction = HDirection::Maximize;
            }
            Preset::Motivating | Preset::Robustness | Preset::Subgraph | Preset::Imposter
            | Preset::OodCsv => {}
        }
        spec
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |detail: String| Err(ExperimentError::InvalidSpec { detail });
        if self.n_models < 2 {
            return bad(format!("n_models {} must be at least 2", self.n_models));
        }
        if self.n_dags == 0 {
            return bad("n_dags must be at least 1".into());
        }
        if self.n_vertices.is_empty() || self.n_vertices.iter().any(|&n| n < 2) {
            return bad(format!("n_vertices {:?} must all be at least 2", self.n_vertices));
        }
        if self.n_test_rows == 0 {
            return bad("n_test_rows must be at least 1".into());
        }
        if self.n_perturbed == 0 {
            return bad("n_perturbed must be at least 1".into());
        }
        if self.keep_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad(format!("keep_fractions {:?} must lie in [0, 1]", self.keep_fractions));
        }
        match self.preset {
            Preset::Classification => {
                if self.cam.h_direction != HDirection::Maximize {
                    return bad("classification ranks by a maximized metric".into());
                }
            }
            Preset::OodCsv => {}
            _ => {
                if self.cam.h_direction != HDirection::Minimize {
                    return bad(format!("{} ranks by a minimized metric", self.preset));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ExperimentSpec, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        let spec: ExperimentSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("spec serialization");
        text.push('\n');
        text
    }
}

// ── Reports ───────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonUnit {
    pub n_vertices: usize,
    pub dag_index: usize,
    pub target: String,
    pub best_model_id: usize,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonAggregate {
    pub n_units: usize,
    /// Fraction of units where the top decile by combined score performed
    /// at least as well as the top decile by the statistical metric.
    pub frac_cam_top_at_least_stat: f64,
    pub mean_delta_top10: f64,
    pub mean_ic_cam: f64,
    pub mean_ic_stat: f64,
    pub mean_delta_ic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationComparisonReport {
    pub metric: TestMetricKind,
    pub units: Vec<ComparisonUnit>,
    pub aggregate: ComparisonAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivatingUnit {
    pub seed_index: usize,
    /// Spearman correlation between combined-score rank and mean shifted
    /// error, and between selection-split error rank and mean shifted error.
    pub spearman_cam: f64,
    pub spearman_stat: f64,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivatingReport {
    pub units: Vec<MotivatingUnit>,
    pub n_units: usize,
    pub frac_cam_correlates_better: f64,
    pub mean_spearman_cam: f64,
    pub mean_spearman_stat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationUnit {
    pub n_vertices: usize,
    pub dag_index: usize,
    /// Kept-edge fraction (subgraph) or edit count (imposter).
    pub level: f64,
    /// Structural Hamming distance between the degraded and true graph.
    pub hamming_distance: usize,
    pub selected_model_id: usize,
    pub baseline_model_id: usize,
    /// Model that the statistical metric alone would have picked.
    pub stat_model_id: usize,
    pub selected_test_metric: f64,
    pub baseline_test_metric: f64,
    /// Selected minus baseline test error; zero when the degraded graph
    /// leads to the same choice as the true graph.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub n_units: usize,
    pub mean_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationReport {
    pub metric: TestMetricKind,
    pub units: Vec<DegradationUnit>,
    pub per_level: Vec<LevelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodReport {
    pub target: String,
    pub holdout_column: String,
    pub holdout_side: HoldoutSide,
    pub holdout_fraction: f64,
    pub n_pool_rows: usize,
    pub n_test_rows: usize,
    pub dropped_rows: usize,
    pub selection: SelectionReport,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PresetReport {
    Motivating(MotivatingReport),
    Robustness(PopulationComparisonReport),
    Subgraph(DegradationReport),
    Imposter(DegradationReport),
    Classification(PopulationComparisonReport),
    OodCsv(OodReport),
}

/// Files written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunPaths {
    pub dir: PathBuf,
    pub config_echo: PathBuf,
    pub report_json: PathBuf,
    pub report_csv: PathBuf,
    pub scatter_csv: PathBuf,
    pub scatter_svg: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: PresetReport,
    pub paths: RunPaths,
}

// ── Synthetic pipeline ────────────────────────────────────────────────────

/// One fully prepared synthetic benchmark unit: a graph with mechanisms, a
/// trained model population, scaled splits, a shifted test table, and the
/// baseline selection made with the true graph.
struct SyntheticUnit {
    dag: Dag,
    target: String,
    models: Vec<MlpModel>,
    sel: Table,
    cam: CamConfig,
    selection: SelectionReport,
    test_metric: BTreeMap<usize, f64>,
    metric: TestMetricKind,
}

impl SyntheticUnit {
    fn metric_of(&self, model_id: usize) -> f64 {
        self.test_metric[&model_id]
    }
}

fn shift_perturbation(n_nodes: usize, n_perturbed: usize, seed: u64) -> Perturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = n_perturbed.clamp(1, n_nodes);
    let nodes: BTreeSet<usize> = rand::seq::index::sample(&mut rng, n_nodes, count)
        .into_iter()
        .collect();
    Perturbation {
        nodes,
        noise: Gaussian::new(1.0, 2.0),
    }
}

fn build_synthetic_unit(
    spec: &ExperimentSpec,
    n_vertices: usize,
    unit_index: u64,
    binary_target: bool,
) -> Result<SyntheticUnit, ExperimentError> {
    let seed = spec.seed;
    let sub = |tag: &str| derive_seed(seed, tag, unit_index);

    let dag = synth::random_dag(n_vertices, sub("dag"))?;
    let scm = synth::build_scm(&dag, sub("scm"))?;
    let target_index =
        synth::random_connected_target(&dag, sub("target")).ok_or(ExperimentError::NoConnectedTarget)?;
    let target = dag.name(target_index).to_string();

    let mut pool = scm.sample(spec.n_rows, sub("base-data"), None)?;
    let perturbation = shift_perturbation(n_vertices, spec.n_perturbed, sub("shift"));
    let mut test = scm.sample(spec.n_test_rows, sub("shift-data"), Some(&perturbation))?;
    let dag = if binary_target {
        pool = synth::bernoulli_target(&pool, &target, sub("labels"))?;
        test = synth::bernoulli_target(&test, &target, sub("labels-shift"))?;
        synth::binarize_target_dag(&dag, &target)?
    } else {
        dag
    };

    let split_spec = SplitSpec {
        seed: sub("split"),
        ..spec.split
    };
    let (split, _) = data::split(&pool, &split_spec)?;
    let prep = Preprocessor::fit(&split.train, &target)?;
    let train_table = prep.apply(&split.train);
    let val_table = prep.apply(&split.val);
    let sel = prep.apply(&split.sel);
    let test = prep.apply(&test);

    let task = if binary_target { Task::Binary } else { Task::Regression };
    let models = mlp::train_population(
        spec.n_models,
        sub("models"),
        task,
        &train_table,
        &val_table,
        &target,
        &spec.train,
    )?;

    let cam_config = CamConfig {
        fold_seed: sub("folds"),
        ..spec.cam.clone()
    };
    let selection = cam::select(&models, &dag, &target, &sel, &cam_config)?;

    let metric = if binary_target { TestMetricKind::Auroc } else { TestMetricKind::Mse };
    let per_model = eval::perturbed_average(&models, std::slice::from_ref(&test), &target)?;
    let test_metric: BTreeMap<usize, f64> = models
        .iter()
        .enumerate()
        .map(|(i, m)| (cam::SelectionModel::model_id(m), per_model[i]))
        .collect();

    Ok(SyntheticUnit {
        dag,
        target,
        models,
        sel,
        cam: cam_config,
        selection,
        test_metric,
        metric,
    })
}

fn comparison_report(
    spec: &ExperimentSpec,
    binary_target: bool,
) -> Result<(PopulationComparisonReport, Vec<ScatterRow>), ExperimentError> {
    let mut units = Vec::new();
    let mut scatter = Vec::new();
    let mut unit_index = 0u64;
    for &n_vertices in &spec.n_vertices {
        for dag_index in 0..spec.n_dags {
            let unit = build_synthetic_unit(spec, n_vertices, unit_index, binary_target)?;
            unit_index += 1;
            let report =
                eval::build_experiment_report(&unit.selection.scores(), &unit.test_metric, unit.metric)?;
            scatter.extend(unit.selection.models.iter().map(|m| ScatterRow {
                context: format!("{n_vertices},{dag_index},{}", m.model_id),
                h_sel: m.h,
                test_metric: unit.metric_of(m.model_id),
            }));
            units.push(ComparisonUnit {
                n_vertices,
                dag_index,
                target: unit.target.clone(),
                best_model_id: unit.selection.best_model_id,
                report,
            });
        }
    }
    let n_units = units.len();
    let mean = |f: fn(&ExperimentReport) -> f64| {
        units.iter().map(|u| f(&u.report)).sum::<f64>() / n_units as f64
    };
    let aggregate = ComparisonAggregate {
        n_units,
        frac_cam_top_at_least_stat: units.iter().filter(|u| u.report.delta_mse >= 0.0).count() as f64
            / n_units as f64,
        mean_delta_top10: mean(|r| r.delta_mse),
        mean_ic_cam: mean(|r| r.ic_cam),
        mean_ic_stat: mean(|r| r.ic_mse),
        mean_delta_ic: mean(|r| r.delta_ic),
    };
    let metric = if binary_target { TestMetricKind::Auroc } else { TestMetricKind::Mse };
    Ok((
        PopulationComparisonReport {
            metric,
            units,
            aggregate,
        },
        scatter,
    ))
}

fn motivating_report(
    spec: &ExperimentSpec,
) -> Result<(MotivatingReport, Vec<ScatterRow>), ExperimentError> {
    let collider = Dag::all_continuous(
        vec!["x1".into(), "x2".into(), "y".into()],
        vec![(0, 2), (1, 2)],
    )?;
    let target = "y";

    let mut units = Vec::new();
    let mut scatter = Vec::new();
    for seed_index in 0..spec.n_dags {
        let unit_index = seed_index as u64;
        let sub = |tag: &str| derive_seed(spec.seed, tag, unit_index);
        let scm = synth::build_scm(&collider, sub("scm"))?;
        let pool = scm.sample(spec.n_rows, sub("base-data"), None)?;
        let split_spec = SplitSpec {
            seed: sub("split"),
            ..spec.split
        };
        let (split, _) = data::split(&pool, &split_spec)?;
        let prep = Preprocessor::fit(&split.train, target)?;
        let train_table = prep.apply(&split.train);
        let val_table = prep.apply(&split.val);
        let sel = prep.apply(&split.sel);
        let models = mlp::train_population(
            spec.n_models,
            sub("models"),
            Task::Regression,
            &train_table,
            &val_table,
            target,
            &spec.train,
        )?;
        let cam_config = CamConfig {
            fold_seed: sub("folds"),
            ..spec.cam.clone()
        };
        let selection = cam::select(&models, &collider, target, &sel, &cam_config)?;

        let suite: Vec<Table> = scm
            .perturbation_grid(spec.n_test_rows, sub("grid"))?
            .iter()
            .map(|t| prep.apply(t))
            .collect();
        let per_model = eval::perturbed_average(&models, &suite, target)?;
        let test_metric: BTreeMap<usize, f64> = models
            .iter()
            .enumerate()
            .map(|(i, m)| (cam::SelectionModel::model_id(m), per_model[i]))
            .collect();
        let report =
            eval::build_experiment_report(&selection.scores(), &test_metric, TestMetricKind::Mse)?;

        let r_values: Vec<f64> = selection.models.iter().map(|m| m.r).collect();
        let h_values: Vec<f64> = selection.models.iter().map(|m| m.h).collect();
        let shifted: Vec<f64> = selection
            .models
            .iter()
            .map(|m| test_metric[&m.model_id])
            .collect();
        let spearman_cam = eval::spearman(&r_values, &shifted)?;
        let spearman_stat = eval::spearman(&h_values, &shifted)?;

        scatter.extend(selection.models.iter().map(|m| ScatterRow {
            context: format!("{seed_index},{}", m.model_id),
            h_sel: m.h,
            test_metric: test_metric[&m.model_id],
        }));
        units.push(MotivatingUnit {
            seed_index,
            spearman_cam,
            spearman_stat,
            report,
        });
    }
    let n_units = units.len();
    let frac = units
        .iter()
        .filter(|u| u.spearman_cam > u.spearman_stat)
        .count() as f64
        / n_units as f64;
    let mean_cam = units.iter().map(|u| u.spearman_cam).sum::<f64>() / n_units as f64;
    let mean_stat = units.iter().map(|u| u.spearman_stat).sum::<f64>() / n_units as f64;
    Ok((
        MotivatingReport {
            units,
            n_units,
            frac_cam_correlates_better: frac,
            mean_spearman_cam: mean_cam,
            mean_spearman_stat: mean_stat,
        },
        scatter,
    ))
}

/// Shared by the subgraph and imposter presets: re-select with a degraded
/// graph and charge the test-metric difference against the true-graph
/// selection. Training happens once per unit; only selection is repeated.
fn degradation_report(
    spec: &ExperimentSpec,
    is_subgraph: bool,
) -> Result<(DegradationReport, Vec<ScatterRow>), ExperimentError> {
    let mut units = Vec::new();
    let mut scatter = Vec::new();
    let mut unit_index = 0u64;
    for &n_vertices in &spec.n_vertices {
        for dag_index in 0..spec.n_dags {
            let unit = build_synthetic_unit(spec, n_vertices, unit_index, false)?;
            let baseline_id = unit.selection.best_model_id;
            let stat_id = unit
                .selection
                .models
                .iter()
                .find(|m| m.rank_by_h == 1)
                .expect("non-empty selection")
                .model_id;
            scatter.extend(unit.selection.models.iter().map(|m| ScatterRow {
                context: format!("{n_vertices},{dag_index},{}", m.model_id),
                h_sel: m.h,
                test_metric: unit.metric_of(m.model_id),
            }));

            let levels: Vec<f64> = if is_subgraph {
                spec.keep_fractions.clone()
            } else {
                spec.mutation_counts.iter().map(|&m| m as f64).collect()
            };
            for (level_index, &level) in levels.iter().enumerate() {
                let level_key = unit_index * 100 + level_index as u64;
                let level_seed = derive_seed(
                    spec.seed,
                    if is_subgraph { "subgraph" } else { "imposter" },
                    level_key,
                );
                let degraded = if is_subgraph {
                    unit.dag.random_subgraph(level, level_seed)
                } else if level == 0.0 {
                    unit.dag.clone()
                } else {
                    let target_index = unit.dag.index_of(&unit.target).expect("unit target");
                    // A random edit sequence can dead-end (every remaining
                    // edit for one step would close a cycle) even when other
                    // sequences of the same length exist, so reroll a few
                    // times before giving up.
                    let mut found = None;
                    for attempt in 0..10u64 {
                        let seed =
                            derive_seed(spec.seed, "imposter", level_key + attempt * 1_000_000);
                        match unit.dag.make_imposter(target_index, level as usize, seed) {
                            Ok(dag) => {
                                found = Some(dag);
                                break;
                            }
                            Err(GraphError::NoFeasibleMutation) => continue,
                            Err(other) => return Err(other.into()),
                        }
                    }
                    found.ok_or(GraphError::NoFeasibleMutation)?
                };
                let selection =
                    cam::select(&unit.models, &degraded, &unit.target, &unit.sel, &unit.cam)?;
                let selected_id = selection.best_model_id;
                let selected_test_metric = unit.metric_of(selected_id);
                let baseline_test_metric = unit.metric_of(baseline_id);
                units.push(DegradationUnit {
                    n_vertices,
                    dag_index,
                    level,
                    hamming_distance: unit.dag.hamming_distance(&degraded)?,
                    selected_model_id: selected_id,
                    baseline_model_id: baseline_id,
                    stat_model_id: stat_id,
                    selected_test_metric,
                    baseline_test_metric,
                    delta: selected_test_metric - baseline_test_metric,
                });
            }
            unit_index += 1;
        }
    }

    let mut level_order: Vec<f64> = Vec::new();
    for unit in &units {
        if !level_order.contains(&unit.level) {
            level_order.push(unit.level);
        }
    }
    let per_level = level_order
        .into_iter()
        .map(|level| {
            let deltas: Vec<f64> = units
                .iter()
                .filter(|u| u.level == level)
                .map(|u| u.delta)
                .collect();
            LevelSummary {
                level,
                n_units: deltas.len(),
                mean_delta: deltas.iter().sum::<f64>() / deltas.len() as f64,
            }
        })
        .collect();

    Ok((
        DegradationReport {
            metric: TestMetricKind::Mse,
            units,
            per_level,
        },
        scatter,
    ))
}

fn ood_report(spec: &ExperimentSpec) -> Result<(OodReport, Vec<ScatterRow>), ExperimentError> {
    let missing = |field: &'static str| ExperimentError::MissingInput {
        preset: spec.preset,
        field,
    };
    let csv_path = spec.csv.as_ref().ok_or_else(|| missing("csv"))?;
    let schema_path = spec.schema.as_ref().ok_or_else(|| missing("schema"))?;
    let dag_path = spec.dag.as_ref().ok_or_else(|| missing("dag"))?;
    let target = spec.target.as_ref().ok_or_else(|| missing("target"))?;

    let schema = Schema::load(schema_path)?;
    let loaded = data::load_csv(csv_path, &schema, MissingPolicy::DropRows)?;
    let dag = DagFile::load(dag_path)?.dag;
    let holdout_column = spec.holdout_column.clone().unwrap_or_else(|| target.clone());

    let (test, pool) = data::ood_holdout(
        &loaded.table,
        &holdout_column,
        spec.holdout_side,
        spec.holdout_fraction,
    )?;
    let split_spec = SplitSpec {
        seed: derive_seed(spec.seed, "split", 0),
        ..spec.split
    };
    let (split, _) = data::split(&pool, &split_spec)?;
    let prep = Preprocessor::fit(&split.train, target)?;
    let train_table = prep.apply(&split.train);
    let val_table = prep.apply(&split.val);
    let sel = prep.apply(&split.sel);
    let test_scaled = prep.apply(&test);

    let target_index = loaded.table.require_column(target)?;
    let task = match loaded.table.schema().columns[target_index].kind {
        crate::graph::NodeKind::Continuous => Task::Regression,
        crate::graph::NodeKind::Discrete(2) => Task::Binary,
        other => {
            return Err(ExperimentError::InvalidSpec {
                detail: format!("target `{target}` has unsupported kind {other:?}"),
            })
        }
    };
    let metric = match task {
        Task::Regression => TestMetricKind::Mse,
        Task::Binary => TestMetricKind::Auroc,
    };

    let models = mlp::train_population(
        spec.n_models,
        derive_seed(spec.seed, "models", 0),
        task,
        &train_table,
        &val_table,
        target,
        &spec.train,
    )?;
    let cam_config = CamConfig {
        fold_seed: derive_seed(spec.seed, "folds", 0),
        ..spec.cam.clone()
    };
    let selection = cam::select(&models, &dag, target, &sel, &cam_config)?;
    let per_model = eval::perturbed_average(&models, std::slice::from_ref(&test_scaled), target)?;
    let test_metric: BTreeMap<usize, f64> = models
        .iter()
        .enumerate()
        .map(|(i, m)| (cam::SelectionModel::model_id(m), per_model[i]))
        .collect();
    let report = eval::build_experiment_report(&selection.scores(), &test_metric, metric)?;

    let scatter = selection
        .models
        .iter()
        .map(|m| ScatterRow {
            context: format!("{}", m.model_id),
            h_sel: m.h,
            test_metric: test_metric[&m.model_id],
        })
        .collect();
    Ok((
        OodReport {
            target: target.clone(),
            holdout_column,
            holdout_side: spec.holdout_side,
            holdout_fraction: spec.holdout_fraction,
            n_pool_rows: pool.n_rows(),
            n_test_rows: test.n_rows(),
            dropped_rows: loaded.dropped_rows,
            selection,
            report,
        },
        scatter,
    ))
}

// ── Artifacts ─────────────────────────────────────────────────────────────

struct ScatterRow {
    context: String,
    h_sel: f64,
    test_metric: f64,
}

fn scatter_header(preset: Preset) -> &'static str {
    match preset {
        Preset::Motivating => "seed_index,model_id,h_sel,test_metric",
        Preset::Robustness | Preset::Subgraph | Preset::Imposter | Preset::Classification => {
            "n_vertices,dag_index,model_id,h_sel,test_metric"
        }
        Preset::OodCsv => "model_id,h_sel,test_metric",
    }
}

fn report_csv(report: &PresetReport) -> String {
    let mut out = String::new();
    match report {
        PresetReport::Motivating(r) => {
            out.push_str("seed_index,model_id,f,h,r,test_metric\n");
            for unit in &r.units {
                for row in &unit.report.per_model {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        unit.seed_index, row.model_id, row.f, row.h, row.r, row.test_metric
                    ));
                }
            }
        }
        PresetReport::Robustness(r) | PresetReport::Classification(r) => {
            out.push_str("n_vertices,dag_index,model_id,f,h,r,test_metric\n");
            for unit in &r.units {
                for row in &unit.report.per_model {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        unit.n_vertices,
                        unit.dag_index,
                        row.model_id,
                        row.f,
                        row.h,
                        row.r,
                        row.test_metric
                    ));
                }
            }
        }
        PresetReport::Subgraph(r) | PresetReport::Imposter(r) => {
            out.push_str(
                "n_vertices,dag_index,level,hamming_distance,selected_model_id,\
                 baseline_model_id,selected_test_metric,baseline_test_metric,delta\n",
            );
            for u in &r.units {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    u.n_vertices,
                    u.dag_index,
                    u.level,
                    u.hamming_distance,
                    u.selected_model_id,
                    u.baseline_model_id,
                    u.selected_test_metric,
                    u.baseline_test_metric,
                    u.delta
                ));
            }
        }
        PresetReport::OodCsv(r) => {
            out.push_str("model_id,f,h,r,test_metric\n");
            for row in &r.report.per_model {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.model_id, row.f, row.h, row.r, row.test_metric
                ));
            }
        }
    }
    out
}

/// Minimal SVG scatter of selection-split metric versus test metric.
fn scatter_svg(rows: &[ScatterRow], x_label: &str, y_label: &str) -> String {
    let (w, h, margin) = (640.0, 480.0, 60.0);
    let finite = |v: f64| if v.is_finite() { Some(v) } else { None };
    let xs: Vec<f64> = rows.iter().filter_map(|r| finite(r.h_sel)).collect();
    let ys: Vec<f64> = rows.iter().filter_map(|r| finite(r.test_metric)).collect();
    let bounds = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let px = |x: f64| margin + (x - x_lo) / (x_hi - x_lo) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y_lo) / (y_hi - y_lo) * (h - 2.0 * margin);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = h - margin,
        r = w - margin
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = h - margin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{x_label}</text>\n",
        w / 2.0,
        h - margin / 3.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 {x} {y})\">{y_label}</text>\n",
        margin / 3.0,
        h / 2.0,
        x = margin / 3.0,
        y = h / 2.0
    ));
    for (label, value, x, y, anchor) in [
        ("xlo", x_lo, margin, h - margin / 2.0, "middle"),
        ("xhi", x_hi, w - margin, h - margin / 2.0, "middle"),
    ] {
        let _ = label;
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-size=\"11\">{value:.4}</text>\n"
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{y_lo:.4}</text>\n",
        x = margin - 5.0,
        y = h - margin
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{y_hi:.4}</text>\n",
        x = margin - 5.0,
        y = margin
    ));
    for row in rows {
        if row.h_sel.is_finite() && row.test_metric.is_finite() {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\" \
                 fill-opacity=\"0.6\"/>\n",
                px(row.h_sel),
                py(row.test_metric)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Runs one experiment and writes its artifact directory. Everything the
/// run does derives from the spec, so rerunning with the emitted
/// `config_echo.json` writes identical artifacts.
pub fn run(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunOutcome, ExperimentError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let config_echo = out_dir.join("config_echo.json");
    std::fs::write(&config_echo, spec.to_json())?;

    let (report, scatter) = match spec.preset {
        Preset::Motivating => {
            let (r, s) = motivating_report(spec)?;
            (PresetReport::Motivating(r), s)
        }
        Preset::Robustness => {
            let (r, s) = comparison_report(spec, false)?;
            (PresetReport::Robustness(r), s)
        }
        Preset::Subgraph => {
            let (r, s) = degradation_report(spec, true)?;
            (PresetReport::Subgraph(r), s)
        }
        Preset::Imposter => {
            let (r, s) = degradation_report(spec, false)?;
            (PresetReport::Imposter(r), s)
        }
        Preset::Classification => {
            let (r, s) = comparison_report(spec, true)?;
            (PresetReport::Classification(r), s)
        }
        Preset::OodCsv => {
            let (r, s) = ood_report(spec)?;
            (PresetReport::OodCsv(r), s)
        }
    };

    let report_json = out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&report_json, text)?;

    let report_csv_path = out_dir.join("report.csv");
    std::fs::write(&report_csv_path, report_csv(&report))?;

    let scatter_csv = out_dir.join("scatter_sel_vs_test.csv");
    let mut csv = String::from(scatter_header(spec.preset));
    csv.push('\n');
    for row in &scatter {
        csv.push_str(&format!("{},{},{}\n", row.context, row.h_sel, row.test_metric));
    }
    std::fs::write(&scatter_csv, csv)?;

    let scatter_svg_path = if spec.emit_svg {
        let path = out_dir.join("scatter_sel_vs_test.svg");
        let (x_label, y_label) = match spec.preset {
            Preset::Classification => ("selection AUROC", "shifted test AUROC"),
            _ => ("selection MSE", "shifted test MSE"),
        };
        std::fs::write(&path, scatter_svg(&scatter, x_label, y_label))?;
        Some(path)
    } else {
        None
    };

    Ok(RunOutcome {
        report,
        paths: RunPaths {
            dir: out_dir.to_path_buf(),
            config_echo,
            report_json,
            report_csv: report_csv_path,
            scatter_csv,
            scatter_svg: scatter_svg_path,
        },
    })
}

// ── Trained populations on disk ───────────────────────────────────────────

/// Everything needed to reuse a trained population against its source CSV:
/// the split that carved out train/val/selection rows, the preprocessing
/// fitted on the training part, and one checkpoint file per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationManifest {
    pub target: String,
    pub task: Task,
    pub n_models: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
    pub split: SplitIndices,
    pub preprocess: Preprocessor,
    pub model_files: Vec<String>,
}

impl PopulationManifest {
    pub fn load(path: &Path) -> Result<PopulationManifest, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Splits a table, fits the scaler on the training part, and trains a
/// population. The manifest ties the models back to the source rows.
pub fn train_pipeline(
    table: &Table,
    target: &str,
    n_models: usize,
    base_seed: u64,
    train_config: &TrainConfig,
    split_spec: &SplitSpec,
) -> Result<(PopulationManifest, Vec<MlpModel>), ExperimentError> {
    let target_index = table.require_column(target)?;
    let task = match table.schema().columns[target_index].kind {
        crate::graph::NodeKind::Continuous => Task::Regression,
        crate::graph::NodeKind::Discrete(2) => Task::Binary,
        other => {
            return Err(ExperimentError::InvalidSpec {
                detail: format!("target `{target}` has unsupported kind {other:?}"),
            })
        }
    };
    let (split, indices) = data::split(table, split_spec)?;
    let prep = Preprocessor::fit(&split.train, target)?;
    let train_table = prep.apply(&split.train);
    let val_table = prep.apply(&split.val);
    let models = mlp::train_population(
        n_models,
        base_seed,
        task,
        &train_table,
        &val_table,
        target,
        train_config,
    )?;
    let manifest = PopulationManifest {
        target: target.to_string(),
        task,
        n_models,
        base_seed,
        train: train_config.clone(),
        split: indices,
        preprocess: prep,
        model_files: (0..n_models).map(|i| format!("models/model_{i:04}.json")).collect(),
    };
    Ok((manifest, models))
}

/// Writes `manifest.json` plus one checkpoint per model under `dir`.
pub fn save_population(
    dir: &Path,
    manifest: &PopulationManifest,
    models: &[MlpModel],
) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir.join("models"))?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    for (model, file) in models.iter().zip(&manifest.model_files) {
        model.save(&dir.join(file))?;
    }
    Ok(())
}

pub fn load_population(dir: &Path) -> Result<(PopulationManifest, Vec<MlpModel>), ExperimentError> {
    let manifest = PopulationManifest::load(&dir.join("manifest.json"))?;
    let mut models = Vec::with_capacity(manifest.model_files.len());
    for file in &manifest.model_files {
        models.push(MlpModel::load(&dir.join(file))?);
    }
    Ok((manifest, models))
}

/// Re-runs selection for a stored population against its source table: the
/// manifest's selection rows are extracted, rescaled with the stored
/// preprocessing, and scored against the graph.
pub fn select_from_manifest(
    table: &Table,
    dag: &Dag,
    manifest: &PopulationManifest,
    models: &[MlpModel],
    cam_config: &CamConfig,
) -> Result<SelectionReport, ExperimentError> {
    let sel = manifest.preprocess.apply(&table.select_rows(&manifest.split.sel)?);
    Ok(cam::select(models, dag, &manifest.target, &sel, cam_config)?)
}

// ── Tests ─────────────────────────────────────────────────────────────────
