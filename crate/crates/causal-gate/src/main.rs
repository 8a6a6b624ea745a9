//! Command-line front end: synthetic data generation, population training,
//! graph scoring, model selection, and full experiment presets.
//!
//! Exit codes: 0 on success, 1 for usage problems, 2 for data or runtime
//! failures. Errors print as a single machine-parsable line on stderr,
//! `error[<kind>]: <message>`.

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use causal_gate::cam::{CamConfig, HDirection, LambdaMode, SelectionReport};
use causal_gate::data::{self, HoldoutSide, MissingPolicy, Schema, SplitSpec, Table};
use causal_gate::experiments::{self, ExperimentSpec, Preset, PresetReport};
use causal_gate::graph::{DagFile, NodeKind};
use causal_gate::mlp::{self, TrainConfig};
use causal_gate::scoring;
use causal_gate::synth;

const SEED_ENV: &str = "CAUSAL_GATE_SEED";

#[derive(Parser)]
#[command(name = "causal-gate", version, about = "Graph-aware model selection toolkit")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic graphs, mechanisms, and datasets.
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
    /// Train a population of candidate networks on a CSV.
    Train(TrainArgs),
    /// Score a dataset against a graph: log-likelihood, BIC, entropies.
    Score(ScoreArgs),
    /// Pick the best model of a population with the combined score.
    Select(SelectArgs),
    /// Print the full combined-score ranking of a population.
    Rank(SelectArgs),
    /// Run a named experiment preset end to end.
    Experiment(ExperimentArgs),
    /// Summarize the artifacts of a finished experiment run.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Sample a random graph with mechanisms and write a dataset.
    Gen(SynthGenArgs),
}

#[derive(Args)]
struct SynthGenArgs {
    /// Number of graph nodes.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Rows to sample.
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for dag.json, scm.json, schema.json, and data.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Column the models learn to predict.
    #[arg(long)]
    target: String,
    /// Population size.
    #[arg(long, default_value_t = 25)]
    models: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the training epoch cap.
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory for manifest.json and model checkpoints.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    dag: PathBuf,
    /// Also report the target-fit term for each model in a predictions file.
    #[arg(long, requires = "preds")]
    target: Option<String>,
    /// External predictions (plain lines, or model_id,row_index,prediction CSV).
    #[arg(long, requires = "target")]
    preds: Option<PathBuf>,
    /// Accepted for interface uniformity; scoring is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    dag: PathBuf,
    /// Population directory written by `train`.
    #[arg(long, conflicts_with = "preds")]
    models: Option<PathBuf>,
    /// External predictions scored on every CSV row (requires --target).
    #[arg(long)]
    preds: Option<PathBuf>,
    /// Target column; required with --preds, otherwise read from the manifest.
    #[arg(long)]
    target: Option<String>,
    /// Fixed trade-off weight between graph fit and the statistical metric.
    #[arg(long)]
    lambda: Option<f64>,
    /// Estimate lambda from this expected graph-fit magnitude (with --expected-h).
    #[arg(long, requires = "expected_h", conflicts_with = "lambda")]
    expected_f: Option<f64>,
    /// Expected statistical-metric magnitude for lambda estimation.
    #[arg(long, requires = "expected_f")]
    expected_h: Option<f64>,
    /// Equivalence-class size divisor used when estimating lambda.
    #[arg(long, default_value_t = 1)]
    gamma: usize,
    /// Average the scores over k disjoint folds of the selection rows.
    #[arg(long)]
    kfolds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the selection report JSON here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset name: motivating, robustness, subgraph, imposter,
    /// classification, or ood_csv.
    preset: Option<String>,
    /// Start from a previously echoed configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory for config_echo.json, report.json, report.csv, and
    /// scatter files. Defaults to runs/<preset>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rows sampled per training pool.
    #[arg(long)]
    rows: Option<usize>,
    /// Rows per shifted test table.
    #[arg(long)]
    test_rows: Option<usize>,
    /// Candidate models per graph.
    #[arg(long)]
    models: Option<usize>,
    /// Graphs per size (seeds for the motivating preset).
    #[arg(long)]
    dags: Option<usize>,
    /// Training epoch cap.
    #[arg(long)]
    epochs: Option<usize>,
    /// Graph sizes, repeatable: --n 4 --n 8.
    #[arg(long)]
    n: Vec<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long)]
    kfolds: Option<usize>,
    /// Also draw the selection-versus-test scatter as SVG.
    #[arg(long)]
    svg: bool,
    // Inputs for the ood_csv preset.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    dag: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    holdout_column: Option<String>,
    /// Which tail of the holdout column to hold out: high or low.
    #[arg(long)]
    holdout_side: Option<String>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment run directory containing report.json.
    #[arg(long)]
    run: PathBuf,
    /// Accepted for interface uniformity; summarizing is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

// ── Error plumbing ────────────────────────────────────────────────────────

struct CliError {
    kind: &'static str,
    message: String,
    exit: u8,
}

impl CliError {
    fn usage(message: impl Display) -> CliError {
        CliError {
            kind: "usage",
            message: message.to_string(),
            exit: 1,
        }
    }

    fn runtime(kind: &'static str, message: impl Display) -> CliError {
        CliError {
            kind,
            message: message.to_string(),
            exit: 2,
        }
    }
}

macro_rules! impl_from_error {
    ($type:ty, $kind:literal) => {
        impl From<$type> for CliError {
            fn from(e: $type) -> CliError {
                CliError::runtime($kind, e)
            }
        }
    };
}

impl_from_error!(causal_gate::data::DataError, "data");
impl_from_error!(causal_gate::graph::GraphError, "graph");
impl_from_error!(causal_gate::graph::DagFileError, "graph");
impl_from_error!(causal_gate::scoring::ScoreError, "score");
impl_from_error!(causal_gate::cam::CamError, "select");
impl_from_error!(causal_gate::mlp::MlpError, "model");
impl_from_error!(causal_gate::synth::SynthError, "synth");
impl_from_error!(causal_gate::experiments::ExperimentError, "experiment");
impl_from_error!(std::io::Error, "io");
impl_from_error!(serde_json::Error, "json");

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let line = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("error[usage]: {line}");
            return ExitCode::from(1);
        }
    };

    if let Some(workers) = cli.workers {
        // Only the first initialization wins; later calls are harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message: String = e
                .message
                .lines()
                .collect::<Vec<_>>()
                .join("; ");
            eprintln!("error[{}]: {message}", e.kind);
            ExitCode::from(e.exit)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth {
            command: SynthCommand::Gen(args),
        } => synth_gen(args),
        Command::Train(args) => train(args),
        Command::Score(args) => score(args),
        Command::Select(args) => select(args, false),
        Command::Rank(args) => select(args, true),
        Command::Experiment(args) => experiment(args),
        Command::Report(args) => report(args),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={text:?} is not a valid seed"))),
        Err(_) => Ok(0),
    }
}

fn load_table(csv: &PathBuf, schema: &PathBuf) -> Result<(Table, usize), CliError> {
    let schema = Schema::load(schema)?;
    let loaded = data::load_csv(csv, &schema, MissingPolicy::DropRows)?;
    Ok((loaded.table, loaded.dropped_rows))
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

// ── Subcommands ───────────────────────────────────────────────────────────

fn synth_gen(args: SynthGenArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let dag = synth::random_dag(args.n, seed)?;
    let scm = synth::build_scm(&dag, seed)?;
    let table = scm.sample(args.rows, seed, None)?;

    std::fs::create_dir_all(&args.out)?;
    DagFile::new(dag.clone()).save(&args.out.join("dag.json"))?;
    scm.save(&args.out.join("scm.json"))?;
    table.schema().save(&args.out.join("schema.json"))?;
    data::save_csv(&table, &args.out.join("data.csv"))?;

    println!(
        "generated {} nodes, {} edges, {} rows under {}",
        dag.node_count(),
        dag.edge_count(),
        table.n_rows(),
        args.out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let (table, dropped) = load_table(&args.csv, &args.schema)?;
    let mut config = TrainConfig::default();
    if let Some(epochs) = args.epochs {
        config.max_epochs = epochs;
    }
    let (manifest, models) = experiments::train_pipeline(
        &table,
        &args.target,
        args.models,
        seed,
        &config,
        &SplitSpec {
            seed,
            ..SplitSpec::default()
        },
    )?;
    experiments::save_population(&args.out, &manifest, &models)?;
    if dropped > 0 {
        println!("dropped {dropped} rows with missing cells");
    }
    println!(
        "trained {} {:?} models on {} rows; population saved under {}",
        models.len(),
        manifest.task,
        manifest.split.train.len(),
        args.out.display()
    );
    Ok(())
}

fn score(args: ScoreArgs) -> Result<(), CliError> {
    resolve_seed(args.seed)?;
    let (table, dropped) = load_table(&args.csv, &args.schema)?;
    let dag = DagFile::load(&args.dag)?.dag;
    let report = scoring::log_likelihood(&dag, &table)?;

    let mut value = serde_json::to_value(&report)?;
    if dropped > 0 {
        value["dropped_rows"] = serde_json::json!(dropped);
    }
    if let (Some(target), Some(preds_path)) = (&args.target, &args.preds) {
        let preds = mlp::load_external_predictions(preds_path, table.n_rows())?;
        let mut fits = serde_json::Map::new();
        for vector in &preds {
            let column = prediction_column(&table, target, &vector.values)?;
            let substituted = data::substitute_predictions(&table, target, &column)?;
            let f = scoring::causal_assurance_term(&dag, target, &substituted)?;
            fits.insert(vector.model_id.to_string(), serde_json::json!(f));
        }
        value["target_fit"] = serde_json::json!({ "target": target, "per_model": fits });
    }
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    write_or_print(args.out.as_ref(), &text)
}

/// Converts raw prediction values into a column of the target's kind, using
/// the same strict threshold as selection for binary targets.
fn prediction_column(
    table: &Table,
    target: &str,
    values: &[f64],
) -> Result<data::Column, CliError> {
    let idx = table.require_column(target)?;
    Ok(match table.schema().columns[idx].kind {
        NodeKind::Continuous => data::Column::Continuous(values.to_vec()),
        NodeKind::Discrete(_) => {
            data::Column::Discrete(values.iter().map(|&p| u32::from(p > 0.5)).collect())
        }
    })
}

fn select(args: SelectArgs, print_ranking: bool) -> Result<(), CliError> {
    let (table, _) = load_table(&args.csv, &args.schema)?;
    let dag = DagFile::load(&args.dag)?.dag;
    let seed = resolve_seed(args.seed)?;

    let lambda = match (args.lambda, args.expected_f, args.expected_h) {
        (Some(l), _, _) => LambdaMode::Fixed(l),
        (None, Some(f), Some(h)) => LambdaMode::Estimated {
            expected_f: f,
            expected_h: h,
        },
        _ => LambdaMode::Fixed(1.25),
    };
    let mut config = CamConfig {
        lambda,
        gamma: args.gamma,
        h_direction: HDirection::Minimize,
        k_folds: args.kfolds,
        fold_seed: seed,
    };

    let report = match (&args.models, &args.preds) {
        (Some(dir), None) => {
            let (manifest, models) = experiments::load_population(dir)?;
            set_direction(&mut config, &table, &manifest.target)?;
            experiments::select_from_manifest(&table, &dag, &manifest, &models, &config)?
        }
        (None, Some(preds_path)) => {
            let target = args.target.as_ref().ok_or_else(|| {
                CliError::usage("--preds needs --target to name the predicted column")
            })?;
            let preds = mlp::load_external_predictions(preds_path, table.n_rows())?;
            set_direction(&mut config, &table, target)?;
            causal_gate::cam::select(&preds, &dag, target, &table, &config)?
        }
        (None, None) => {
            return Err(CliError::usage("pass a population with --models or --preds"));
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    if print_ranking {
        print_rank_table(&report);
    } else {
        let best = report.best();
        println!(
            "selected model {} (f {:.6}, {} {:.6}, combined {:.6}) out of {}",
            best.model_id, best.f, report.h_metric, best.h, best.r, report.n_models
        );
    }
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json())?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

/// Selection infers the metric from the target column; the CLI mirrors that
/// here so the config always passes the direction check.
fn set_direction(config: &mut CamConfig, table: &Table, target: &str) -> Result<(), CliError> {
    let idx = table.require_column(target)?;
    config.h_direction = match table.schema().columns[idx].kind {
        NodeKind::Continuous => HDirection::Minimize,
        NodeKind::Discrete(_) => HDirection::Maximize,
    };
    Ok(())
}

fn print_rank_table(report: &SelectionReport) {
    println!(
        "target {} ({}, lambda {:.4}, {} models)",
        report.target, report.h_metric, report.lambda, report.n_models
    );
    println!("rank,model_id,f,h,r");
    let mut rows: Vec<_> = report.models.iter().collect();
    rows.sort_by_key(|m| m.rank_by_r);
    for model in rows {
        println!(
            "{},{},{},{},{}",
            model.rank_by_r, model.model_id, model.f, model.h, model.r
        );
    }
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut spec = match (&args.config, &args.preset) {
        (Some(path), preset) => {
            let spec = ExperimentSpec::load(path)?;
            if let Some(name) = preset {
                let named = Preset::parse(name)
                    .ok_or_else(|| CliError::usage(format!("unknown preset `{name}`")))?;
                if named != spec.preset {
                    return Err(CliError::usage(format!(
                        "preset `{name}` conflicts with `{}` from {}",
                        spec.preset,
                        path.display()
                    )));
                }
            }
            spec
        }
        (None, Some(name)) => {
            let preset = Preset::parse(name)
                .ok_or_else(|| CliError::usage(format!("unknown preset `{name}`")))?;
            ExperimentSpec::preset(preset)
        }
        (None, None) => {
            return Err(CliError::usage("name a preset or pass --config"));
        }
    };

    if let Some(seed) = args.seed {
        spec.seed = seed;
    } else if args.config.is_none() {
        spec.seed = resolve_seed(None)?;
    }
    if let Some(rows) = args.rows {
        spec.n_rows = rows;
    }
    if let Some(rows) = args.test_rows {
        spec.n_test_rows = rows;
    }
    if let Some(models) = args.models {
        spec.n_models = models;
    }
    if let Some(dags) = args.dags {
        spec.n_dags = dags;
    }
    if let Some(epochs) = args.epochs {
        spec.train.max_epochs = epochs;
    }
    if !args.n.is_empty() {
        spec.n_vertices = args.n.clone();
    }
    if let Some(lambda) = args.lambda {
        spec.cam.lambda = LambdaMode::Fixed(lambda);
    }
    if let Some(gamma) = args.gamma {
        spec.cam.gamma = gamma;
    }
    if let Some(kfolds) = args.kfolds {
        spec.cam.k_folds = Some(kfolds);
    }
    if args.svg {
        spec.emit_svg = true;
    }
    if args.csv.is_some() {
        spec.csv = args.csv.clone();
    }
    if args.schema.is_some() {
        spec.schema = args.schema.clone();
    }
    if args.dag.is_some() {
        spec.dag = args.dag.clone();
    }
    if args.target.is_some() {
        spec.target = args.target.clone();
    }
    if args.holdout_column.is_some() {
        spec.holdout_column = args.holdout_column.clone();
    }
    if let Some(side) = &args.holdout_side {
        spec.holdout_side = match side.as_str() {
            "high" => HoldoutSide::High,
            "low" => HoldoutSide::Low,
            other => {
                return Err(CliError::usage(format!(
                    "holdout side must be `high` or `low`, got `{other}`"
                )))
            }
        };
    }
    if let Some(fraction) = args.holdout_fraction {
        spec.holdout_fraction = fraction;
    }

    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(spec.preset.name()));
    let outcome = experiments::run(&spec, &out_dir)?;
    println!("preset {} finished; artifacts under {}", spec.preset, out_dir.display());
    summarize(&outcome.report);
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    resolve_seed(args.seed)?;
    let path = args.run.join("report.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::runtime("io", format!("{}: {e}", path.display())))?;
    let report: PresetReport = serde_json::from_str(&text)?;
    println!("run directory {}", args.run.display());
    summarize(&report);
    Ok(())
}

fn summarize(report: &PresetReport) {
    match report {
        PresetReport::Motivating(r) => {
            println!(
                "motivating: {}/{} seeds rank-correlate better with shifted error \
                 (mean spearman {:.4} vs {:.4})",
                (r.frac_cam_correlates_better * r.n_units as f64).round() as usize,
                r.n_units,
                r.mean_spearman_cam,
                r.mean_spearman_stat
            );
        }
        PresetReport::Robustness(r) | PresetReport::Classification(r) => {
            let a = &r.aggregate;
            println!(
                "{} units: combined-score top decile at least matches the {} baseline in \
                 {:.0}% (mean top-decile gain {:+.6}); mean inversion count {:.4} vs {:.4}",
                a.n_units,
                match r.metric {
                    causal_gate::eval::TestMetricKind::Mse => "MSE",
                    causal_gate::eval::TestMetricKind::Auroc => "AUROC",
                },
                a.frac_cam_top_at_least_stat * 100.0,
                a.mean_delta_top10,
                a.mean_ic_cam,
                a.mean_ic_stat
            );
        }
        PresetReport::Subgraph(r) => {
            for level in &r.per_level {
                println!(
                    "keep fraction {:.2}: mean selection penalty {:+.6} over {} graphs",
                    level.level, level.mean_delta, level.n_units
                );
            }
        }
        PresetReport::Imposter(r) => {
            for level in &r.per_level {
                println!(
                    "{} edits: mean selection penalty {:+.6} over {} graphs",
                    level.level as usize, level.mean_delta, level.n_units
                );
            }
        }
        PresetReport::OodCsv(r) => {
            println!(
                "target {} holding out the {:?} tail of {} ({} test rows): \
                 best model {}, top-decile gain {:+.6}",
                r.target,
                r.holdout_side,
                r.holdout_column,
                r.n_test_rows,
                r.selection.best_model_id,
                r.report.delta_mse
            );
        }
    }
}
