//! Distribution shift from real tabular data without a simulator: hold out
//! one extreme tail of a column as the test set, train and select on the
//! remainder, and check the chosen model on the held-out tail.
//!
//! Run with `cargo run --example ood_holdout`.

use causal_gate::data::{self, Column, HoldoutSide};
use causal_gate::experiments::{self, ExperimentSpec, Preset, PresetReport};
use causal_gate::graph::DagFile;
use causal_gate::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Stand in for a real dataset with a synthesized CSV on disk.
    let dir = std::env::temp_dir().join("causal-gate-ood-example");
    std::fs::create_dir_all(&dir)?;
    let dag = synth::random_dag(4, 12)?;
    let scm = synth::build_scm(&dag, 12)?;
    let table = scm.sample(3_000, 9, None)?;
    let target = dag
        .name(synth::random_connected_target(&dag, 4).expect("graph has edges"))
        .to_string();

    let csv = dir.join("data.csv");
    let schema = dir.join("schema.json");
    let dag_file = dir.join("dag.json");
    data::save_csv(&table, &csv)?;
    table.schema().save(&schema)?;
    DagFile::new(dag.clone()).save(&dag_file)?;

    // Peek at the raw holdout first.
    let (held, rest) = data::ood_holdout(&table, &target, HoldoutSide::High, 0.2)?;
    let held_min = match held.column(held.require_column(&target)?) {
        Column::Continuous(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        Column::Discrete(_) => unreachable!(),
    };
    println!(
        "holding out the top 20% of `{target}`: {} test rows (all >= {:.3}), {} remain",
        held.n_rows(),
        held_min,
        rest.n_rows()
    );

    let mut spec = ExperimentSpec::preset(Preset::OodCsv);
    spec.csv = Some(csv);
    spec.schema = Some(schema);
    spec.dag = Some(dag_file);
    spec.target = Some(target.clone());
    spec.n_models = 6;
    spec.train.max_epochs = 6;

    let outcome = experiments::run(&spec, &dir.join("run"))?;
    let PresetReport::OodCsv(report) = &outcome.report else {
        unreachable!("ood preset emits an ood report");
    };
    println!(
        "\nselected model {} of {}; top-decile shifted-test gain over the \
         error-only ranking: {:+.6}",
        report.selection.best_model_id,
        report.selection.n_models,
        report.report.delta_mse
    );
    println!("full artifacts under {}", outcome.paths.dir.display());
    Ok(())
}
