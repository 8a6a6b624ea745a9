//! The core workflow: sample data from a known graph, train a population of
//! networks that predict one node from the others, and pick a model by the
//! combined score, graph fit plus validation error, instead of validation
//! error alone.
//!
//! Run with `cargo run --example select_with_cam`.

use causal_gate::cam::{self, CamConfig};
use causal_gate::data::{self, Scaler, SplitSpec};
use causal_gate::mlp::{self, Task, TrainConfig};
use causal_gate::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dag = synth::random_dag(4, 21)?;
    let scm = synth::build_scm(&dag, 21)?;
    let table = scm.sample(4_000, 1, None)?;
    let target = dag
        .name(synth::random_connected_target(&dag, 2).expect("graph has edges"))
        .to_string();
    println!("predicting `{target}` on a {}-node graph", dag.node_count());

    let (split, _) = data::split(&table, &SplitSpec::default())?;
    let scaler = Scaler::fit(&split.train);
    let train = scaler.apply(&split.train);
    let val = scaler.apply(&split.val);
    let sel = scaler.apply(&split.sel);

    let config = TrainConfig {
        max_epochs: 8,
        ..TrainConfig::default()
    };
    let models = mlp::train_population(8, 500, Task::Regression, &train, &val, &target, &config)?;
    println!("trained {} models on {} rows", models.len(), train.n_rows());

    let report = cam::select(&models, &dag, &target, &sel, &CamConfig::default())?;
    println!(
        "\nlambda {:.2}, metric {}; ranking on the {}-row selection split:",
        report.lambda, report.h_metric, report.n_rows
    );
    println!("{:>4} {:>8} {:>12} {:>10} {:>12}", "rank", "model", "f", "h", "r");
    let mut rows = report.models.clone();
    rows.sort_by_key(|m| m.rank_by_r);
    for m in &rows {
        let marker = if m.model_id == report.best_model_id { "  <- selected" } else { "" };
        println!(
            "{:>4} {:>8} {:>12.3} {:>10.5} {:>12.3}{marker}",
            m.rank_by_r, m.model_id, m.f, m.h, m.r
        );
    }

    let by_h = rows.iter().min_by_key(|m| m.rank_by_h).expect("models exist");
    if by_h.model_id != report.best_model_id {
        println!(
            "\nvalidation error alone would have picked model {} instead",
            by_h.model_id
        );
    } else {
        println!("\nthe combined score and the error metric agree here");
    }
    Ok(())
}
