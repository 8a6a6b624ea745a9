//! Selection with a binary target: the target column becomes a Bernoulli
//! label through a sigmoid, classifiers are ranked by AUROC, and the
//! combined score trades graph fit against that AUROC (higher is better, so
//! the score subtracts it).
//!
//! Run with `cargo run --example classification_selection`.

use causal_gate::cam::{self, CamConfig, HDirection, LambdaMode};
use causal_gate::data::{self, Scaler, SplitSpec};
use causal_gate::mlp::{self, Task, TrainConfig};
use causal_gate::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dag = synth::random_dag(4, 17)?;
    let scm = synth::build_scm(&dag, 17)?;
    let continuous = scm.sample(4_000, 3, None)?;

    let target = dag
        .name(synth::random_connected_target(&dag, 1).expect("graph has edges"))
        .to_string();
    let table = synth::bernoulli_target(&continuous, &target, 19)?;
    let dag = synth::binarize_target_dag(&dag, &target)?;
    let positives = table.discrete(table.require_column(&target)?)?;
    println!(
        "`{target}` became a binary label ({:.1}% positive)",
        positives.iter().filter(|&&c| c == 1).count() as f64 * 100.0 / positives.len() as f64
    );

    let (split, _) = data::split(&table, &SplitSpec::default())?;
    let scaler = Scaler::fit(&split.train);
    let train = scaler.apply(&split.train);
    let val = scaler.apply(&split.val);
    let sel = scaler.apply(&split.sel);

    let config = TrainConfig {
        max_epochs: 8,
        ..TrainConfig::default()
    };
    let models = mlp::train_population(6, 900, Task::Binary, &train, &val, &target, &config)?;

    // The graph term grows with the number of selection rows while AUROC
    // stays in [0, 1], so the weight has to bring them onto the same scale.
    let cam_config = CamConfig {
        h_direction: HDirection::Maximize,
        lambda: LambdaMode::Fixed(1.0 / sel.n_rows() as f64),
        ..CamConfig::default()
    };
    let report = cam::select(&models, &dag, &target, &sel, &cam_config)?;
    println!("\nranking by combined score (h is AUROC, larger is better):");
    println!("{:>4} {:>8} {:>12} {:>10} {:>12}", "rank", "model", "f", "auroc", "r");
    let mut rows = report.models.clone();
    rows.sort_by_key(|m| m.rank_by_r);
    for m in &rows {
        let marker = if m.model_id == report.best_model_id { "  <- selected" } else { "" };
        println!(
            "{:>4} {:>8} {:>12.3} {:>10.5} {:>12.3}{marker}",
            m.rank_by_r, m.model_id, m.f, m.h, m.r
        );
    }
    Ok(())
}
