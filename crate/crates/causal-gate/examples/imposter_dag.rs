//! What happens when the graph is wrong rather than incomplete? This
//! mutates the true graph around the target, reversing incident edges or
//! adding spurious parents, and measures how the selection degrades as the
//! number of edits grows.
//!
//! Run with `cargo run --example imposter_dag`.

use causal_gate::experiments::{self, ExperimentSpec, Preset, PresetReport};
use causal_gate::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Show one imposter explicitly before running the sweep.
    let dag = synth::random_dag(5, 2)?;
    let target = synth::random_connected_target(&dag, 0).expect("graph has edges");
    let imposter = dag.make_imposter(target, 2, 9)?;
    println!(
        "true graph has {} edges; a 2-edit imposter around `{}` differs by \
         Hamming distance {}",
        dag.edge_count(),
        dag.name(target),
        dag.hamming_distance(&imposter)?
    );

    let mut spec = ExperimentSpec::preset(Preset::Imposter);
    spec.n_vertices = vec![5];
    spec.n_dags = 4;
    spec.n_models = 8;
    spec.n_rows = 2_000;
    spec.n_test_rows = 800;
    spec.mutation_counts = vec![0, 1, 2, 4];
    spec.train.max_epochs = 6;

    let dir = std::env::temp_dir().join("causal-gate-imposter-example");
    let outcome = experiments::run(&spec, &dir)?;
    let PresetReport::Imposter(report) = &outcome.report else {
        unreachable!("imposter preset emits a degradation report");
    };

    println!("\nmean shifted-test penalty versus selecting with the true graph:\n");
    println!("{:>6} {:>8} {:>14}", "edits", "graphs", "mean penalty");
    for level in &report.per_level {
        println!(
            "{:>6} {:>8} {:>+14.6}",
            level.level as usize, level.n_units, level.mean_delta
        );
    }
    println!("\nfull artifacts under {}", dir.display());
    Ok(())
}
