//! The question behind the combined score: models that look alike on one
//! selection split can behave very differently once the data distribution
//! shifts, so does folding in graph fit predict shifted error better than
//! selection error alone? This runs the motivating preset on a two-parent
//! collider and reports the rank correlations both ways, per seed and
//! averaged. The answer depends on the population: when many candidates
//! collapse to near-constant predictors, the graph term rewards exactly
//! those models (a constant is perfectly explained by its parents) and the
//! combined ranking suffers; see the robustness_sweep example for the same
//! comparison on random graphs.
//!
//! Run with `cargo run --example motivating_example` (about a minute).

use causal_gate::experiments::{self, ExperimentSpec, Preset, PresetReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = ExperimentSpec::preset(Preset::Motivating);
    spec.n_dags = 6;
    spec.n_models = 10;
    spec.n_rows = 3_000;
    spec.n_test_rows = 1_000;
    spec.train.max_epochs = 8;

    let dir = std::env::temp_dir().join("causal-gate-motivating-example");
    let outcome = experiments::run(&spec, &dir)?;
    let PresetReport::Motivating(report) = &outcome.report else {
        unreachable!("motivating preset emits a motivating report");
    };

    println!("rank correlation with mean error over 9 shifted datasets, per seed:\n");
    println!("{:>5} {:>14} {:>14} {:>8}", "seed", "combined score", "error only", "winner");
    for unit in &report.units {
        println!(
            "{:>5} {:>14.4} {:>14.4} {:>8}",
            unit.seed_index,
            unit.spearman_cam,
            unit.spearman_stat,
            if unit.spearman_cam > unit.spearman_stat { "combined" } else { "error" }
        );
    }
    println!(
        "\ncombined score correlates better in {:.0}% of seeds \
         (mean spearman {:.4} vs {:.4})",
        report.frac_cam_correlates_better * 100.0,
        report.mean_spearman_cam,
        report.mean_spearman_stat
    );
    if report.mean_spearman_cam < report.mean_spearman_stat {
        println!(
            "here the error-only ranking wins: under these training settings \
             part of the population degenerates toward constant predictions, \
             and the graph term ranks those models first"
        );
    }
    println!("full artifacts under {}", dir.display());
    Ok(())
}
