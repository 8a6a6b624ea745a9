//! A scaled-down version of the main benchmark: several random graphs per
//! size, a trained population per graph, and a shifted test set. Reports
//! whether the combined score's top decile beats the error-only top decile
//! and how faithfully each ranking orders true shifted-test performance.
//!
//! Run with `cargo run --release --example robustness_sweep` (a few
//! minutes; the default debug profile also works but is slower).

use causal_gate::experiments::{self, ExperimentSpec, Preset, PresetReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = ExperimentSpec::preset(Preset::Robustness);
    spec.n_vertices = vec![4, 6];
    spec.n_dags = 5;
    spec.n_models = 10;
    spec.n_rows = 3_000;
    spec.n_test_rows = 1_000;
    spec.train.max_epochs = 8;
    spec.emit_svg = true;

    let dir = std::env::temp_dir().join("causal-gate-robustness-example");
    let outcome = experiments::run(&spec, &dir)?;
    let PresetReport::Robustness(report) = &outcome.report else {
        unreachable!("robustness preset emits a comparison report");
    };

    println!("per-graph comparison (positive deltas favor the combined score):\n");
    println!(
        "{:>6} {:>5} {:>8} {:>14} {:>10} {:>10}",
        "nodes", "graph", "target", "top-10% delta", "ic (comb)", "ic (mse)"
    );
    for unit in &report.units {
        println!(
            "{:>6} {:>5} {:>8} {:>+14.6} {:>10.4} {:>10.4}",
            unit.n_vertices,
            unit.dag_index,
            unit.target,
            unit.report.delta_mse,
            unit.report.ic_cam,
            unit.report.ic_mse
        );
    }
    let a = &report.aggregate;
    println!(
        "\nacross {} graphs: combined top decile at least matches the error-only \
         top decile in {:.0}%; mean inversion count {:.4} (combined) vs {:.4} (error)",
        a.n_units,
        a.frac_cam_top_at_least_stat * 100.0,
        a.mean_ic_cam,
        a.mean_ic_stat
    );
    println!("scatter plot: {}", outcome.paths.scatter_svg.expect("svg requested").display());
    Ok(())
}
