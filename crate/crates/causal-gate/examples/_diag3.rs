use causal_gate::experiments::{self, ExperimentSpec, Preset, PresetReport};

fn run(spec: &ExperimentSpec, tag: &str) -> Result<PresetReport, Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("diag3-{tag}"));
    Ok(experiments::run(spec, &dir)?.report)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t0 = std::time::Instant::now();

    // criterion 6 scale: n in {4,8}, 20 dags total, 25 models
    let mut spec = ExperimentSpec::preset(Preset::Robustness);
    spec.seed = 7;
    spec.n_vertices = vec![4, 8];
    spec.n_dags = 10;
    let report = run(&spec, "rob")?;
    if let PresetReport::Robustness(r) = report {
        let a = &r.aggregate;
        println!(
            "C6 robustness: frac={:.2} mean_d10={:+.4} ic_cam={:.4} ic_stat={:.4}  [{:.0}s]",
            a.frac_cam_top_at_least_stat,
            a.mean_delta_top10,
            a.mean_ic_cam,
            a.mean_ic_stat,
            t0.elapsed().as_secs_f64()
        );
    }

    // criterion 8 scale: mutations {1,2,4}, 20 dags, n=8
    let t1 = std::time::Instant::now();
    let mut spec = ExperimentSpec::preset(Preset::Imposter);
    spec.seed = 7;
    spec.n_vertices = vec![8];
    spec.n_dags = 20;
    spec.mutation_counts = vec![1, 2, 4];
    let report = run(&spec, "imp")?;
    if let PresetReport::Imposter(r) = report {
        for l in &r.per_level {
            println!(
                "C8 imposter level {}: mean_delta {:+.5} over {} units",
                l.level, l.mean_delta, l.n_units
            );
        }
        println!("  [{:.0}s]", t1.elapsed().as_secs_f64());
    }

    // criterion 9 scale: 10 dags, n in {4,8}, 25 binary models
    let t2 = std::time::Instant::now();
    let mut spec = ExperimentSpec::preset(Preset::Classification);
    spec.seed = 7;
    spec.n_vertices = vec![4, 8];
    spec.n_dags = 5;
    let report = run(&spec, "cls")?;
    if let PresetReport::Classification(r) = report {
        let a = &r.aggregate;
        println!(
            "C9 classification: frac={:.2} mean_d10={:+.4} ic_cam={:.4} ic_stat={:.4}  [{:.0}s]",
            a.frac_cam_top_at_least_stat,
            a.mean_delta_top10,
            a.mean_ic_cam,
            a.mean_ic_stat,
            t2.elapsed().as_secs_f64()
        );
    }

    // criterion 7 scale: 20 seeds, 50 models on the fixed collider
    let t3 = std::time::Instant::now();
    let mut spec = ExperimentSpec::preset(Preset::Motivating);
    spec.seed = 7;
    spec.n_dags = 20;
    spec.n_models = 50;
    let report = run(&spec, "mot")?;
    if let PresetReport::Motivating(r) = report {
        println!(
            "C7 motivating: frac={:.2} mean_sp_cam={:+.3} mean_sp_stat={:+.3}  [{:.0}s]",
            r.frac_cam_correlates_better,
            r.mean_spearman_cam,
            r.mean_spearman_stat,
            t3.elapsed().as_secs_f64()
        );
    }

    println!("total [{:.0}s]", t0.elapsed().as_secs_f64());
    Ok(())
}
