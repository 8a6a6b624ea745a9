//! Temporary diagnostic, not part of the example set.

use causal_gate::cam::{self, CamConfig, SelectionModel};
use causal_gate::data::{self, Scaler, SplitSpec, Table};
use causal_gate::eval;
use causal_gate::mlp::{self, Task, TrainConfig};
use causal_gate::seeding::derive_seed;
use causal_gate::synth::{self, FunctionKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_vertices = 4usize;
    for unit in 0..10u64 {
        let sub = |tag: &str| derive_seed(0, tag, unit);
        let dag = synth::random_dag(n_vertices, sub("dag"))?;
        let scm = synth::build_scm(&dag, sub("scm"))?;
        let target_index = synth::random_connected_target(&dag, sub("target")).unwrap();
        let target = dag.name(target_index).to_string();
        let kind = scm.kinds()[target_index];
        let n_parents = dag.parents(target_index).len();

        let pool = scm.sample(10_000, sub("base-data"), None)?;
        let perturbation_nodes: Vec<usize> = {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sub("shift"));
            rand::seq::index::sample(&mut rng, n_vertices, 1).into_iter().collect()
        };
        let test = scm.sample(
            2_000,
            sub("shift-data"),
            Some(&synth::Perturbation {
                nodes: perturbation_nodes.iter().copied().collect(),
                noise: synth::Gaussian::new(1.0, 2.0),
            }),
        )?;

        let split_spec = SplitSpec { seed: sub("split"), ..SplitSpec::default() };
        let (split, _) = data::split(&pool, &split_spec)?;
        let scaler = Scaler::fit_features(&split.train, &target)?;
        let mut train_table = scaler.apply(&split.train);
        let mut val_table = scaler.apply(&split.val);
        let mut sel = scaler.apply(&split.sel);
        let mut test: Table = scaler.apply(&test);

        // z-score the target from train stats
        let tidx = train_table.require_column(&target)?;
        let tcol = train_table.continuous(tidx)?;
        let mean = tcol.iter().sum::<f64>() / tcol.len() as f64;
        let var = tcol.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tcol.len() as f64;
        let std = var.sqrt().max(1e-12);
        for t in [&mut train_table, &mut val_table, &mut sel, &mut test] {
            let idx = t.require_column(&target)?;
            let col = data::Column::Continuous(
                t.continuous(idx)?.iter().map(|v| (v - mean) / std).collect(),
            );
            *t = data::substitute_predictions(t, &target, &col)?;
        }

        let models = mlp::train_population(
            25,
            sub("models"),
            Task::Regression,
            &train_table,
            &val_table,
            &target,
            &TrainConfig::default(),
        )?;
        let cam_config = CamConfig { fold_seed: sub("folds"), ..CamConfig::default() };
        let selection = cam::select(&models, &dag, &target, &sel, &cam_config)?;
        let per_model = eval::perturbed_average(&models, std::slice::from_ref(&test), &target)?;

        let f: Vec<f64> = selection.models.iter().map(|m| m.f).collect();
        let h: Vec<f64> = selection.models.iter().map(|m| m.h).collect();
        let t: Vec<f64> = selection
            .models
            .iter()
            .map(|m| per_model[m.model_id])
            .collect();
        let sp_f = eval::spearman(&f, &t).unwrap_or(f64::NAN);
        let sp_h = eval::spearman(&h, &t).unwrap_or(f64::NAN);
        let shifted_is_ancestor = perturbation_nodes
            .iter()
            .any(|&v| v == target_index || is_ancestor(&dag, v, target_index));
        println!(
            "unit {unit}: target {target} kind {:?} parents {n_parents} shift_node {:?} upstream {}  sp(f,test) {sp_f:+.3}  sp(h,test) {sp_h:+.3}",
            kind, perturbation_nodes, shifted_is_ancestor
        );
        if matches!(kind, FunctionKind::Exponential) || unit < 3 {
            let mut rows: Vec<(usize, f64, f64, f64)> = selection
                .models
                .iter()
                .map(|m| (m.model_id, m.f, m.h, per_model[m.model_id]))
                .collect();
            rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            for (id, fv, hv, tv) in rows.iter().take(4) {
                println!("    best-f  id {id:>2} f {fv:>12.2} h {hv:>10.4} test {tv:>10.4}");
            }
            for (id, fv, hv, tv) in rows.iter().rev().take(2) {
                println!("    worst-f id {id:>2} f {fv:>12.2} h {hv:>10.4} test {tv:>10.4}");
            }
        }
    }
    Ok(())
}

fn is_ancestor(dag: &causal_gate::graph::Dag, a: usize, b: usize) -> bool {
    let mut stack = vec![a];
    let mut seen = vec![false; dag.node_count()];
    while let Some(v) = stack.pop() {
        if v == b {
            return true;
        }
        for &(s, d) in dag.edges() {
            if s == v && !seen[d] {
                seen[d] = true;
                stack.push(d);
            }
        }
    }
    false
}
