//! Temporary diagnostic, not part of the example set.

use causal_gate::cam::{self, CamConfig, SelectionModel};
use causal_gate::data::{self, Column, Scaler, SplitSpec, Table};
use causal_gate::eval;
use causal_gate::graph::Dag;
use causal_gate::mlp::{self, Task, TrainConfig};
use causal_gate::seeding::derive_seed;
use causal_gate::synth;
use std::collections::BTreeMap;

fn unscale_target(scaled: &Table, raw: &Table, target: &str) -> Table {
    let idx = raw.require_column(target).unwrap();
    let col = Column::Continuous(raw.continuous(idx).unwrap().to_vec());
    data::substitute_predictions(scaled, target, &col).unwrap()
}

fn run_unit(
    seed: u64,
    n_models: usize,
    config: &TrainConfig,
    scale_target: bool,
    linear_only: bool,
) -> (f64, f64, usize) {
    let collider = Dag::all_continuous(
        vec!["x1".into(), "x2".into(), "y".into()],
        vec![(0, 2), (1, 2)],
    )
    .unwrap();
    let target = "y";
    let sub = |tag: &str| derive_seed(0, tag, seed);

    let scm = if linear_only {
        use causal_gate::synth::{FunctionKind, Gaussian, Scm};
        Scm::new(
            collider.clone(),
            vec![0, 1, 2],
            vec![FunctionKind::Linear; 3],
            vec![-1.0, 1.0, -1.0],
            vec![Gaussian::standard(); 3],
        )
        .unwrap()
    } else {
        synth::build_scm(&collider, sub("scm")).unwrap()
    };
    let pool = scm.sample(10_000, sub("base-data"), None).unwrap();
    let split_spec = SplitSpec {
        seed: sub("split"),
        ..SplitSpec::default()
    };
    let (split, _) = data::split(&pool, &split_spec).unwrap();
    let scaler = Scaler::fit(&split.train);
    let mut train_table = scaler.apply(&split.train);
    let mut val_table = scaler.apply(&split.val);
    let mut sel = scaler.apply(&split.sel);
    if !scale_target {
        train_table = unscale_target(&train_table, &split.train, target);
        val_table = unscale_target(&val_table, &split.val, target);
        sel = unscale_target(&sel, &split.sel, target);
    }

    let models = mlp::train_population(
        n_models,
        sub("models"),
        Task::Regression,
        &train_table,
        &val_table,
        target,
        config,
    )
    .unwrap();

    let selection = cam::select(&models, &collider, target, &sel, &CamConfig::default()).unwrap();

    let suite: Vec<Table> = scm
        .perturbation_grid(2_000, sub("grid"))
        .unwrap()
        .iter()
        .map(|t| {
            let s = scaler.apply(t);
            if scale_target {
                s
            } else {
                unscale_target(&s, t, target)
            }
        })
        .collect();
    let per_model = eval::perturbed_average(&models, &suite, target).unwrap();
    let test_metric: BTreeMap<usize, f64> = models
        .iter()
        .enumerate()
        .map(|(i, m)| (SelectionModel::model_id(m), per_model[i]))
        .collect();

    let r_values: Vec<f64> = selection.models.iter().map(|m| m.r).collect();
    let h_values: Vec<f64> = selection.models.iter().map(|m| m.h).collect();
    let shifted: Vec<f64> = selection
        .models
        .iter()
        .map(|m| test_metric[&m.model_id])
        .collect();
    let sp_cam = eval::spearman(&r_values, &shifted).unwrap();
    let sp_stat = eval::spearman(&h_values, &shifted).unwrap();

    let floor = selection
        .models
        .iter()
        .filter(|m| {
            let n = sel.n_rows() as f64;
            let per_row = m.f / n;
            per_row < 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 1e-10).ln()
        })
        .count();
    (sp_cam, sp_stat, floor)
}

fn main() {
    let base = TrainConfig::default();
    let configs: Vec<(&str, TrainConfig, bool, bool)> = vec![
        ("linear raw-y    batch32 pat3", base.clone(), false, true),
        ("linear scaled-y batch32 pat3", base.clone(), true, true),
        ("mixed  raw-y    batch32 pat3", base.clone(), false, false),
    ];
    for (name, config, scale_target, linear_only) in &configs {
        let mut wins = 0;
        let mut sum_cam = 0.0;
        let mut sum_stat = 0.0;
        let mut floors = 0;
        let seeds = 20;
        let n_models = 50;
        for s in 0..seeds {
            let (c, st, fl) = run_unit(s, n_models, config, *scale_target, *linear_only);
            if c > st {
                wins += 1;
            }
            sum_cam += c;
            sum_stat += st;
            floors += fl;
        }
        println!(
            "{name}: wins {wins}/{seeds}  mean sp_cam {:+.3}  mean sp_stat {:+.3}  floored {floors}/{}",
            sum_cam / seeds as f64,
            sum_stat / seeds as f64,
            seeds as usize * n_models
        );
    }
}

fn ols_residual_var(yv: &[f64], x1: &[f64], x2: &[f64]) -> f64 {
    let n = yv.len() as f64;
    // design X = [1, x1, x2]; solve (X'X) b = X'y with a tiny 3x3 solver
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for i in 0..yv.len() {
        let row = [1.0, x1[i], x2[i]];
        for a in 0..3 {
            for b in 0..3 {
                xtx[a][b] += row[a] * row[b];
            }
            xty[a] += row[a] * yv[i];
        }
    }
    // gaussian elimination
    let mut m = [[0.0f64; 4]; 3];
    for a in 0..3 {
        m[a][..3].copy_from_slice(&xtx[a]);
        m[a][3] = xty[a];
    }
    for c in 0..3 {
        let piv = (c..3).max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap()).unwrap();
        m.swap(c, piv);
        for r in 0..3 {
            if r != c {
                let factor = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= factor * m[c][k];
                }
            }
        }
    }
    let b = [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]];
    let mut ss = 0.0;
    for i in 0..yv.len() {
        let fit = b[0] + b[1] * x1[i] + b[2] * x2[i];
        ss += (yv[i] - fit) * (yv[i] - fit);
    }
    ss / n
}
