//! Logistic-regression experiment: SGD step-size sweep on a LIBSVM
//! dataset (or a built-in synthetic problem when no path is given),
//! emitting snapshot IW-ELBOs per (family, M, step size, seed).

use super::sid;
use crate::config::{family_name, ExperimentConfig};
use crate::output::ResultRow;
use anyhow::{bail, Result};
use iwvi_core::elliptical::sample_noise;
use iwvi_core::iwvi::{iw_elbo, iw_elbo_grad};
use iwvi_core::models::{logreg_target, parse_libsvm, LogRegTarget};
use iwvi_core::optim::{init_params, sgd_maximize, step_size_sweep};
use iwvi_core::rng::RngStream;

/// Missing dataset file: surfaced as exit code 2 by `main`.
#[derive(Debug)]
pub struct MissingDataset(pub String);

impl std::fmt::Display for MissingDataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "dataset file not found: {}", self.0)
    }
}

impl std::error::Error for MissingDataset {}

pub const SYNTHETIC_N: usize = 100;
pub const SYNTHETIC_D: usize = 20;

/// Synthetic problem: dense standard-normal features, labels from a
/// logistic model with standard-normal true weights.
fn synthetic(seed: u64) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let mut rng = RngStream::new(seed, 0xda7a);
    let w_star: Vec<f64> = (0..SYNTHETIC_D).map(|_| rng.normal()).collect();
    let mut features = Vec::with_capacity(SYNTHETIC_N);
    let mut labels = Vec::with_capacity(SYNTHETIC_N);
    for _ in 0..SYNTHETIC_N {
        let x: Vec<f64> = (0..SYNTHETIC_D).map(|_| rng.normal()).collect();
        let margin: f64 = x.iter().zip(&w_star).map(|(a, b)| a * b).sum();
        let p = 1.0 / (1.0 + (-margin).exp());
        labels.push(if rng.uniform() < p { 1.0 } else { -1.0 });
        features.push(x.into_iter().enumerate().collect());
    }
    (features, labels)
}

/// Column standardization and optional bias column. Standardization works
/// on the densified columns (zeros included); constant columns are
/// centered only. The bias column is never standardized.
fn preprocess(
    features: Vec<Vec<(usize, f64)>>,
    dim: usize,
    standardize: bool,
    add_bias: bool,
) -> (Vec<Vec<(usize, f64)>>, usize) {
    let n = features.len();
    let mut dense = vec![vec![0.0; dim]; n];
    for (row, sparse) in dense.iter_mut().zip(&features) {
        for &(j, x) in sparse {
            row[j] = x;
        }
    }
    if standardize {
        for j in 0..dim {
            let mean = dense.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var =
                dense.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            for row in &mut dense {
                row[j] -= mean;
                if sd > 0.0 {
                    row[j] /= sd;
                }
            }
        }
    }
    let out_dim = if add_bias { dim + 1 } else { dim };
    let sparse = dense
        .into_iter()
        .map(|row| {
            let mut r: Vec<(usize, f64)> = row
                .into_iter()
                .enumerate()
                .filter(|&(_, x)| x != 0.0)
                .collect();
            if add_bias {
                r.push((dim, 1.0));
            }
            r
        })
        .collect();
    (sparse, out_dim)
}

fn load(cfg: &ExperimentConfig) -> Result<LogRegTarget> {
    let (features, labels, dim) = match &cfg.dataset_path {
        Some(path) => {
            if !std::path::Path::new(path).exists() {
                return Err(MissingDataset(path.clone()).into());
            }
            let text = std::fs::read_to_string(path)?;
            let data = parse_libsvm(&text)?;
            (data.features, data.labels, data.dim)
        }
        None => {
            let (features, labels) = synthetic(cfg.seed);
            (features, labels, SYNTHETIC_D)
        }
    };
    let (features, dim) = preprocess(features, dim, cfg.standardize, cfg.add_bias);
    Ok(logreg_target(features, labels, dim)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if let Some(&worst) = cfg.snapshot_at.iter().max() {
        if worst > cfg.sgd_iters {
            bail!("snapshot_at iteration {worst} exceeds sgd_iters {}", cfg.sgd_iters);
        }
    }
    let model = load(cfg)?;
    let dim = iwvi_core::models::TargetModel::dim(&model);
    let families = cfg.families();
    let m_set = cfg.m_set_resolved();
    let steps = cfg.step_grid_resolved();
    let seeds = cfg.sweep_seeds_resolved();

    let mut run_cell = |family, m: usize, step: f64, seed: u64| -> iwvi_core::Result<Vec<(usize, f64)>> {
        let fi = families.iter().position(|&f| f == family).unwrap_or(0);
        let mi = m_set.iter().position(|&x| x == m).unwrap_or(0);
        let si = steps.iter().position(|&s| s == step).unwrap_or(0);
        let layout = cfg.layout(family, dim);
        let w0 = init_params(&layout, cfg.scale0)?;
        let mut rng = RngStream::new(seed, sid(si, fi, mi, 4));
        let layout_g = layout.clone();
        let mut grad_at = |w: &[f64], rng: &mut RngStream| {
            let params = layout_g.unflatten(w)?;
            let tuple: iwvi_core::Result<Vec<_>> =
                (0..m).map(|_| sample_noise(&params.radial, rng)).collect();
            iw_elbo_grad(&params, &model, &[tuple?], &layout_g)
        };
        let mut snapshot_value = |w: &[f64], rng: &mut RngStream| {
            let params = layout.unflatten(w)?;
            Ok(iw_elbo(&params, &model, m, cfg.n_eval_batches, rng)?.value)
        };
        let out = sgd_maximize(
            &mut grad_at,
            &mut snapshot_value,
            &w0,
            step,
            cfg.sgd_iters,
            &cfg.snapshot_at,
            &mut rng,
        )?;
        Ok(out.snapshots)
    };

    let cells = step_size_sweep(
        &families,
        &m_set,
        &steps,
        &seeds,
        &cfg.snapshot_at,
        &mut run_cell,
    );
    let rows = cells
        .into_iter()
        .map(|c| {
            let rep = seeds.iter().position(|&s| s == c.seed).unwrap_or(0);
            ResultRow {
                experiment: "logreg",
                family: family_name(c.family).to_string(),
                m: c.m,
                repetition: rep,
                metric: "iw_elbo_snapshot",
                value: c.value,
                stderr: 0.0,
                extra: format!("step={};iter={}", c.step_size, c.iteration),
            }
        })
        .collect();
    Ok(rows)
}
