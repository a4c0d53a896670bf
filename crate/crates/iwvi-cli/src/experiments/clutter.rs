//! Clutter experiment: per repetition draw a latent location from the
//! prior, simulate inlier/outlier observations, compute the exact
//! posterior by enumeration, optimize each family at each M, and emit
//! the KL gap plus the SNIS second-moment error against the oracle.

use super::{optimize, second_moment_error, sid};
use crate::config::{family_name, ExperimentConfig};
use crate::output::ResultRow;
use anyhow::Result;
use iwvi_core::iwvi::gap_diagnostics;
use iwvi_core::models::{
    clutter_target, TargetModel, CLUTTER_INLIER_PROB, CLUTTER_OUTLIER_VAR, CLUTTER_PRIOR_VAR,
};
use iwvi_core::rng::RngStream;

/// Draw one synthetic instance from the model's own generative process.
pub fn generate_instance(d: usize, n_obs: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let z_star: Vec<f64> = (0..d)
        .map(|_| CLUTTER_PRIOR_VAR.sqrt() * rng.normal())
        .collect();
    (0..n_obs)
        .map(|_| {
            if rng.uniform() < CLUTTER_INLIER_PROB {
                z_star.iter().map(|zj| zj + rng.normal()).collect()
            } else {
                (0..d)
                    .map(|_| CLUTTER_OUTLIER_VAR.sqrt() * rng.normal())
                    .collect()
            }
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let d = cfg.d.unwrap_or(2);
    let n_obs = cfg.n_obs.unwrap_or(10);
    let reps = cfg.repetitions_resolved();
    let m_set = cfg.m_set_resolved();
    let mut rows = Vec::new();
    for rep in 0..reps {
        let mut inst_rng = RngStream::new(cfg.seed, sid(rep, 0xff, 0, 0));
        let obs = generate_instance(d, n_obs, &mut inst_rng);
        let model = clutter_target(&obs, d)?;
        let oracle = model.oracle().expect("clutter oracle within budget");
        let second = oracle.posterior_second_moment.clone();
        let extra = format!("d={d};n={n_obs}");
        for (fi, family) in cfg.families().into_iter().enumerate() {
            let fam = family_name(family).to_string();
            for (mi, &m) in m_set.iter().enumerate() {
                let mut noise_rng = RngStream::new(cfg.seed, sid(rep, fi, mi, 1));
                let params = optimize(cfg, &model, family, m, &mut noise_rng)?;

                let mut eval_rng = RngStream::new(cfg.seed, sid(rep, fi, mi, 2));
                let gap = gap_diagnostics(&params, &model, m, cfg.n_eval_batches, &mut eval_rng)?;
                rows.push(ResultRow {
                    experiment: "clutter",
                    family: fam.clone(),
                    m,
                    repetition: rep,
                    metric: "kl_gap",
                    value: gap.kl_joint,
                    stderr: gap.kl_std_error,
                    extra: extra.clone(),
                });

                let mut snis_rng = RngStream::new(cfg.seed, sid(rep, fi, mi, 3));
                let err = second_moment_error(
                    &params,
                    &model,
                    &second,
                    m,
                    cfg.n_eval_batches,
                    &mut snis_rng,
                )?;
                rows.push(ResultRow {
                    experiment: "clutter",
                    family: fam.clone(),
                    m,
                    repetition: rep,
                    metric: "second_moment_error",
                    value: err,
                    stderr: 0.0,
                    extra: extra.clone(),
                });
            }
        }
    }
    Ok(rows)
}
