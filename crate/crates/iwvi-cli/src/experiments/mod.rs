//! The four experiment drivers. Each returns its rows; `main` owns all
//! file output. Everything runs sequentially off deterministic RNG
//! streams, so reruns with the same config reproduce the CSV bitwise.

pub mod clutter;
pub mod dirichlet;
pub mod logreg;
pub mod oned;

use crate::config::ExperimentConfig;
use anyhow::Result;
use iwvi_core::elliptical::{EllipticalParams, Family};
use iwvi_core::linalg::Mat;
use iwvi_core::models::TargetModel;
use iwvi_core::optim::{init_params, lbfgs_maximize, FixedNoiseObjective, LbfgsOptions};
use iwvi_core::iwvi::{self, snis_expect};
use iwvi_core::rng::RngStream;

/// Deterministic stream-id allocation: one stream per
/// (repetition, family, M-index, purpose) cell.
pub(crate) fn sid(rep: usize, family_idx: usize, m_idx: usize, purpose: u64) -> u64 {
    ((rep as u64) << 24) | ((family_idx as u64) << 16) | ((m_idx as u64) << 8) | purpose
}

/// Freeze a noise set, initialize, and run batch L-BFGS; returns the
/// optimized variational parameters.
pub(crate) fn optimize(
    cfg: &ExperimentConfig,
    model: &dyn TargetModel,
    family: Family,
    m: usize,
    noise_rng: &mut RngStream,
) -> Result<EllipticalParams> {
    let layout = cfg.layout(family, model.dim());
    let objective = FixedNoiseObjective::new(model, layout.clone(), m, cfg.n_noise, noise_rng)?;
    let w0 = init_params(&layout, cfg.scale0)?;
    let out = lbfgs_maximize(&objective, &w0, &LbfgsOptions::default())?;
    if std::env::var_os("IWVI_TRACE").is_some() {
        eprintln!(
            "optimize: family={:?} m={} iters={} stop={:?} obj={}",
            family,
            m,
            out.trace.len(),
            out.stop,
            out.objective
        );
    }
    Ok(layout.unflatten(&out.w)?)
}

/// SNIS estimate of the posterior second moment E[z zᵀ] and its
/// entry-wise Frobenius error against the truth.
pub(crate) fn second_moment_error(
    params: &EllipticalParams,
    model: &dyn TargetModel,
    truth: &Mat,
    m: usize,
    n_batches: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let d = model.dim();
    let t = |z: &[f64]| {
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(z[i] * z[j]);
            }
        }
        out
    };
    let (est, _) = snis_expect(&t, params, model, m, n_batches, rng)?;
    let mat = Mat::from_fn(d, d, |i, j| est[i * d + j]);
    Ok(iwvi::moment_error(&mat, truth)?)
}
