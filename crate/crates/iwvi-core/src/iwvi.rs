//! The core estimators: IW-ELBO value and gradient, self-normalized
//! importance-sampling (SNIS) expectations, the q_M generative process,
//! and the gap diagnostics that connect the IW-ELBO to KL divergences.
//!
//! All weight arithmetic stays in log space; per-batch M-tuples are
//! independent so per-batch values give valid standard errors.

use crate::elliptical::{
    self, EllipticalParams, NoiseDraw, ParamLayout,
};
// Resolves float math on targets whose crate graph excludes std.
#[allow(unused_imports)]
use crate::fmath::F64Math;
use crate::linalg::Mat;
use crate::models::TargetModel;
use crate::rng::RngStream;
use crate::stats::{log_mean_exp, mean_and_se, softmax};
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// A Monte Carlo estimate bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct IwEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_batches: usize,
    pub m: usize,
    pub seed: u64,
    /// Set when at least one batch had all-zero weights (value −∞).
    pub degenerate: bool,
}

/// One M-tuple of samples with their log importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWeightBatch {
    pub z_batch: Vec<Vec<f64>>,
    pub log_w: Vec<f64>,
}

/// log w(z) = log p(z, x) − log q(z).
pub fn log_weight(z: &[f64], q_params: &EllipticalParams, model: &dyn TargetModel) -> Result<f64> {
    if z.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: z.len(),
        });
    }
    Ok(model.log_joint(z) - elliptical::log_density(z, q_params)?)
}

/// Draw one M-tuple from q and compute its log weights.
pub fn draw_batch(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    rng: &mut RngStream,
) -> Result<LogWeightBatch> {
    let mut z_batch = Vec::with_capacity(m);
    let mut log_w = Vec::with_capacity(m);
    for _ in 0..m {
        let noise = elliptical::sample_noise(&q_params.radial, rng)?;
        let z = elliptical::reparam(&noise, q_params)?;
        let lw = log_weight(&z, q_params, model)?;
        if lw == f64::INFINITY {
            return Err(Error::Numerical(String::from(
                "log weight is +inf (target density not integrable against q?)",
            )));
        }
        z_batch.push(z);
        log_w.push(lw);
    }
    Ok(LogWeightBatch { z_batch, log_w })
}

/// Monte Carlo IW-ELBO: mean over batches of log(1/M Σ exp(log w)).
/// M = 1 is exactly the plain ELBO estimator on the same stream.
pub fn iw_elbo(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    n_batches: usize,
    rng: &mut RngStream,
) -> Result<IwEstimate> {
    if m < 1 || n_batches < 1 {
        return Err(Error::Domain(format!(
            "iw_elbo: need m >= 1 and n_batches >= 1, got m={m}, n_batches={n_batches}"
        )));
    }
    let mut values = Vec::with_capacity(n_batches);
    let mut degenerate = false;
    for _ in 0..n_batches {
        let batch = draw_batch(q_params, model, m, rng)?;
        let v = log_mean_exp(&batch.log_w);
        if v == f64::NEG_INFINITY {
            degenerate = true;
        }
        values.push(v);
    }
    let (value, std_error) = mean_and_se(&values);
    Ok(IwEstimate {
        value,
        std_error,
        n_batches,
        m,
        seed: rng.seed(),
        degenerate,
    })
}

/// Gradient of the fixed-noise empirical IW-ELBO in raw-parameter layout.
///
/// For each frozen M-tuple, ∂/∂w log(1/M Σ exp(log w_m)) =
/// Σ_m softmax(log w)_m ∂ log w_m/∂w, with the per-sample term chained as
/// (∇_z log p − ∇_z log q)ᵀ ∂T/∂w − ∂ log q/∂w |_(z fixed).
pub fn iw_elbo_grad(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    noise_set: &[Vec<NoiseDraw>],
    layout: &ParamLayout,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; layout.len()];
    for tuple in noise_set {
        let mut log_w = Vec::with_capacity(tuple.len());
        let mut per_sample: Vec<Vec<f64>> = Vec::with_capacity(tuple.len());
        for noise in tuple {
            let z = elliptical::reparam(noise, q_params)?;
            log_w.push(log_weight(&z, q_params, model)?);
            let mut upstream = model.grad_log_joint(&z);
            let gq = elliptical::grad_z_log_density(&z, q_params)?;
            for (u, g) in upstream.iter_mut().zip(&gq) {
                *u -= g;
            }
            let mut g = elliptical::reparam_grad(noise, q_params, &upstream, layout)?;
            let explicit = elliptical::log_density_param_grad(&z, q_params, layout)?;
            for (gi, ei) in g.iter_mut().zip(&explicit) {
                *gi -= ei;
            }
            per_sample.push(g);
        }
        let weights = softmax(&log_w).ok_or(Error::DegenerateWeights)?;
        for (w, g) in weights.iter().zip(&per_sample) {
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += w * gi;
            }
        }
    }
    let scale = 1.0 / noise_set.len() as f64;
    for g in &mut grad {
        *g *= scale;
    }
    Ok(grad)
}

/// Value of the fixed-noise empirical IW-ELBO (the objective whose exact
/// gradient [`iw_elbo_grad`] computes).
pub fn iw_elbo_fixed(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    noise_set: &[Vec<NoiseDraw>],
) -> Result<f64> {
    let mut total = 0.0;
    for tuple in noise_set {
        let mut log_w = Vec::with_capacity(tuple.len());
        for noise in tuple {
            let z = elliptical::reparam(noise, q_params)?;
            log_w.push(log_weight(&z, q_params, model)?);
        }
        total += log_mean_exp(&log_w);
    }
    Ok(total / noise_set.len() as f64)
}

/// Self-normalized importance-sampling expectation of a vector statistic:
/// per batch Σ softmax(log w)_m t(z_m), averaged over batches.
pub fn snis_expect(
    t: &dyn Fn(&[f64]) -> Vec<f64>,
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    n_batches: usize,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if m < 1 || n_batches < 1 {
        return Err(Error::Domain(String::from(
            "snis_expect: need m >= 1 and n_batches >= 1",
        )));
    }
    let mut per_batch: Vec<Vec<f64>> = Vec::with_capacity(n_batches);
    for _ in 0..n_batches {
        let batch = draw_batch(q_params, model, m, rng)?;
        let weights = softmax(&batch.log_w).ok_or(Error::DegenerateWeights)?;
        let mut est: Option<Vec<f64>> = None;
        for (w, z) in weights.iter().zip(&batch.z_batch) {
            let tv = t(z);
            match &mut est {
                None => est = Some(tv.iter().map(|x| w * x).collect()),
                Some(e) => {
                    for (ei, xi) in e.iter_mut().zip(&tv) {
                        *ei += w * xi;
                    }
                }
            }
        }
        per_batch.push(est.expect("m >= 1"));
    }
    let k = per_batch[0].len();
    let mut estimate = Vec::with_capacity(k);
    let mut std_error = Vec::with_capacity(k);
    let mut column = vec![0.0; n_batches];
    for j in 0..k {
        for (c, row) in column.iter_mut().zip(&per_batch) {
            *c = row[j];
        }
        let (mean, se) = mean_and_se(&column);
        estimate.push(mean);
        std_error.push(se);
    }
    Ok((estimate, std_error))
}

/// One draw of the q_M generative process: sample M candidates from q,
/// select index m with probability softmax(log w)_m, return the selected
/// sample first and the rest in order. Selection uses a single uniform
/// against the cumulative softmax; ties resolve toward the lower index.
pub fn sample_qm(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<f64>>> {
    if m < 1 {
        return Err(Error::Domain(String::from("sample_qm: need m >= 1")));
    }
    let batch = draw_batch(q_params, model, m, rng)?;
    let weights = softmax(&batch.log_w).ok_or(Error::DegenerateWeights)?;
    let u = rng.uniform();
    let mut cum = 0.0;
    let mut selected = m - 1;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u <= cum {
            selected = i;
            break;
        }
    }
    let mut out = Vec::with_capacity(m);
    out.push(batch.z_batch[selected].clone());
    for (i, z) in batch.z_batch.into_iter().enumerate() {
        if i != selected {
            out.push(z);
        }
    }
    Ok(out)
}

/// Pointwise Monte Carlo estimate of the marginal density q_M(z₁) in 1-D:
/// q_M(z₁) = p(z₁, x) E_{z_{2:M}~q}[ M / (w(z₁) + Σ_{m≥2} w(z_m)) ].
/// Returns (density, standard error).
pub fn qm_marginal_density_1d(
    z1: f64,
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    n_inner: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if model.dim() != 1 || q_params.dim() != 1 {
        return Err(Error::Domain(String::from(
            "qm_marginal_density_1d: only d = 1 supported",
        )));
    }
    if m < 1 || n_inner < 1 {
        return Err(Error::Domain(String::from(
            "qm_marginal_density_1d: need m >= 1 and n_inner >= 1",
        )));
    }
    let z = [z1];
    let log_p1 = model.log_joint(&z);
    let lw1 = log_weight(&z, q_params, model)?;
    let ln_m = (m as f64).ln();
    let mut reps = Vec::with_capacity(n_inner);
    let mut log_w = vec![0.0; m];
    for _ in 0..n_inner {
        log_w.clear();
        log_w.push(lw1);
        for _ in 1..m {
            let noise = elliptical::sample_noise(&q_params.radial, rng)?;
            let zz = elliptical::reparam(&noise, q_params)?;
            log_w.push(log_weight(&zz, q_params, model)?);
        }
        let denom = crate::stats::log_sum_exp(&log_w);
        reps.push((log_p1 + ln_m - denom).exp());
    }
    Ok(mean_and_se(&reps))
}

/// Diagnostics for the bound chain: the joint KL gap
/// log p(x) − IW-ELBO, the variance of the scaled weight R/p(x), and the
/// asymptotic constant V[R]/(2 p(x)²) it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct GapDiagnostics {
    /// log p(x) − IW-ELBO estimate (= KL[q_M || p_M]).
    pub kl_joint: f64,
    /// Standard error of the IW-ELBO estimate behind `kl_joint`.
    pub kl_std_error: f64,
    /// Sample variance of R / p(x) (weights scaled by the oracle evidence
    /// to avoid overflow; equals V[R]/p(x)²).
    pub var_r_scaled: f64,
    /// V[R] / (2 p(x)²) = `var_r_scaled` / 2.
    pub asym_const: f64,
}

pub fn gap_diagnostics(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    n_batches: usize,
    rng: &mut RngStream,
) -> Result<GapDiagnostics> {
    let oracle = model.oracle().ok_or_else(|| {
        Error::Domain(String::from(
            "gap_diagnostics requires a model with an exact oracle",
        ))
    })?;
    let log_evidence = oracle.log_evidence;
    let est = iw_elbo(q_params, model, m, n_batches, rng)?;
    // Scaled weights from an independent substream; variance of R/p(x).
    let mut scaled = Vec::with_capacity(n_batches);
    for _ in 0..n_batches {
        let noise = elliptical::sample_noise(&q_params.radial, rng)?;
        let z = elliptical::reparam(&noise, q_params)?;
        let lw = log_weight(&z, q_params, model)?;
        scaled.push((lw - log_evidence).exp());
    }
    let (mean_s, _) = mean_and_se(&scaled);
    let n = scaled.len() as f64;
    let var_r_scaled = scaled
        .iter()
        .map(|s| (s - mean_s) * (s - mean_s))
        .sum::<f64>()
        / (n - 1.0);
    Ok(GapDiagnostics {
        kl_joint: log_evidence - est.value,
        kl_std_error: est.std_error,
        var_r_scaled,
        asym_const: 0.5 * var_r_scaled,
    })
}

/// KL[q_M(z₁) || p(z₁|x)] on a 1-D grid by trapezoid quadrature of the
/// Monte Carlo q_M density against the oracle-normalized posterior.
/// Both densities are renormalized on the grid. Refuses grids on which
/// the raw q_M mass is off 1 by more than 0.02.
pub fn marginal_kl_1d(
    q_params: &EllipticalParams,
    model: &dyn TargetModel,
    m: usize,
    grid: &[f64],
    n_inner: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let oracle = model.oracle().ok_or_else(|| {
        Error::Domain(String::from("marginal_kl_1d requires an exact oracle"))
    })?;
    if grid.len() < 3 {
        return Err(Error::Domain(String::from("marginal_kl_1d: grid too small")));
    }
    let mut qm = Vec::with_capacity(grid.len());
    let mut post = Vec::with_capacity(grid.len());
    for &z in grid {
        let (dq, _) = qm_marginal_density_1d(z, q_params, model, m, n_inner, rng)?;
        qm.push(dq);
        post.push((model.log_joint(&[z]) - oracle.log_evidence).exp());
    }
    let mass_q = trapezoid(grid, &qm);
    if (mass_q - 1.0).abs() > 0.02 {
        return Err(Error::Numerical(format!(
            "marginal_kl_1d: grid too coarse, q_M mass = {mass_q}"
        )));
    }
    let mass_p = trapezoid(grid, &post);
    let integrand: Vec<f64> = qm
        .iter()
        .zip(&post)
        .map(|(&a, &b)| {
            let qn = a / mass_q;
            let pn = b / mass_p;
            if qn <= 0.0 {
                0.0
            } else {
                qn * (qn / pn).ln()
            }
        })
        .collect();
    Ok(trapezoid(grid, &integrand))
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        acc += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
    }
    acc
}

/// Frobenius-norm error between an estimated and an oracle moment matrix.
pub fn moment_error(estimate: &Mat, oracle: &Mat) -> Result<f64> {
    estimate.frobenius_distance(oracle)
}
