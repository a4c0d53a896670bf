//! Target models: unnormalized joints log p(z, x) with analytic
//! z-gradients, plus exact-inference oracles where the model admits one.
//! Also houses the stick-breaking simplex transform and the LIBSVM text
//! parser (path handling lives in the companion CLI crate).

// Resolves float math on targets whose crate graph excludes std.
#[allow(unused_imports)]
use crate::fmath::F64Math;
use crate::linalg::{dot, Mat, UpperTriangular};
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

const LN_TAU: f64 = 1.8378770664093453; // ln 2π

/// Exact posterior quantities for models where inference is tractable.
/// For the Dirichlet target the moments live in θ-space (length K); for
/// everything else they live in z-space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOracle {
    pub log_evidence: f64,
    pub posterior_mean: Vec<f64>,
    pub posterior_cov: Mat,
    pub posterior_second_moment: Mat,
}

/// Contract for an unnormalized target density.
pub trait TargetModel {
    fn dim(&self) -> usize;
    /// log p(z, x).
    fn log_joint(&self, z: &[f64]) -> f64;
    /// ∇_z log p(z, x).
    fn grad_log_joint(&self, z: &[f64]) -> Vec<f64>;
    fn oracle(&self) -> Option<&ExactOracle> {
        None
    }
}

// ---------------------------------------------------------------------------
// Stick breaking
// ---------------------------------------------------------------------------

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x), overflow-safe.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Stan-convention stick-breaking map R^{K−1} → interior of Δ^K.
///
/// v_k = logistic(z_k + ln(1/(K−k))) so z = 0 lands on the barycenter.
/// Returns (θ, log |Jacobian|).
pub fn stick_break(z: &[f64]) -> (Vec<f64>, f64) {
    let km1 = z.len();
    let k_total = km1 + 1;
    let mut theta = Vec::with_capacity(k_total);
    let mut stick = 1.0;
    let mut log_stick = 0.0;
    let mut log_jac = 0.0;
    for (i, &zi) in z.iter().enumerate() {
        // k = i+1 (1-based); offset ln(1/(K−k)) = −ln(K−1−i).
        let offset = -(((k_total - 1 - i) as f64).ln());
        let x = zi + offset;
        let v = logistic(x);
        // ln v + ln(1−v) computed in log space to survive extreme z.
        log_jac += -softplus(-x) - softplus(x) + log_stick;
        theta.push(v * stick);
        log_stick += -softplus(x); // ln(1−v)
        stick *= 1.0 - v;
    }
    theta.push(stick);
    (theta, log_jac)
}

/// Inverse of [`stick_break`] for strictly interior simplex points.
pub fn inv_stick_break(theta: &[f64]) -> Result<Vec<f64>> {
    let k_total = theta.len();
    if k_total < 2 {
        return Err(Error::Domain(format!(
            "inv_stick_break: need at least 2 components, got {k_total}"
        )));
    }
    if theta.iter().any(|&t| t <= 0.0) {
        return Err(Error::Domain(String::from(
            "inv_stick_break: theta must be strictly interior to the simplex",
        )));
    }
    let mut z = Vec::with_capacity(k_total - 1);
    let mut stick = 1.0;
    for (i, &t) in theta.iter().take(k_total - 1).enumerate() {
        let v = (t / stick).clamp(1e-300, 1.0 - 1e-16);
        let logit = v.ln() - (1.0 - v).ln();
        let offset = -(((k_total - 1 - i) as f64).ln());
        z.push(logit - offset);
        stick -= t;
        if stick <= 0.0 {
            return Err(Error::Domain(String::from(
                "inv_stick_break: theta components sum past 1",
            )));
        }
    }
    Ok(z)
}

// ---------------------------------------------------------------------------
// Dirichlet target
// ---------------------------------------------------------------------------

/// Dirichlet(α) over Δ^K, pushed to z ∈ R^{K−1} by stick-breaking.
/// The oracle moments are the closed-form Dirichlet moments of θ.
#[derive(Debug, Clone)]
pub struct DirichletTarget {
    alpha: Vec<f64>,
    /// Σ_{j>k} α_j, precomputed tail sums (length K−1).
    alpha_tail: Vec<f64>,
    oracle: ExactOracle,
}

impl DirichletTarget {
    pub fn new(alpha: &[f64]) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::Domain(String::from(
                "dirichlet_target: need K >= 2 components",
            )));
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Domain(String::from(
                "dirichlet_target: all alpha_k must be > 0",
            )));
        }
        let k = alpha.len();
        let a0: f64 = alpha.iter().sum();
        let log_evidence = alpha
            .iter()
            .map(|&a| crate::specfn::log_gamma_unchecked(a))
            .sum::<f64>()
            - crate::specfn::log_gamma_unchecked(a0);
        let mean: Vec<f64> = alpha.iter().map(|&a| a / a0).collect();
        let cov = Mat::from_fn(k, k, |i, j| {
            let mij = if i == j { mean[i] } else { 0.0 };
            (mij - mean[i] * mean[j]) / (a0 + 1.0)
        });
        let second = Mat::from_fn(k, k, |i, j| cov[(i, j)] + mean[i] * mean[j]);
        let mut alpha_tail = vec![0.0; k - 1];
        let mut tail = alpha[k - 1];
        for j in (0..k - 1).rev() {
            alpha_tail[j] = tail;
            tail += alpha[j];
        }
        Ok(DirichletTarget {
            alpha: alpha.to_vec(),
            alpha_tail,
            oracle: ExactOracle {
                log_evidence,
                posterior_mean: mean,
                posterior_cov: cov,
                posterior_second_moment: second,
            },
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn num_components(&self) -> usize {
        self.alpha.len()
    }
}

impl TargetModel for DirichletTarget {
    fn dim(&self) -> usize {
        self.alpha.len() - 1
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        let (theta, log_jac) = stick_break(z);
        let kernel: f64 = self
            .alpha
            .iter()
            .zip(&theta)
            .map(|(&a, &t)| (a - 1.0) * t.ln())
            .sum();
        kernel + log_jac
    }

    fn grad_log_joint(&self, z: &[f64]) -> Vec<f64> {
        // With v_j = logistic(z_j + offset): ∂/∂z_j = α_j (1−v_j) − v_j Σ_{k>j} α_k.
        let k_total = self.alpha.len();
        z.iter()
            .enumerate()
            .map(|(j, &zj)| {
                let offset = -(((k_total - 1 - j) as f64).ln());
                let v = logistic(zj + offset);
                self.alpha[j] * (1.0 - v) - v * self.alpha_tail[j]
            })
            .collect()
    }

    fn oracle(&self) -> Option<&ExactOracle> {
        Some(&self.oracle)
    }
}

/// Convenience constructor mirroring the free-function contract.
pub fn dirichlet_target(alpha: &[f64]) -> Result<DirichletTarget> {
    DirichletTarget::new(alpha)
}

// ---------------------------------------------------------------------------
// Clutter model
// ---------------------------------------------------------------------------

pub const CLUTTER_PRIOR_VAR: f64 = 100.0;
pub const CLUTTER_INLIER_PROB: f64 = 0.25;
pub const CLUTTER_OUTLIER_VAR: f64 = 10.0;
/// 2^n enumeration budget for the exact oracle.
pub const CLUTTER_N_MAX: usize = 20;

/// Minka's clutter model: z ~ N(0, 100 I), each observation a 25/75
/// inlier/outlier mixture. The posterior is a 2^n Gaussian mixture, so an
/// exact oracle is available for moderate n.
#[derive(Debug, Clone)]
pub struct ClutterTarget {
    obs: Vec<Vec<f64>>,
    dim: usize,
    oracle: ExactOracle,
}

impl ClutterTarget {
    pub fn new(obs: &[Vec<f64>], dim: usize) -> Result<Self> {
        if obs.len() > CLUTTER_N_MAX {
            return Err(Error::BudgetExceeded {
                limit: CLUTTER_N_MAX,
                requested: obs.len(),
            });
        }
        for x in obs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
        }
        let oracle = clutter_exact(obs, dim)?;
        Ok(ClutterTarget {
            obs: obs.to_vec(),
            dim,
            oracle,
        })
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.obs
    }
}

fn log_normal_iso(x: &[f64], mean: &[f64], var: f64) -> f64 {
    let d = x.len() as f64;
    let q: f64 = x
        .iter()
        .zip(mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / var;
    -0.5 * d * (LN_TAU + var.ln()) - 0.5 * q
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl TargetModel for ClutterTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        let zero = vec![0.0; self.dim];
        let mut lp = log_normal_iso(z, &zero, CLUTTER_PRIOR_VAR);
        for x in &self.obs {
            let lin = CLUTTER_INLIER_PROB.ln() + log_normal_iso(x, z, 1.0);
            let lout =
                (1.0 - CLUTTER_INLIER_PROB).ln() + log_normal_iso(x, &zero, CLUTTER_OUTLIER_VAR);
            lp += log_sum_exp2(lin, lout);
        }
        lp
    }

    fn grad_log_joint(&self, z: &[f64]) -> Vec<f64> {
        let zero = vec![0.0; self.dim];
        let mut g: Vec<f64> = z.iter().map(|zi| -zi / CLUTTER_PRIOR_VAR).collect();
        for x in &self.obs {
            let lin = CLUTTER_INLIER_PROB.ln() + log_normal_iso(x, z, 1.0);
            let lout =
                (1.0 - CLUTTER_INLIER_PROB).ln() + log_normal_iso(x, &zero, CLUTTER_OUTLIER_VAR);
            // Inlier responsibility; only the inlier branch depends on z.
            let gamma = (lin - log_sum_exp2(lin, lout)).exp();
            for (gk, (xk, zk)) in g.iter_mut().zip(x.iter().zip(z)) {
                *gk += gamma * (xk - zk);
            }
        }
        g
    }

    fn oracle(&self) -> Option<&ExactOracle> {
        Some(&self.oracle)
    }
}

pub fn clutter_target(obs: &[Vec<f64>], dim: usize) -> Result<ClutterTarget> {
    ClutterTarget::new(obs, dim)
}

/// Exact clutter inference by enumerating all 2^n inlier/outlier
/// assignments. Each assignment contributes a conjugate normal-normal
/// Gaussian component with a closed-form log marginal weight.
pub fn clutter_exact(obs: &[Vec<f64>], dim: usize) -> Result<ExactOracle> {
    let n = obs.len();
    if n > CLUTTER_N_MAX {
        return Err(Error::BudgetExceeded {
            limit: CLUTTER_N_MAX,
            requested: n,
        });
    }
    let zero = vec![0.0; dim];
    let log_out: Vec<f64> = obs
        .iter()
        .map(|x| log_normal_iso(x, &zero, CLUTTER_OUTLIER_VAR))
        .collect();
    let tau2 = CLUTTER_PRIOR_VAR;

    let mut log_weights = Vec::with_capacity(1 << n);
    let mut comp_means = Vec::with_capacity(1 << n);
    let mut comp_vars = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let k = mask.count_ones() as usize;
        let mut lw =
            k as f64 * CLUTTER_INLIER_PROB.ln() + (n - k) as f64 * (1.0 - CLUTTER_INLIER_PROB).ln();
        let mut sum = vec![0.0; dim];
        let mut sum_sq = 0.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                for (s, xi) in sum.iter_mut().zip(&obs[i]) {
                    *s += xi;
                }
                sum_sq += dot(&obs[i], &obs[i]);
            } else {
                lw += log_out[i];
            }
        }
        // Marginal of the inlier block: per dimension the k inlier values
        // are jointly N(0, I_k + τ² 1 1ᵀ), det = 1 + kτ², Sherman-Morrison
        // inverse I − τ²/(1+kτ²) 1 1ᵀ.
        let kf = k as f64;
        let denom = 1.0 + kf * tau2;
        let sum_norm2 = dot(&sum, &sum);
        lw += -0.5 * kf * dim as f64 * LN_TAU - 0.5 * dim as f64 * denom.ln()
            - 0.5 * (sum_sq - tau2 * sum_norm2 / denom);
        // Posterior component: precision 1/τ² + k per dimension.
        let lambda = 1.0 / tau2 + kf;
        comp_vars.push(1.0 / lambda);
        comp_means.push(sum.iter().map(|s| s / lambda).collect::<Vec<f64>>());
        log_weights.push(lw);
    }

    let log_evidence = log_sum_exp_slice(&log_weights);
    let mut mean = vec![0.0; dim];
    let mut second = Mat::zeros(dim, dim);
    for ((lw, m), var) in log_weights.iter().zip(&comp_means).zip(&comp_vars) {
        let p = (lw - log_evidence).exp();
        for i in 0..dim {
            mean[i] += p * m[i];
            for j in 0..dim {
                second[(i, j)] += p * m[i] * m[j];
            }
            second[(i, i)] += p * var;
        }
    }
    let cov = Mat::from_fn(dim, dim, |i, j| second[(i, j)] - mean[i] * mean[j]);
    Ok(ExactOracle {
        log_evidence,
        posterior_mean: mean,
        posterior_cov: cov,
        posterior_second_moment: second,
    })
}

use crate::stats::log_sum_exp as log_sum_exp_slice;

// ---------------------------------------------------------------------------
// Logistic regression with Cauchy prior
// ---------------------------------------------------------------------------

pub const CAUCHY_SCALE: f64 = 10.0;

/// Bayesian logistic regression: y_i ∈ {−1, +1}, sparse features, and an
/// independent Cauchy(0, 10) prior on every weight. No exact oracle.
#[derive(Debug, Clone)]
pub struct LogRegTarget {
    /// Row-wise sparse features, 0-based sorted column indices.
    features: Vec<Vec<(usize, f64)>>,
    labels: Vec<f64>,
    dim: usize,
}

impl LogRegTarget {
    pub fn new(features: Vec<Vec<(usize, f64)>>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Domain(String::from(
                "logreg_target: labels must be +/-1",
            )));
        }
        for row in &features {
            if row.iter().any(|&(j, _)| j >= dim) {
                return Err(Error::Domain(String::from(
                    "logreg_target: feature index out of range",
                )));
            }
        }
        Ok(LogRegTarget {
            features,
            labels,
            dim,
        })
    }

    pub fn num_observations(&self) -> usize {
        self.labels.len()
    }

    fn margin(&self, row: &[(usize, f64)], z: &[f64]) -> f64 {
        row.iter().map(|&(j, x)| x * z[j]).sum()
    }
}

impl TargetModel for LogRegTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        let mut lp: f64 = z
            .iter()
            .map(|zj| {
                -(CAUCHY_SCALE * core::f64::consts::PI).ln()
                    - ((zj / CAUCHY_SCALE) * (zj / CAUCHY_SCALE)).ln_1p()
            })
            .sum();
        for (row, &y) in self.features.iter().zip(&self.labels) {
            // ln σ(a) = −softplus(−a), finite for any a.
            lp -= softplus(-y * self.margin(row, z));
        }
        lp
    }

    fn grad_log_joint(&self, z: &[f64]) -> Vec<f64> {
        let s2 = CAUCHY_SCALE * CAUCHY_SCALE;
        let mut g: Vec<f64> = z.iter().map(|zj| -2.0 * zj / (s2 + zj * zj)).collect();
        for (row, &y) in self.features.iter().zip(&self.labels) {
            let coeff = y * logistic(-y * self.margin(row, z));
            for &(j, x) in row {
                g[j] += coeff * x;
            }
        }
        g
    }
}

pub fn logreg_target(
    features: Vec<Vec<(usize, f64)>>,
    labels: Vec<f64>,
    dim: usize,
) -> Result<LogRegTarget> {
    LogRegTarget::new(features, labels, dim)
}

// ---------------------------------------------------------------------------
// LIBSVM parsing (text only; file IO lives in iwvi-cli)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LibsvmData {
    /// Row-wise sparse features, 0-based sorted column indices.
    pub features: Vec<Vec<(usize, f64)>>,
    /// Labels mapped to ±1 (the larger raw label becomes +1).
    pub labels: Vec<f64>,
    /// Max feature index seen (1-based count).
    pub dim: usize,
    /// Duplicate feature indices encountered (last occurrence won).
    pub duplicate_count: usize,
}

/// Parse LIBSVM sparse text: each line `<label> <idx>:<val> ...` with
/// 1-based indices. Out-of-order indices are accepted and stored sorted;
/// duplicates resolve last-wins and are counted for the caller to warn on.
pub fn parse_libsvm(text: &str) -> Result<LibsvmData> {
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dim = 0usize;
    let mut duplicate_count = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().expect("non-empty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| {
            Error::Domain(format!("line {}: bad label '{label_tok}'", lineno + 1))
        })?;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| {
                Error::Domain(format!("line {}: bad feature '{tok}'", lineno + 1))
            })?;
            let idx: usize = idx_s.parse().map_err(|_| {
                Error::Domain(format!("line {}: bad index '{idx_s}'", lineno + 1))
            })?;
            if idx == 0 {
                return Err(Error::Domain(format!(
                    "line {}: indices are 1-based, got 0",
                    lineno + 1
                )));
            }
            let val: f64 = val_s.parse().map_err(|_| {
                Error::Domain(format!("line {}: bad value '{val_s}'", lineno + 1))
            })?;
            dim = dim.max(idx);
            row.push((idx - 1, val));
        }
        row.sort_by_key(|&(j, _)| j);
        // Last occurrence wins for duplicate indices.
        let mut dedup: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (j, v) in row {
            match dedup.last_mut() {
                Some(last) if last.0 == j => {
                    last.1 = v;
                    duplicate_count += 1;
                }
                _ => dedup.push((j, v)),
            }
        }
        features.push(dedup);
        raw_labels.push(label);
    }
    // Map labels to ±1: if already ±1 keep them, otherwise the larger of
    // the two distinct raw labels maps to +1.
    let mut distinct: Vec<f64> = Vec::new();
    for &l in &raw_labels {
        if !distinct.iter().any(|&d| d == l) {
            distinct.push(l);
        }
    }
    if distinct.len() > 2 {
        return Err(Error::Domain(format!(
            "expected binary labels, found {} distinct values",
            distinct.len()
        )));
    }
    let labels = if distinct.iter().all(|&l| l == 1.0 || l == -1.0) {
        raw_labels
    } else {
        let hi = distinct.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        raw_labels
            .iter()
            .map(|&l| if l == hi { 1.0 } else { -1.0 })
            .collect()
    };
    Ok(LibsvmData {
        features,
        labels,
        dim,
        duplicate_count,
    })
}

// ---------------------------------------------------------------------------
// Analytic test targets (normalized; used by experiments and diagnostics)
// ---------------------------------------------------------------------------

/// A normalized multivariate Gaussian target N(μ, AᵀA); log p(x) = 0.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mu: Vec<f64>,
    scale: UpperTriangular,
    oracle: ExactOracle,
}

impl GaussianTarget {
    pub fn new(mu: &[f64], scale: UpperTriangular) -> Result<Self> {
        let d = mu.len();
        if scale.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: scale.dim(),
            });
        }
        let cov = Mat::from_fn(d, d, |i, j| {
            (0..d).map(|k| scale.get(k, i) * scale.get(k, j)).sum()
        });
        let second = Mat::from_fn(d, d, |i, j| cov[(i, j)] + mu[i] * mu[j]);
        Ok(GaussianTarget {
            mu: mu.to_vec(),
            scale,
            oracle: ExactOracle {
                log_evidence: 0.0,
                posterior_mean: mu.to_vec(),
                posterior_cov: cov,
                posterior_second_moment: second,
            },
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(&vec![0.0; d], UpperTriangular::scaled_identity(d, 1.0))
            .expect("dims agree by construction")
    }
}

impl TargetModel for GaussianTarget {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        let delta: Vec<f64> = z.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        let y = self.scale.solve_t(&delta);
        -0.5 * self.mu.len() as f64 * LN_TAU - self.scale.log_det() - 0.5 * dot(&y, &y)
    }

    fn grad_log_joint(&self, z: &[f64]) -> Vec<f64> {
        let delta: Vec<f64> = z.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        let y = self.scale.solve_t(&delta);
        let b = self.scale.solve(&y);
        b.iter().map(|bi| -bi).collect()
    }

    fn oracle(&self) -> Option<&ExactOracle> {
        Some(&self.oracle)
    }
}

/// A normalized 1-D Gaussian mixture target; log p(x) = 0. Used for the
/// 1-D desk experiments and the Alg.-1 marginal checks.
#[derive(Debug, Clone)]
pub struct Mixture1dTarget {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
    oracle: ExactOracle,
}

impl Mixture1dTarget {
    pub fn new(components: &[(f64, f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain(String::from(
                "mixture target: need at least one component",
            )));
        }
        let wsum: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| !(c.0 > 0.0) || !(c.2 > 0.0)) {
            return Err(Error::Domain(String::from(
                "mixture target: weights and sds must be positive",
            )));
        }
        let weights: Vec<f64> = components.iter().map(|c| c.0 / wsum).collect();
        let means: Vec<f64> = components.iter().map(|c| c.1).collect();
        let sds: Vec<f64> = components.iter().map(|c| c.2).collect();
        let mean: f64 = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
        let second: f64 = weights
            .iter()
            .zip(&means)
            .zip(&sds)
            .map(|((w, m), s)| w * (m * m + s * s))
            .sum();
        let mut cov = Mat::zeros(1, 1);
        cov[(0, 0)] = second - mean * mean;
        let mut sm = Mat::zeros(1, 1);
        sm[(0, 0)] = second;
        Ok(Mixture1dTarget {
            weights,
            means,
            sds,
            oracle: ExactOracle {
                log_evidence: 0.0,
                posterior_mean: vec![mean],
                posterior_cov: cov,
                posterior_second_moment: sm,
            },
        })
    }

    fn component_logs(&self, z: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, m), s)| {
                let u = (z - m) / s;
                w.ln() - 0.5 * LN_TAU - s.ln() - 0.5 * u * u
            })
            .collect()
    }
}

impl TargetModel for Mixture1dTarget {
    fn dim(&self) -> usize {
        1
    }

    fn log_joint(&self, z: &[f64]) -> f64 {
        log_sum_exp_slice(&self.component_logs(z[0]))
    }

    fn grad_log_joint(&self, z: &[f64]) -> Vec<f64> {
        let logs = self.component_logs(z[0]);
        let total = log_sum_exp_slice(&logs);
        let g: f64 = logs
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((l, m), s)| (l - total).exp() * (-(z[0] - m) / (s * s)))
            .sum();
        vec![g]
    }

    fn oracle(&self) -> Option<&ExactOracle> {
        Some(&self.oracle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn finite_diff_grad(model: &dyn TargetModel, z: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..z.len())
            .map(|k| {
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                zp[k] += h;
                zm[k] -= h;
                (model.log_joint(&zp) - model.log_joint(&zm)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_matches(model: &dyn TargetModel, rng: &mut RngStream, points: usize) {
        for _ in 0..points {
            let z: Vec<f64> = (0..model.dim()).map(|_| rng.normal()).collect();
            let g = model.grad_log_joint(&z);
            let fd = finite_diff_grad(model, &z);
            for (a, b) in g.iter().zip(&fd) {
                let scale = b.abs().max(1e-3);
                assert!((a - b).abs() / scale < 1e-5, "grad {a} vs fd {b}");
            }
        }
    }

    #[test]
    fn stick_break_k2_center() {
        let (theta, lj) = stick_break(&[0.0]);
        assert!((theta[0] - 0.5).abs() < 1e-15);
        assert!((theta[1] - 0.5).abs() < 1e-15);
        assert!((lj - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn stick_break_simplex_invariant() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..200 {
            let k = 2 + (rng.next_u64() % 6) as usize;
            let z: Vec<f64> = (0..k - 1).map(|_| 8.0 * (rng.uniform() - 0.5)).collect();
            let (theta, _) = stick_break(&z);
            assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(theta.iter().all(|&t| t > 0.0));
        }
    }

    #[test]
    fn stick_break_zero_maps_to_barycenter() {
        let (theta, _) = stick_break(&[0.0, 0.0, 0.0]);
        for t in theta {
            assert!((t - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn inv_stick_break_roundtrip() {
        assert!((inv_stick_break(&[0.5, 0.5]).unwrap()[0]).abs() < 1e-12);
        let mut rng = RngStream::new(3, 0);
        for _ in 0..100 {
            let k = 2 + (rng.next_u64() % 5) as usize;
            // random interior point via normalized exponentials
            let raw: Vec<f64> = (0..k).map(|_| -rng.uniform().ln()).collect();
            let s: f64 = raw.iter().sum();
            let theta: Vec<f64> = raw.iter().map(|r| r / s).collect();
            let z = inv_stick_break(&theta).unwrap();
            let (theta2, _) = stick_break(&z);
            for (a, b) in theta.iter().zip(&theta2) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        // Near-boundary stress case.
        let theta = [1e-9, 1.0 - 1e-9];
        let z = inv_stick_break(&theta).unwrap();
        let (theta2, _) = stick_break(&z);
        for (a, b) in theta.iter().zip(&theta2) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(inv_stick_break(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn dirichlet_known_evidence() {
        let t = dirichlet_target(&[1.0, 1.0]).unwrap();
        assert!(t.oracle().unwrap().log_evidence.abs() < 1e-12);
        let t = dirichlet_target(&[2.0, 2.0]).unwrap();
        assert!((t.oracle().unwrap().log_evidence + 6.0f64.ln()).abs() < 1e-12);
        assert!(dirichlet_target(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn dirichlet_quadrature_recovers_normalizer() {
        // 2-D tensor-grid quadrature of exp(log_joint) over z ∈ [−12,12]²
        // must equal B(α) for K = 3.
        let t = dirichlet_target(&[3.0, 4.0, 5.0]).unwrap();
        let n = 400;
        let lo = -12.0;
        let hi = 12.0;
        let h = (hi - lo) / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let z = [lo + i as f64 * h, lo + j as f64 * h];
                let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                let w = wi * wj;
                sum += w * t.log_joint(&z).exp();
            }
        }
        sum *= h * h;
        let b = t.oracle().unwrap().log_evidence.exp();
        assert!((sum - b).abs() < 1e-4, "{sum} vs {b}");
    }

    #[test]
    fn dirichlet_grad_matches_fd() {
        let mut rng = RngStream::new(7, 0);
        let t = dirichlet_target(&[3.0, 4.0, 5.0]).unwrap();
        assert_grad_matches(&t, &mut rng, 20);
        let t = dirichlet_target(&[0.5, 2.0]).unwrap();
        assert_grad_matches(&t, &mut rng, 20);
    }

    #[test]
    fn dirichlet_oracle_cov_vs_sampling() {
        // Direct Dirichlet sampling oracle (gamma normalization).
        let alpha = [3.0, 4.0, 5.0];
        let t = dirichlet_target(&alpha).unwrap();
        let oracle = t.oracle().unwrap();
        let mut rng = RngStream::new(19, 0);
        let n = 1_000_000usize;
        let k = alpha.len();
        let mut mean = vec![0.0; k];
        let mut second = Mat::zeros(k, k);
        for _ in 0..n {
            let g: Vec<f64> = alpha.iter().map(|&a| rng.gamma(a, 1.0)).collect();
            let s: f64 = g.iter().sum();
            let th: Vec<f64> = g.iter().map(|x| x / s).collect();
            for i in 0..k {
                mean[i] += th[i];
                for j in 0..k {
                    second[(i, j)] += th[i] * th[j];
                }
            }
        }
        for i in 0..k {
            mean[i] /= n as f64;
        }
        for i in 0..k {
            for j in 0..k {
                let cov = second[(i, j)] / n as f64 - mean[i] * mean[j];
                // 3 s.e. of a covariance estimate at this n is ~1e-3; be generous.
                assert!(
                    (cov - oracle.posterior_cov[(i, j)]).abs() < 1e-3,
                    "cov[{i}{j}]"
                );
            }
        }
    }

    #[test]
    fn clutter_no_data_is_prior() {
        let t = clutter_target(&[], 2).unwrap();
        let o = t.oracle().unwrap();
        assert!(o.log_evidence.abs() < 1e-12);
        assert!(o.posterior_mean.iter().all(|&m| m == 0.0));
        assert!((o.posterior_cov[(0, 0)] - 100.0).abs() < 1e-9);
        assert!((o.posterior_cov[(0, 1)]).abs() < 1e-9);
    }

    #[test]
    fn clutter_grad_matches_fd() {
        let mut rng = RngStream::new(8, 0);
        let obs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..2).map(|_| 3.0 * rng.normal()).collect())
            .collect();
        let t = clutter_target(&obs, 2).unwrap();
        assert_grad_matches(&t, &mut rng, 20);
    }

    #[test]
    fn clutter_single_obs_evidence_closed_form() {
        // n=1, d=1, x=0: evidence = 0.25 N(0;0,101) + 0.75 N(0;0,10).
        let t = clutter_target(&[vec![0.0]], 1).unwrap();
        let n101 = (-0.5 * (LN_TAU + 101.0f64.ln())).exp();
        let n10 = (-0.5 * (LN_TAU + 10.0f64.ln())).exp();
        let expect = (0.25 * n101 + 0.75 * n10).ln();
        assert!((t.oracle().unwrap().log_evidence - expect).abs() < 1e-12);
    }

    /// Trapezoid quadrature oracle for low-dimensional evidence.
    fn quadrature_evidence_1d(model: &dyn TargetModel, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        let h = (hi - lo) / n as f64;
        let mut mass = 0.0;
        let mut mean = 0.0;
        for i in 0..=n {
            let z = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let p = model.log_joint(&[z]).exp();
            mass += w * p;
            mean += w * p * z;
        }
        (mass * h, mean / mass)
    }

    #[test]
    fn clutter_enumeration_matches_quadrature() {
        let mut rng = RngStream::new(23, 0);
        for n_obs in 0..=3usize {
            let obs: Vec<Vec<f64>> = (0..n_obs)
                .map(|_| vec![6.0 * rng.normal()])
                .collect();
            let t = clutter_target(&obs, 1).unwrap();
            let o = t.oracle().unwrap();
            let (mass, mean) = quadrature_evidence_1d(&t, -100.0, 100.0, 400_000);
            assert!(
                (mass.ln() - o.log_evidence).abs() < 1e-8,
                "n={n_obs}: {} vs {}",
                mass.ln(),
                o.log_evidence
            );
            if n_obs > 0 {
                assert!((mean - o.posterior_mean[0]).abs() < 1e-8, "n={n_obs}");
            }
        }
    }

    #[test]
    fn clutter_symmetric_data_centered() {
        let t = clutter_target(&[vec![3.0], vec![-3.0]], 1).unwrap();
        assert!(t.oracle().unwrap().posterior_mean[0].abs() < 1e-12);
    }

    #[test]
    fn clutter_budget() {
        let obs = vec![vec![0.0]; 21];
        assert!(matches!(
            clutter_target(&obs, 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn logreg_prior_only() {
        let t = logreg_target(Vec::new(), Vec::new(), 3).unwrap();
        let expect = -3.0 * (10.0 * core::f64::consts::PI).ln();
        assert!((t.log_joint(&[0.0, 0.0, 0.0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn logreg_grad_and_stability() {
        let mut rng = RngStream::new(31, 0);
        let d = 4;
        let features: Vec<Vec<(usize, f64)>> = (0..10)
            .map(|_| (0..d).map(|j| (j, rng.normal())).collect())
            .collect();
        let labels: Vec<f64> = (0..10)
            .map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 })
            .collect();
        let t = logreg_target(features, labels, d).unwrap();
        assert_grad_matches(&t, &mut rng, 20);
        // Stability at huge margins.
        let z = vec![1e4; d];
        assert!(t.log_joint(&z).is_finite());
        let z = vec![-1e4; d];
        assert!(t.log_joint(&z).is_finite());
    }

    #[test]
    fn libsvm_basic_lines() {
        let data = parse_libsvm("1 1:0.5 3:2\n-1\n").unwrap();
        assert_eq!(data.labels, vec![1.0, -1.0]);
        assert_eq!(data.features[0], vec![(0, 0.5), (2, 2.0)]);
        assert!(data.features[1].is_empty());
        assert_eq!(data.dim, 3);
    }

    #[test]
    fn libsvm_out_of_order_and_duplicates() {
        let data = parse_libsvm("1 3:1 1:2\n").unwrap();
        assert_eq!(data.features[0], vec![(0, 2.0), (2, 1.0)]);
        let data = parse_libsvm("1 2:1 2:5\n").unwrap();
        assert_eq!(data.features[0], vec![(1, 5.0)]);
        assert_eq!(data.duplicate_count, 1);
    }

    #[test]
    fn libsvm_label_mapping_and_errors() {
        let data = parse_libsvm("0 1:1\n1 1:2\n").unwrap();
        assert_eq!(data.labels, vec![-1.0, 1.0]);
        let data = parse_libsvm("1 1:1\n2 1:2\n").unwrap();
        assert_eq!(data.labels, vec![-1.0, 1.0]);
        assert!(parse_libsvm("1 x:1\n").is_err());
        assert!(parse_libsvm("abc 1:1\n").is_err());
        assert!(parse_libsvm("1 0:1\n").is_err());
        assert!(parse_libsvm("0 1:1\n1 1:1\n2 1:1\n").is_err());
    }

    #[test]
    fn gaussian_and_mixture_grads() {
        let mut rng = RngStream::new(41, 0);
        let g = GaussianTarget::standard(3);
        assert_grad_matches(&g, &mut rng, 20);
        let m = Mixture1dTarget::new(&[(0.6, -2.0, 0.8), (0.4, 2.0, 1.2)]).unwrap();
        assert_grad_matches(&m, &mut rng, 20);
        // The mixture is normalized.
        let (mass, _) = quadrature_evidence_1d(&m, -30.0, 30.0, 100_000);
        assert!((mass - 1.0).abs() < 1e-8);
    }
}
