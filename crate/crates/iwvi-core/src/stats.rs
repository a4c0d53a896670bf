//! Log-space weight arithmetic shared by the estimators. Everything is
//! max-shifted: importance weights span hundreds of nats on real targets.

// Resolves float math on targets whose crate graph excludes std.
#[allow(unused_imports)]
use crate::fmath::F64Math;
use alloc::vec::Vec;

/// Max-shifted log Σ exp(x_i). Returns −∞ for an all-(−∞) input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log (1/n Σ exp(x_i)).
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// Stable softmax. Returns `None` when every entry is −∞.
pub fn softmax(xs: &[f64]) -> Option<Vec<f64>> {
    let lse = log_sum_exp(xs);
    if lse == f64::NEG_INFINITY {
        return None;
    }
    Some(xs.iter().map(|x| (x - lse).exp()).collect())
}

/// (mean, standard error of the mean) of a sample.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
