//! Special functions and χ-distribution primitives.
//!
//! Everything the samplers and densities need: log-gamma, digamma, the
//! regularized lower incomplete gamma function, and the χ_ν CDF with its
//! derivatives, inverse, and sampler. The χ CDF is the piece that makes
//! reparameterization of the Student-T radial work: only the CDF (never
//! its inverse in closed form) is needed for gradients, via
//! ∇_w F_w⁻¹(v) = −∇_w F_w(r) / ∇_r F_w(r).

// Resolves float math on targets whose crate graph excludes std.
#[allow(unused_imports)]
use crate::fmath::F64Math;
use crate::rng::RngStream;
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

const LN_PI: f64 = 1.1447298858494002;
const LN_SQRT_TAU: f64 = 0.9189385332046727; // ln √(2π)

/// ln Γ(a) for a > 0. Lanczos approximation (g = 7, n = 9), good to
/// ~1e-13 relative over the whole domain.
pub fn log_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("log_gamma: a = {a} must be > 0")));
    }
    Ok(log_gamma_unchecked(a))
}

pub(crate) fn log_gamma_unchecked(a: f64) -> f64 {
    // Lanczos coefficients for g = 7.
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if a < 0.5 {
        // Reflection keeps accuracy for tiny arguments.
        return LN_PI - (core::f64::consts::PI * a).sin().ln() - log_gamma_unchecked(1.0 - a);
    }
    let x = a - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    LN_SQRT_TAU + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Digamma ψ(a) = d/da ln Γ(a), recurrence plus asymptotic series.
pub fn digamma(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("digamma: a = {a} must be > 0")));
    }
    let mut x = a;
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic expansion: ln x − 1/(2x) − Σ B_{2n}/(2n x^{2n}).
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    Ok(acc + x.ln() - 0.5 * inv - series)
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
///
/// Series expansion for x < a + 1, Lentz continued fraction for the
/// upper tail otherwise.
pub fn reg_inc_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("reg_inc_gamma: a = {a} must be > 0")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("reg_inc_gamma: x = {x} must be >= 0")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ln_pre = a * x.ln() - x - log_gamma_unchecked(a);
    if x < a + 1.0 {
        // γ(a,x) = x^a e^{-x} Σ_{n≥0} x^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        loop {
            term *= x / (a + n);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
            n += 1.0;
            if n > 1e7 {
                return Err(Error::Numerical(format!(
                    "reg_inc_gamma series failed to converge (a={a}, x={x})"
                )));
            }
        }
        Ok((ln_pre + sum.ln()).exp().min(1.0))
    } else {
        // Q(a,x) via modified Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut i = 1.0;
        loop {
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
            i += 1.0;
            if i > 1e7 {
                return Err(Error::Numerical(format!(
                    "reg_inc_gamma continued fraction failed to converge (a={a}, x={x})"
                )));
            }
        }
        let q = (ln_pre + h.ln()).exp();
        Ok((1.0 - q).max(0.0))
    }
}

/// The χ_ν CDF: F_ν(r) = P(ν/2, r²/2).
pub fn chi_cdf(r: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("chi_cdf: nu = {nu} must be > 0")));
    }
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("chi_cdf: r = {r} must be >= 0")));
    }
    reg_inc_gamma(0.5 * nu, 0.5 * r * r)
}

/// Log of the χ_ν pdf at r > 0.
pub fn chi_log_pdf(r: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("chi_log_pdf: nu = {nu} must be > 0")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("chi_log_pdf: r = {r} must be > 0")));
    }
    Ok((1.0 - 0.5 * nu) * core::f64::consts::LN_2 + (nu - 1.0) * r.ln()
        - 0.5 * r * r
        - log_gamma_unchecked(0.5 * nu))
}

/// (dF/dr, dF/dν) of the χ_ν CDF.
///
/// dF/dr is the χ_ν pdf (analytic). dF/dν has no elementary closed form
/// (shape derivative of the regularized incomplete gamma), so it is a
/// central finite difference with step h = max(1e-5, 1e-5 ν).
pub fn chi_cdf_grad(r: f64, nu: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("chi_cdf_grad: nu = {nu} must be > 0")));
    }
    let df_dr = if r > 0.0 {
        chi_log_pdf(r, nu)?.exp()
    } else if nu > 1.0 {
        0.0
    } else {
        return Err(Error::Domain(format!(
            "chi_cdf_grad: pdf diverges at r = 0 for nu = {nu} <= 1"
        )));
    };
    let h = (1e-5 * nu).max(1e-5);
    let lo = (nu - h).max(nu * 0.5);
    let hi = nu + h;
    let df_dnu = (chi_cdf(r, hi)? - chi_cdf(r, lo)?) / (hi - lo);
    Ok((df_dr, df_dnu))
}

/// Inverse χ_ν CDF: the r with |F_ν(r) − v| ≤ 1e-12, via a bracketing
/// safeguarded Newton iteration.
pub fn chi_inv_cdf(v: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("chi_inv_cdf: nu = {nu} must be > 0")));
    }
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!(
            "chi_inv_cdf: v = {v} must be in (0, 1)"
        )));
    }
    // Bracket the root. E[χ_ν] ≈ √ν is a good starting scale.
    let mut lo = 0.0;
    let mut hi = nu.sqrt() + 1.0;
    while chi_cdf(hi, nu)? < v {
        lo = hi;
        hi *= 2.0;
        if hi > 1e154 {
            return Err(Error::Numerical(format!(
                "chi_inv_cdf: failed to bracket v = {v}, nu = {nu}"
            )));
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = chi_cdf(r, nu)? - v;
        if f.abs() <= 1e-13 {
            return Ok(r);
        }
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let pdf = if r > 0.0 { chi_log_pdf(r, nu)?.exp() } else { 0.0 };
        let newton = if pdf > 0.0 { r - f / pdf } else { f64::NAN };
        r = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * (1.0 + r) {
            return Ok(r);
        }
    }
    // Interval collapsed without meeting the CDF tolerance; return the
    // midpoint only if it is within tolerance, else report failure.
    let f = chi_cdf(r, nu)? - v;
    if f.abs() <= 1e-12 {
        Ok(r)
    } else {
        Err(Error::Numerical(format!(
            "chi_inv_cdf did not converge (v={v}, nu={nu}, residual={f})"
        )))
    }
}

/// Draw from χ_ν as the square root of a Gamma(ν/2, scale 2) draw.
pub fn sample_chi(nu: f64, rng: &mut RngStream) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("sample_chi: nu = {nu} must be > 0")));
    }
    Ok(rng.gamma(0.5 * nu, 2.0).sqrt())
}

/// Uniform draw from the unit sphere in R^d (Gaussian-normalize).
pub fn sample_sphere(d: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::Domain(format!("sample_sphere: d must be >= 1")));
    }
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let n = crate::linalg::norm2(&g);
        if n > 1e-100 {
            return Ok(g.iter().map(|x| x / n).collect());
        }
    }
}

/// Mean of the χ_ν distribution: √2 Γ((ν+1)/2) / Γ(ν/2).
pub fn chi_mean(nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("chi_mean: nu = {nu} must be > 0")));
    }
    let ln_ratio = log_gamma_unchecked(0.5 * (nu + 1.0)) - log_gamma_unchecked(0.5 * nu);
    Ok(core::f64::consts::SQRT_2 * ln_ratio.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-13);
        assert!((log_gamma(5.0).unwrap() - 24.0f64.ln()).abs() < 1e-12);
        assert!((log_gamma(0.5).unwrap() - 0.5 * core::f64::consts::PI.ln()).abs() < 1e-12);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.0).is_err());
    }

    #[test]
    fn log_gamma_recurrence_property() {
        // ln Γ(a+1) = ln Γ(a) + ln a over a wide range (relative check).
        let mut a = 1e-3;
        while a < 1e6 {
            let lhs = log_gamma(a + 1.0).unwrap();
            let rhs = log_gamma(a).unwrap() + a.ln();
            let scale = lhs.abs().max(1.0);
            assert!((lhs - rhs).abs() / scale < 1e-12, "a = {a}");
            a *= 3.7;
        }
    }

    #[test]
    fn reg_inc_gamma_exponential_case() {
        // P(1, x) = 1 − e^{−x}
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            let p = reg_inc_gamma(1.0, x).unwrap();
            assert!((p - (1.0 - (-x).exp())).abs() < 1e-13, "x = {x}");
        }
        assert_eq!(reg_inc_gamma(2.5, 0.0).unwrap(), 0.0);
        assert!(reg_inc_gamma(-1.0, 1.0).is_err());
        assert!(reg_inc_gamma(1.0, -0.5).is_err());
    }

    /// Independent oracle: adaptive Simpson quadrature of t^{a−1} e^{−t}.
    fn quad_inc_gamma(a: f64, x: f64) -> f64 {
        fn f(a: f64, t: f64) -> f64 {
            if t == 0.0 {
                if a > 1.0 {
                    0.0
                } else if a == 1.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                (t.ln() * (a - 1.0) - t).exp()
            }
        }
        fn simpson(a: f64, lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64, eps: f64) -> f64 {
            let mid = 0.5 * (lo + hi);
            let lm = 0.5 * (lo + mid);
            let rm = 0.5 * (mid + hi);
            let flm = f(a, lm);
            let frm = f(a, rm);
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            if (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(a, lo, mid, flo, flm, fmid, eps / 2.0)
                    + simpson(a, mid, hi, fmid, frm, fhi, eps / 2.0)
            }
        }
        // Head ∫₀^lo t^{a−1}e^{−t} dt ≈ lo^a/a − lo^{a+1}/(a+1): for a < 1
        // the integrand is singular at 0 and this mass is not negligible.
        let lo = 1e-12;
        let head = lo.powf(a) / a - lo.powf(a + 1.0) / (a + 1.0);
        let integral = simpson(a, lo, x, f(a, lo), f(a, 0.5 * (lo + x)), f(a, x), 1e-13);
        (head + integral) / log_gamma(a).unwrap().exp()
    }

    #[test]
    fn reg_inc_gamma_vs_quadrature() {
        // Frozen from the quadrature oracle below; the assert also
        // recomputes the oracle to keep it honest.
        let cases = [(2.5, 3.0), (0.7, 0.2), (4.0, 4.0), (10.0, 3.0)];
        for &(a, x) in &cases {
            let p = reg_inc_gamma(a, x).unwrap();
            let q = quad_inc_gamma(a, x);
            assert!((p - q).abs() < 1e-9, "a={a} x={x}: {p} vs {q}");
        }
        // Spot value for (2.5, 3.0), frozen from the oracle.
        assert!((reg_inc_gamma(2.5, 3.0).unwrap() - 0.6937810816323374).abs() < 1e-9);
    }

    #[test]
    fn chi_cdf_closed_forms() {
        assert_eq!(chi_cdf(0.0, 3.0).unwrap(), 0.0);
        // ν = 2: F(r) = 1 − e^{−r²/2}
        assert!((chi_cdf(2.0, 2.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-13);
        // ν = 1 reduces to erf(r/√2); independent erf via its Maclaurin series.
        fn erf_series(x: f64) -> f64 {
            let mut term = x;
            let mut sum = x;
            for n in 1..200 {
                let nf = n as f64;
                term *= -x * x / nf;
                sum += term / (2.0 * nf + 1.0);
            }
            sum * 2.0 / core::f64::consts::PI.sqrt()
        }
        let expect = erf_series(1.0 / core::f64::consts::SQRT_2);
        assert!((chi_cdf(1.0, 1.0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.6826894921).abs() < 1e-9);
    }

    #[test]
    fn chi_cdf_monotone_in_r() {
        // Property check over a deterministic grid of (r1 < r2, ν).
        let mut rng = RngStream::new(11, 0);
        for _ in 0..500 {
            let nu = 0.5 + 49.5 * rng.uniform();
            let r1 = 10.0 * rng.uniform();
            let r2 = r1 + 10.0 * rng.uniform();
            assert!(chi_cdf(r1, nu).unwrap() <= chi_cdf(r2, nu).unwrap() + 1e-15);
        }
    }

    #[test]
    fn chi_cdf_grad_values() {
        let (dr, _) = chi_cdf_grad(2.0, 2.0).unwrap();
        assert!((dr - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        // dF/dν against a tighter central difference.
        let (_, dnu) = chi_cdf_grad(1.5, 4.0).unwrap();
        let h = 1e-6;
        let fd = (chi_cdf(1.5, 4.0 + h).unwrap() - chi_cdf(1.5, 4.0 - h).unwrap()) / (2.0 * h);
        assert!((dnu - fd).abs() < 1e-6, "{dnu} vs {fd}");
        // pdf positivity at the median.
        let med = chi_inv_cdf(0.5, 3.0).unwrap();
        let (dr, _) = chi_cdf_grad(med, 3.0).unwrap();
        assert!(dr > 0.0);
        // r = 0 edge cases.
        assert_eq!(chi_cdf_grad(0.0, 2.0).unwrap().0, 0.0);
        assert!(chi_cdf_grad(0.0, 1.0).is_err());
    }

    #[test]
    fn chi_cdf_grad_dr_matches_finite_difference() {
        let mut rng = RngStream::new(13, 0);
        for _ in 0..200 {
            let nu = 0.5 + 49.5 * rng.uniform();
            let r = 0.1 + 9.9 * rng.uniform();
            let (dr, _) = chi_cdf_grad(r, nu).unwrap();
            let h = 1e-6 * r.max(1.0);
            let fd = (chi_cdf(r + h, nu).unwrap() - chi_cdf(r - h, nu).unwrap()) / (2.0 * h);
            // Deep in the tails the central difference of F loses all its
            // precision to cancellation (F(r±h) both round to ~1), so only
            // compare where the density is large enough for the FD to be
            // trustworthy.
            if fd.abs() > 1e-6 {
                assert!((dr - fd).abs() / fd.abs() < 1e-5, "r={r} nu={nu}: {dr} vs {fd}");
            }
        }
    }

    #[test]
    fn chi_inv_cdf_roundtrip() {
        // ν = 2 closed form.
        let v = 1.0 - (-2.0f64).exp();
        assert!((chi_inv_cdf(v, 2.0).unwrap() - 2.0).abs() < 1e-10);
        for &v in &[1e-6, 0.01, 0.5, 0.99, 1.0 - 1e-6] {
            for &nu in &[0.7, 1.0, 2.0, 5.0, 30.0] {
                let r = chi_inv_cdf(v, nu).unwrap();
                assert!(
                    (chi_cdf(r, nu).unwrap() - v).abs() < 1e-10,
                    "v={v} nu={nu}"
                );
            }
        }
        assert!(chi_inv_cdf(0.0, 2.0).is_err());
        assert!(chi_inv_cdf(1.0, 2.0).is_err());
    }

    #[test]
    fn chi_inv_cdf_median_vs_sampling() {
        let med = chi_inv_cdf(0.5, 3.0).unwrap();
        let mut rng = RngStream::new(21, 0);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_chi(3.0, &mut rng).unwrap()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let emp = xs[n / 2];
        assert!((med - emp).abs() < 1e-2, "{med} vs {emp}");
    }

    #[test]
    fn sample_chi_mean_and_cdf() {
        for &nu in &[1.0, 2.5, 8.0] {
            let mut rng = RngStream::new(5, nu as u64);
            let n = 1_000_000usize;
            let mut sum = 0.0;
            let mut below_one = 0usize;
            for _ in 0..n {
                let x = sample_chi(nu, &mut rng).unwrap();
                assert!(x >= 0.0);
                sum += x;
                if x <= 1.0 {
                    below_one += 1;
                }
            }
            let mean = sum / n as f64;
            let expect = core::f64::consts::SQRT_2
                * (log_gamma(0.5 * (nu + 1.0)).unwrap() - log_gamma(0.5 * nu).unwrap()).exp();
            assert!((mean - expect).abs() / expect < 1e-2, "nu={nu}");
            let p = chi_cdf(1.0, nu).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let emp = below_one as f64 / n as f64;
            assert!((emp - p).abs() < 3.0 * se + 1e-4, "nu={nu}: {emp} vs {p}");
        }
    }

    #[test]
    fn sphere_samples() {
        let mut rng = RngStream::new(77, 0);
        // Unit norm.
        for &d in &[1usize, 2, 3, 7] {
            let u = sample_sphere(d, &mut rng).unwrap();
            assert!((crate::linalg::norm2(&u) - 1.0).abs() < 1e-12);
        }
        assert!(sample_sphere(0, &mut rng).is_err());
        // d = 1 symmetry.
        let n = 100_000;
        let pos = (0..n)
            .filter(|_| sample_sphere(1, &mut rng).unwrap()[0] > 0.0)
            .count();
        let se = 0.5 / (n as f64).sqrt();
        assert!((pos as f64 / n as f64 - 0.5).abs() < 3.0 * se);
        // Mean vector shrinks like CLT.
        let d = 3;
        let n = 1_000_000;
        let mut mean = [0.0f64; 3];
        for _ in 0..n {
            let u = sample_sphere(d, &mut rng).unwrap();
            for k in 0..d {
                mean[k] += u[k];
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let norm = (mean.iter().map(|x| x * x).sum::<f64>()).sqrt();
        assert!(norm <= 4.0 / (n as f64).sqrt() * (d as f64).sqrt());
    }

    #[test]
    fn digamma_matches_log_gamma_difference() {
        for &a in &[0.3f64, 1.0, 2.5, 10.0, 123.4] {
            let h = 1e-6 * a.max(1.0);
            let fd = (log_gamma(a + h).unwrap() - log_gamma(a - h).unwrap()) / (2.0 * h);
            assert!((digamma(a).unwrap() - fd).abs() < 1e-6, "a = {a}");
        }
    }
}
