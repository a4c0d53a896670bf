//! Elliptical variational families.
//!
//! An elliptical variable is z = r Aᵀu + μ with u uniform on the unit
//! sphere and r drawn from a radial law ρ. The Gaussian has ρ = χ_d; the
//! Student-T radial is the scaled ratio √ν t / s of two independent χ
//! variables (t ~ χ_d, s ~ χ_ν). Densities come from the density
//! generator g, and sampling is reparameterized so gradients flow into
//! (μ, A, ν) — the ν path uses the CDF-only implicit-function trick:
//! ∇_ν F_ν⁻¹(v) = −∇_ν F_ν(r) / ∇_r F_ν(r).

// Resolves float math on targets whose crate graph excludes std.
#[allow(unused_imports)]
use crate::fmath::F64Math;
use crate::linalg::{dot, UpperTriangular};
use crate::rng::RngStream;
use crate::specfn;
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Student-T degrees of freedom are kept above this floor so that second
/// moments exist; the raw parameter is η = ln(ν − NU_FLOOR).
pub const NU_FLOOR: f64 = 2.0;

/// Default Student-T degrees of freedom at initialization.
pub const NU_INIT: f64 = 10.0;

/// Upper cap for optimized ν. Beyond this the Student-T is numerically a
/// Gaussian and the χ_ν machinery loses accuracy, so the η
/// parameterization saturates here (the chain-rule factor goes to zero).
pub const NU_MAX: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    StudentT,
}

/// The radial law ρ of the spherical base distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialSpec {
    /// ρ = χ_d exactly.
    Gaussian { dim: usize },
    /// r =_d √ν t / s with t ~ χ_d, s ~ χ_ν independent.
    StudentT { dim: usize, nu: f64 },
}

impl RadialSpec {
    pub fn dim(&self) -> usize {
        match *self {
            RadialSpec::Gaussian { dim } => dim,
            RadialSpec::StudentT { dim, .. } => dim,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            RadialSpec::Gaussian { .. } => Family::Gaussian,
            RadialSpec::StudentT { .. } => Family::StudentT,
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match *self {
            RadialSpec::Gaussian { .. } => None,
            RadialSpec::StudentT { nu, .. } => Some(nu),
        }
    }

    /// E[r²]: d for Gaussian, d ν/(ν−2) for Student-T (ν > 2).
    pub fn radial_second_moment(&self) -> f64 {
        match *self {
            RadialSpec::Gaussian { dim } => dim as f64,
            RadialSpec::StudentT { dim, nu } => dim as f64 * nu / (nu - 2.0),
        }
    }
}

/// One reparameterization input: sphere direction u, radial draw t ~ χ_d,
/// and (Student-T only) the uniform v recovered from the radial sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub u: Vec<f64>,
    pub t: f64,
    pub v: f64,
}

/// Variational parameters w = (μ, A, ν): location, upper-triangular scale
/// factor with AᵀA = Σ and positive diagonal, and the radial law.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalParams {
    pub mu: Vec<f64>,
    pub scale: UpperTriangular,
    pub radial: RadialSpec,
}

/// Describes the raw (unconstrained) parameter vector: μ entries, then
/// off-diagonal A entries (row-major), then ln diag(A), then η = ln(ν−2)
/// when the Student-T ν is optimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamLayout {
    pub family: Family,
    pub dim: usize,
    pub optimize_nu: bool,
    /// ν used when the family is Student-T and ν is not optimized.
    pub fixed_nu: f64,
}

impl ParamLayout {
    pub fn gaussian(dim: usize) -> Self {
        ParamLayout {
            family: Family::Gaussian,
            dim,
            optimize_nu: false,
            fixed_nu: f64::NAN,
        }
    }

    pub fn student_t(dim: usize) -> Self {
        ParamLayout {
            family: Family::StudentT,
            dim,
            optimize_nu: true,
            fixed_nu: NU_INIT,
        }
    }

    pub fn student_t_fixed(dim: usize, nu: f64) -> Self {
        ParamLayout {
            family: Family::StudentT,
            dim,
            optimize_nu: false,
            fixed_nu: nu,
        }
    }

    pub fn has_nu_param(&self) -> bool {
        self.family == Family::StudentT && self.optimize_nu
    }

    /// Raw vector length: d + d(d−1)/2 + d (+ 1 for η).
    pub fn len(&self) -> usize {
        let d = self.dim;
        d + d * (d - 1) / 2 + d + usize::from(self.has_nu_param())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn unflatten(&self, raw: &[f64]) -> Result<EllipticalParams> {
        if raw.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: raw.len(),
            });
        }
        let d = self.dim;
        let mu = raw[..d].to_vec();
        let mut scale = UpperTriangular::zeros(d);
        let mut k = d;
        for i in 0..d {
            for j in i + 1..d {
                *scale.get_mut(i, j) = raw[k];
                k += 1;
            }
        }
        for i in 0..d {
            *scale.get_mut(i, i) = raw[k].exp();
            k += 1;
        }
        let radial = match self.family {
            Family::Gaussian => RadialSpec::Gaussian { dim: d },
            Family::StudentT => {
                let nu = if self.optimize_nu {
                    // exp underflow can round NU_FLOOR + e^η back to the
                    // floor; keep ν strictly above it so ν/(ν−2) stays
                    // finite. Cap from above too: past NU_MAX the family is
                    // numerically Gaussian and the χ_ν machinery degrades,
                    // so the optimizer is not allowed to wander further up
                    // the flat direction.
                    let nu = (NU_FLOOR + raw[k].exp()).min(NU_MAX);
                    if nu > NU_FLOOR {
                        nu
                    } else {
                        NU_FLOOR * (1.0 + f64::EPSILON)
                    }
                } else {
                    self.fixed_nu
                };
                RadialSpec::StudentT { dim: d, nu }
            }
        };
        Ok(EllipticalParams { mu, scale, radial })
    }
}

impl EllipticalParams {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn flatten(&self, layout: &ParamLayout) -> Vec<f64> {
        let d = self.dim();
        let mut raw = Vec::with_capacity(layout.len());
        raw.extend_from_slice(&self.mu);
        for i in 0..d {
            for j in i + 1..d {
                raw.push(self.scale.get(i, j));
            }
        }
        for i in 0..d {
            raw.push(self.scale.get(i, i).ln());
        }
        if layout.has_nu_param() {
            let nu = self.radial.nu().expect("student-t layout for gaussian params");
            raw.push((nu - NU_FLOOR).ln());
        }
        raw
    }
}

/// ln g(a) where g is the density generator of the radial law: the
/// closed Gaussian / multivariate-T forms (never the raw ρ quotient, so
/// a = 0 is regular).
pub fn log_density_generator(a: f64, radial: &RadialSpec) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!(
            "density_generator: a = {a} must be >= 0"
        )));
    }
    let d = radial.dim() as f64;
    match *radial {
        RadialSpec::Gaussian { .. } => Ok(-0.5 * d * (core::f64::consts::TAU).ln() - 0.5 * a),
        RadialSpec::StudentT { nu, .. } => {
            let half = 0.5 * (nu + d);
            Ok(specfn::log_gamma_unchecked(half)
                - specfn::log_gamma_unchecked(0.5 * nu)
                - 0.5 * d * (nu * core::f64::consts::PI).ln()
                - half * (a / nu).ln_1p())
        }
    }
}

/// g(a) = ρ(√a) / (S_{d−1} a^{(d−1)/2}).
pub fn density_generator(a: f64, radial: &RadialSpec) -> Result<f64> {
    Ok(log_density_generator(a, radial)?.exp())
}

/// d ln g / da, used by both z- and parameter-gradients of ln q.
fn dlog_g_da(a: f64, radial: &RadialSpec) -> f64 {
    match *radial {
        RadialSpec::Gaussian { .. } => -0.5,
        RadialSpec::StudentT { dim, nu } => -(nu + dim as f64) / (2.0 * (nu + a)),
    }
}

/// log q(z | μ, Σ) = −ln|Σ|^{1/2} + ln g((z−μ)ᵀΣ⁻¹(z−μ)), evaluated with
/// triangular solves against A (Σ⁻¹ is never formed).
pub fn log_density(z: &[f64], params: &EllipticalParams) -> Result<f64> {
    let d = params.dim();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    let delta: Vec<f64> = z.iter().zip(&params.mu).map(|(a, b)| a - b).collect();
    let y = params.scale.solve_t(&delta);
    let a = dot(&y, &y);
    Ok(-params.scale.log_det() + log_density_generator(a, &params.radial)?)
}

/// ∇_z log q(z).
pub fn grad_z_log_density(z: &[f64], params: &EllipticalParams) -> Result<Vec<f64>> {
    let d = params.dim();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    let delta: Vec<f64> = z.iter().zip(&params.mu).map(|(a, b)| a - b).collect();
    let y = params.scale.solve_t(&delta);
    let a = dot(&y, &y);
    let b = params.scale.solve(&y); // Σ⁻¹ (z − μ)
    let h = dlog_g_da(a, &params.radial);
    Ok(b.iter().map(|bi| 2.0 * h * bi).collect())
}

/// Explicit parameter gradient of log q(z | w) at fixed z, in raw-vector
/// layout. This is the "−∂ log q/∂w" piece of the IW-ELBO gradient that
/// does not flow through the sample.
pub fn log_density_param_grad(
    z: &[f64],
    params: &EllipticalParams,
    layout: &ParamLayout,
) -> Result<Vec<f64>> {
    let d = params.dim();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    let delta: Vec<f64> = z.iter().zip(&params.mu).map(|(a, b)| a - b).collect();
    let y = params.scale.solve_t(&delta);
    let a = dot(&y, &y);
    let b = params.scale.solve(&y);
    let h = dlog_g_da(a, &params.radial);

    let mut grad = vec![0.0; layout.len()];
    // μ block: ∂a/∂μ = −2 Σ⁻¹(z−μ).
    for i in 0..d {
        grad[i] = -2.0 * h * b[i];
    }
    // A off-diagonal block: ∂a/∂A_jk = −2 b_k y_j.
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            grad[k] = -2.0 * h * b[j] * y[i];
            k += 1;
        }
    }
    // Log-diagonal block: chain through A_ii = exp(raw), plus the
    // −Σ ln A_ii determinant term.
    for i in 0..d {
        grad[k] = -2.0 * h * b[i] * y[i] * params.scale.get(i, i) - 1.0;
        k += 1;
    }
    if layout.has_nu_param() {
        let nu = params.radial.nu().expect("nu param requires student-t");
        let df = d as f64;
        let dlogg_dnu = 0.5 * specfn::digamma(0.5 * (nu + df))? - 0.5 * specfn::digamma(0.5 * nu)?
            - 0.5 * df / nu
            - 0.5 * (a / nu).ln_1p()
            + 0.5 * (nu + df) * a / (nu * (nu + a));
        grad[k] = dlogg_dnu * dnu_deta(nu);
    }
    Ok(grad)
}

/// dν/dη for the saturating map η ↦ min(NU_FLOOR + e^η, NU_MAX).
#[inline]
fn dnu_deta(nu: f64) -> f64 {
    if nu >= NU_MAX {
        0.0
    } else {
        nu - NU_FLOOR
    }
}

/// Gaussian reparameterization: z = Aᵀε + μ.
pub fn reparam_gaussian(eps: &[f64], params: &EllipticalParams) -> Result<Vec<f64>> {
    let d = params.dim();
    if eps.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: eps.len(),
        });
    }
    let mut z = params.scale.matvec_t(eps);
    for (zi, mi) in z.iter_mut().zip(&params.mu) {
        *zi += mi;
    }
    Ok(z)
}

/// Student-T reparameterization: z = (√ν t / F_ν⁻¹(v)) Aᵀu + μ.
pub fn reparam_student_t(noise: &NoiseDraw, params: &EllipticalParams) -> Result<Vec<f64>> {
    let nu = match params.radial {
        RadialSpec::StudentT { nu, .. } => nu,
        RadialSpec::Gaussian { .. } => {
            return Err(Error::Domain(format!(
                "reparam_student_t called with Gaussian params"
            )))
        }
    };
    let scale = radial_scale(noise, nu)?;
    let mut z = params.scale.matvec_t(&noise.u);
    for (zi, mi) in z.iter_mut().zip(&params.mu) {
        *zi = scale * *zi + mi;
    }
    Ok(z)
}

/// The scalar √ν t / F_ν⁻¹(v). t = 0 (probability zero) maps to 0.
fn radial_scale(noise: &NoiseDraw, nu: f64) -> Result<f64> {
    if noise.t == 0.0 {
        return Ok(0.0);
    }
    let r = specfn::chi_inv_cdf(noise.v, nu)?;
    Ok(nu.sqrt() * noise.t / r)
}

/// Map a noise draw through the family's reparameterization.
pub fn reparam(noise: &NoiseDraw, params: &EllipticalParams) -> Result<Vec<f64>> {
    match params.radial {
        RadialSpec::Gaussian { .. } => {
            let eps: Vec<f64> = noise.u.iter().map(|ui| noise.t * ui).collect();
            reparam_gaussian(&eps, params)
        }
        RadialSpec::StudentT { .. } => reparam_student_t(noise, params),
    }
}

/// Draw one reparameterization input.
///
/// u comes from the sphere, t ~ χ_d. For the Student-T the radial sample
/// is drawn first (s ~ χ_ν) and v = F_ν(s) recovered afterwards, so that
/// (F_ν⁻¹(v), v) has the right joint law with v uniform.
pub fn sample_noise(radial: &RadialSpec, rng: &mut RngStream) -> Result<NoiseDraw> {
    let d = radial.dim();
    let u = specfn::sample_sphere(d, rng)?;
    let t = specfn::sample_chi(d as f64, rng)?;
    let v = match *radial {
        RadialSpec::Gaussian { .. } => 0.5,
        RadialSpec::StudentT { nu, .. } => {
            let s = specfn::sample_chi(nu, rng)?;
            specfn::chi_cdf(s, nu)?
        }
    };
    Ok(NoiseDraw { u, t, v })
}

/// Gradient of upstreamᵀ T(noise; w) with respect to the raw parameter
/// vector, for fixed noise. upstream is ∂(objective)/∂z at z = T(noise; w).
pub fn reparam_grad(
    noise: &NoiseDraw,
    params: &EllipticalParams,
    upstream: &[f64],
    layout: &ParamLayout,
) -> Result<Vec<f64>> {
    let d = params.dim();
    if upstream.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: upstream.len(),
        });
    }
    let (scale, dscale_dnu) = match params.radial {
        RadialSpec::Gaussian { .. } => (noise.t, 0.0),
        RadialSpec::StudentT { nu, .. } => {
            if noise.t == 0.0 {
                (0.0, 0.0)
            } else {
                let r = specfn::chi_inv_cdf(noise.v, nu)?;
                let (df_dr, df_dnu) = specfn::chi_cdf_grad(r, nu)?;
                // dr/dν via the implicit-function identity on F_ν(r) = v,
                // "pretending" v was the primal input.
                let dr_dnu = -df_dnu / df_dr;
                let s = nu.sqrt() * noise.t / r;
                let ds = noise.t / (2.0 * nu.sqrt() * r) - nu.sqrt() * noise.t * dr_dnu / (r * r);
                (s, ds)
            }
        }
    };
    let mut grad = vec![0.0; layout.len()];
    // μ block: identity Jacobian.
    grad[..d].copy_from_slice(upstream);
    // A blocks: z_k = scale Σ_j A_jk u_j + μ_k, so ∂z_k/∂A_jk = scale u_j.
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            grad[k] = scale * upstream[j] * noise.u[i];
            k += 1;
        }
    }
    for i in 0..d {
        grad[k] = scale * upstream[i] * noise.u[i] * params.scale.get(i, i);
        k += 1;
    }
    if layout.has_nu_param() {
        let nu = params.radial.nu().expect("nu param requires student-t");
        let au = params.scale.matvec_t(&noise.u);
        grad[k] = dscale_dnu * dnu_deta(nu) * dot(upstream, &au);
    }
    Ok(grad)
}
