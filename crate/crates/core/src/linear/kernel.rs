use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::models::{Interaction, VelocityProfile};
use crate::quadrature::GaussLegendre;

/// Memory kernel of the mode equation,
/// `K0(t, k) = -4 pi^2 W^(k) f0~(k t) |k|^2 t`.
pub fn kernel_k0(
    profile: &VelocityProfile,
    interaction: &Interaction,
    k: i64,
    t: f64,
) -> Result<Complex64> {
    if k == 0 {
        return Err(invalid("k", "the memory kernel is defined for k != 0"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be non-negative, got {t}")));
    }
    let kf = k as f64;
    Ok(-4.0 * PI * PI * interaction.what(k) * kf * kf * t * profile.ft(kf * t))
}

/// Accuracy controls for the half-line integrals over the strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripQuadrature {
    /// Relative truncation tolerance for the tail beyond the cutoff.
    pub rel_tol: f64,
    /// Explicit cutoff in the scaled variable `u = |k| t`; chosen from the
    /// profile's decay majorant when `None`.
    pub t_max: Option<f64>,
}

impl Default for StripQuadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            t_max: None,
        }
    }
}

/// Precomputed quadrature for `I(zeta) = int_0^inf exp(2 pi zeta u) u g(u) du`
/// where `g(u) = f0~(s u)` (signed) or `|f0~(s u)|` (modulus), `s = sign(k)`.
///
/// After the substitution `u = |k| t` both the stability functional and the
/// Fourier-Laplace transform of the kernel reduce to `-4 pi^2 W^(k) I(xi*)`, so
/// the k dependence enters only through `W^(k)` and the sign of k.
#[derive(Debug, Clone)]
pub struct StripEvaluator {
    nodes: Vec<f64>,
    coeffs: Vec<Complex64>,
    re_max: f64,
    cutoff: f64,
    tail_estimate: f64,
}

impl StripEvaluator {
    /// Rule valid for `Re zeta <= re_max` and `|Im zeta| <= im_max`.
    pub fn new(
        profile: &VelocityProfile,
        sign: f64,
        modulus: bool,
        re_max: f64,
        im_max: f64,
        quad: &StripQuadrature,
    ) -> Result<Self> {
        let lambda = profile.lambda();
        if re_max >= lambda && !profile.has_closed_form_ft() || re_max > lambda {
            return Err(Error::Divergent {
                re_xi: re_max,
                lambda,
            });
        }
        let growth = 2.0 * PI * re_max.max(0.0);
        let majorant = |u: f64| (growth * u).exp() * u * profile.ft_abs_bound(u);
        let h = (0.5 * profile.eta_scale())
            .min(0.5 / (im_max.abs() + 1e-12))
            .min(0.5 / (growth + 1e-12));

        let (cutoff, tail_estimate) = match quad.t_max {
            Some(u) if u > 0.0 => (u, tail_integral(profile, re_max, u, &majorant)),
            Some(u) => return Err(invalid("t_max", format!("must be positive, got {u}"))),
            None => {
                // march outward past the majorant's peak until it is negligible
                let mut peak = 0.0f64;
                let mut u = h;
                loop {
                    let m = majorant(u);
                    peak = peak.max(m);
                    if (m < 1e-18 * peak && u > 4.0 * h) || u > 1e4 {
                        break;
                    }
                    u += h;
                }
                (u, tail_integral(profile, re_max, u, &majorant))
            }
        };

        let panels = (cutoff / h).ceil() as usize;
        let (nodes, weights) = GaussLegendre::sixteen().composite(0.0, cutoff, panels);
        let mut scale = 0.0;
        let coeffs: Vec<Complex64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&u, &w)| {
                let g = profile.ft(sign * u);
                let g = if modulus { Complex64::new(g.norm(), 0.0) } else { g };
                scale += w * u * g.norm() * (growth * u).exp();
                w * u * g
            })
            .collect();
        if scale > 0.0 && tail_estimate > quad.rel_tol * scale {
            return Err(invalid(
                "t_max",
                format!("cutoff {cutoff} leaves an estimated tail {tail_estimate:e} above tolerance"),
            ));
        }
        Ok(Self {
            nodes,
            coeffs,
            re_max,
            cutoff,
            tail_estimate,
        })
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        debug_assert!(zeta.re <= self.re_max + 1e-12);
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(&u, &c)| c * (2.0 * PI * zeta * u).exp())
            .sum()
    }

    /// `dI/dzeta`.
    pub fn eval_derivative(&self, zeta: Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(&u, &c)| c * 2.0 * PI * u * (2.0 * PI * zeta * u).exp())
            .sum()
    }

    /// `sup |dI/dzeta|` over `Re zeta <= re_max`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(&u, &c)| c.norm() * 2.0 * PI * u * (2.0 * PI * self.re_max * u).exp())
            .sum()
    }

    /// `int_0^inf exp(2 pi re_max u) u |g(u)| du`.
    pub fn abs_moment(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(&u, &c)| c.norm() * (2.0 * PI * self.re_max * u).exp())
            .sum()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }
}

// Tail of the majorant integral beyond `u0`: closed form for the exponential
// majorant of quadrature profiles, numerical over [u0, 4 u0 + 1] otherwise.
fn tail_integral(profile: &VelocityProfile, re_max: f64, u0: f64, majorant: &dyn Fn(f64) -> f64) -> f64 {
    if profile.has_closed_form_ft() {
        let (xs, ws) = GaussLegendre::sixteen().composite(u0, 4.0 * u0 + 1.0, 64);
        xs.iter().zip(&ws).map(|(&u, &w)| w * majorant(u)).sum()
    } else {
        let c = 2.0 * PI * (profile.lambda() - re_max);
        profile.c0() * (-c * u0).exp() * (u0 / c + 1.0 / (c * c))
    }
}

/// Stability functional
/// `L(k, xi) = -4 pi^2 W^(k) int_0^inf exp(2 pi |k| conj(xi) t) |f0~(k t)| |k|^2 t dt`,
/// with the modulus on the transform and the conjugate of `xi`.
pub fn dispersion_l(
    profile: &VelocityProfile,
    interaction: &Interaction,
    k: i64,
    xi: Complex64,
    quad: &StripQuadrature,
) -> Result<Complex64> {
    strip_functional(profile, interaction, k, xi, quad, true)
}

/// Fourier-Laplace transform of the kernel in the same variables,
/// `int_0^inf exp(2 pi |k| conj(xi) t) K0(t, k) dt`. Mode solutions behave like
/// `exp(-2 pi |k| xi t)` at its roots.
pub fn fourier_laplace_k0(
    profile: &VelocityProfile,
    interaction: &Interaction,
    k: i64,
    xi: Complex64,
    quad: &StripQuadrature,
) -> Result<Complex64> {
    strip_functional(profile, interaction, k, xi, quad, false)
}

fn strip_functional(
    profile: &VelocityProfile,
    interaction: &Interaction,
    k: i64,
    xi: Complex64,
    quad: &StripQuadrature,
    modulus: bool,
) -> Result<Complex64> {
    if k == 0 {
        return Err(invalid("k", "defined for k != 0"));
    }
    if xi.re >= profile.lambda() {
        return Err(Error::Divergent {
            re_xi: xi.re,
            lambda: profile.lambda(),
        });
    }
    let w = interaction.what(k);
    if w == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sign = (k as f64).signum();
    let eval = StripEvaluator::new(profile, sign, modulus, xi.re.max(0.0), xi.im, quad)?;
    Ok(-4.0 * PI * PI * w * eval.eval(xi.conj()))
}
