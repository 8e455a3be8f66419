use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Truncation order of the derivative series `sum_n lambda^n / n! ||f0^(n)||_L1`.
pub const GRADIENT_SERIES_ORDER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFamily {
    Maxwellian,
    BiMaxwellian,
    BumpOnTail,
    Custom,
}

impl ProfileFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "maxwellian" => Ok(Self::Maxwellian),
            "bi_maxwellian" => Ok(Self::BiMaxwellian),
            "bump_on_tail" => Ok(Self::BumpOnTail),
            _ => Err(Error::UnknownName {
                what: "profile",
                name: name.to_string(),
            }),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Maxwellian => "maxwellian",
            Self::BiMaxwellian => "bi_maxwellian",
            Self::BumpOnTail => "bump_on_tail",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ProfileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One weighted normal density `weight * N(mean, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub theta: f64,
}

impl GaussianComponent {
    fn sigma(&self) -> f64 {
        self.theta.sqrt()
    }

    fn eval(&self, v: f64) -> f64 {
        let d = v - self.mean;
        self.weight * (-d * d / (2.0 * self.theta)).exp() / (2.0 * PI * self.theta).sqrt()
    }

    fn deriv(&self, v: f64) -> f64 {
        -(v - self.mean) / self.theta * self.eval(v)
    }

    /// n-th derivative through the probabilists' Hermite polynomials.
    fn nth_deriv(&self, n: usize, v: f64) -> f64 {
        let s = self.sigma();
        let x = (v - self.mean) / s;
        let he = hermite_he(n, x);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * he * self.eval(v) / s.powi(n as i32)
    }

    fn ft(&self, eta: f64) -> Complex64 {
        let mag = self.weight * (-2.0 * PI * PI * self.theta * eta * eta).exp();
        Complex64::from_polar(mag, -2.0 * PI * eta * self.mean)
    }
}

fn hermite_he(n: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = x;
    for k in 1..n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Mixture(Vec<GaussianComponent>),
    Custom { eval: ScalarFn, support: f64 },
}

/// Homogeneous equilibrium `f0(v)` with its velocity Fourier transform
/// `f0~(eta) = int f0(v) exp(-2 i pi eta v) dv` and analyticity constants:
/// `sup_eta |f0~(eta)| exp(2 pi lambda |eta|) <= c0`.
#[derive(Clone)]
pub struct VelocityProfile {
    family: ProfileFamily,
    shape: Shape,
    lambda: f64,
    c0: f64,
}

impl fmt::Debug for VelocityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("VelocityProfile");
        d.field("family", &self.family);
        match &self.shape {
            Shape::Mixture(c) => d.field("components", c),
            Shape::Custom { support, .. } => d.field("support", support),
        };
        d.field("lambda", &self.lambda).field("c0", &self.c0).finish()
    }
}

impl VelocityProfile {
    /// Profile given by a pointwise density. Its transform is evaluated by
    /// quadrature on `[-support, support]`; `lambda`, `c0` are the caller's
    /// claimed analyticity constants.
    pub fn custom<F>(eval: F, support: f64, lambda: f64, c0: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support > 0.0) {
            return Err(invalid("support", "must be positive"));
        }
        check_constants(lambda, c0)?;
        Ok(Self {
            family: ProfileFamily::Custom,
            shape: Shape::Custom {
                eval: Arc::new(eval),
                support,
            },
            lambda,
            c0,
        })
    }

    /// Normalized Gaussian mixture with computed constants.
    pub fn mixture(family: ProfileFamily, components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "empty mixture"));
        }
        for c in &components {
            if !(c.theta > 0.0) || !c.theta.is_finite() {
                return Err(invalid("theta", format!("temperature must be positive, got {}", c.theta)));
            }
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(invalid("weight", format!("must lie in [0, 1], got {}", c.weight)));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weight", format!("weights sum to {total}, expected 1")));
        }
        let mut p = Self {
            family,
            shape: Shape::Mixture(components),
            lambda: 1.0,
            c0: 1.0,
        };
        let (lambda, c0) = p.mixture_constants();
        p.lambda = lambda;
        p.c0 = c0;
        Ok(p)
    }

    /// Overrides the analyticity constants (for checking alternative claims).
    pub fn with_constants(mut self, lambda: f64, c0: f64) -> Result<Self> {
        check_constants(lambda, c0)?;
        self.lambda = lambda;
        self.c0 = c0;
        Ok(self)
    }

    // lambda = sqrt(min theta) makes every component's exponent
    // lambda^2 / (2 theta_i) at most 1/2. c0 covers both the transform bound
    // sum_i w_i exp(lambda^2 / (2 theta_i)) and the truncated derivative
    // series plus its remainder, with 5% headroom.
    fn mixture_constants(&self) -> (f64, f64) {
        let comps = self.components().expect("mixture");
        let theta_min = comps.iter().map(|c| c.theta).fold(f64::INFINITY, f64::min);
        let lambda = theta_min.sqrt();
        let ft_bound: f64 = comps
            .iter()
            .map(|c| c.weight * (lambda * lambda / (2.0 * c.theta)).exp())
            .sum();
        let (series, remainder) = self
            .gradient_series(lambda, GRADIENT_SERIES_ORDER)
            .expect("closed-form profile");
        (lambda, 1.05 * ft_bound.max(series + remainder))
    }

    pub fn family(&self) -> ProfileFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn has_closed_form_ft(&self) -> bool {
        matches!(self.shape, Shape::Mixture(_))
    }

    pub fn components(&self) -> Option<&[GaussianComponent]> {
        match &self.shape {
            Shape::Mixture(c) => Some(c),
            Shape::Custom { .. } => None,
        }
    }

    /// Whether `f0(v) = f0(-v)`.
    pub fn is_even(&self) -> bool {
        match &self.shape {
            Shape::Mixture(c) => c.iter().all(|c| c.mean == 0.0 || c.weight == 0.0),
            Shape::Custom { eval, support } => {
                (0..64).all(|i| {
                    let v = support * i as f64 / 64.0;
                    eval(v) == eval(-v)
                })
            }
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match &self.shape {
            Shape::Mixture(c) => c.iter().map(|c| c.eval(v)).sum(),
            Shape::Custom { eval, .. } => eval(v),
        }
    }

    pub fn deriv(&self, v: f64) -> f64 {
        match &self.shape {
            Shape::Mixture(c) => c.iter().map(|c| c.deriv(v)).sum(),
            Shape::Custom { eval, .. } => {
                let h = 1e-4;
                (eval(v - 2.0 * h) - 8.0 * eval(v - h) + 8.0 * eval(v + h) - eval(v + 2.0 * h))
                    / (12.0 * h)
            }
        }
    }

    /// n-th velocity derivative; closed-form families only.
    pub fn nth_deriv(&self, n: usize, v: f64) -> Option<f64> {
        self.components()
            .map(|c| c.iter().map(|c| c.nth_deriv(n, v)).sum())
    }

    /// Velocity Fourier transform (closed form or quadrature).
    pub fn ft(&self, eta: f64) -> Complex64 {
        match &self.shape {
            Shape::Mixture(c) => c.iter().map(|c| c.ft(eta)).sum(),
            Shape::Custom { .. } => self.ft_quadrature(eta),
        }
    }

    /// Transform by the trapezoidal rule on the profile's support. For smooth
    /// densities that vanish at the support edges this is spectrally accurate.
    pub fn ft_quadrature(&self, eta: f64) -> Complex64 {
        let s = self.support();
        let n = 8192;
        let h = 2.0 * s / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let v = -s + j as f64 * h;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += Complex64::from_polar(w * self.eval(v), -2.0 * PI * eta * v);
        }
        acc * h
    }

    /// Total mass by the trapezoidal rule on the support.
    pub fn mass_quadrature(&self) -> f64 {
        self.ft_quadrature(0.0).re
    }

    /// Velocity half-width outside which the density is negligible.
    pub fn support(&self) -> f64 {
        match &self.shape {
            Shape::Mixture(c) => c
                .iter()
                .map(|c| c.mean.abs() + 40.0 * c.sigma())
                .fold(0.0, f64::max),
            Shape::Custom { support, .. } => *support,
        }
    }

    /// Monotone majorant of `|f0~(u)|` for `u >= 0`.
    pub fn ft_abs_bound(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Mixture(c) => c
                .iter()
                .map(|c| c.weight * (-2.0 * PI * PI * c.theta * u * u).exp())
                .sum(),
            Shape::Custom { .. } => self.c0 * (-2.0 * PI * self.lambda * u.abs()).exp(),
        }
    }

    /// Frequency scale on which `f0~` varies; sets quadrature panel widths.
    pub fn eta_scale(&self) -> f64 {
        match &self.shape {
            Shape::Mixture(c) => c
                .iter()
                .map(|c| (1.0 / (2.0 * PI * c.sigma())).min(1.0 / (2.0 * PI * c.mean.abs() + 1e-300)))
                .fold(f64::INFINITY, f64::min),
            Shape::Custom { support, .. } => 1.0 / (2.0 * PI * support),
        }
    }

    /// Truncated series `sum_{n <= order} lambda^n / n! ||f0^(n)||_L1` with a
    /// bound on the omitted tail, from `||He_n phi||_L1 <= sqrt(n!)`.
    pub fn gradient_series(&self, lambda: f64, order: usize) -> Option<(f64, f64)> {
        let comps = self.components()?;
        let sigma_min = comps.iter().map(|c| c.sigma()).fold(f64::INFINITY, f64::min);
        let lo = comps
            .iter()
            .map(|c| c.mean - (12.0 + 2.0 * (order as f64).sqrt()) * c.sigma())
            .fold(f64::INFINITY, f64::min);
        let hi = comps
            .iter()
            .map(|c| c.mean + (12.0 + 2.0 * (order as f64).sqrt()) * c.sigma())
            .fold(f64::NEG_INFINITY, f64::max);
        let n_pts = (((hi - lo) / (sigma_min / 64.0)).ceil() as usize).max(256);
        let h = (hi - lo) / n_pts as f64;
        let mut sum = 0.0;
        let mut coef = 1.0; // lambda^n / n!
        for n in 0..=order {
            let l1: f64 = (0..=n_pts)
                .map(|j| self.nth_deriv(n, lo + j as f64 * h).unwrap().abs())
                .sum::<f64>()
                * h;
            sum += coef * l1;
            coef *= lambda / (n + 1) as f64;
        }
        let mut remainder = 0.0;
        for c in comps {
            let r = lambda / c.sigma();
            // term_n = w r^n / sqrt(n!), summed until negligible
            let mut log_term = (order as f64 + 1.0) * r.ln() - 0.5 * ln_factorial(order + 1);
            let mut n = order + 1;
            loop {
                let t = c.weight * log_term.exp();
                remainder += t;
                if t < 1e-300 || n > order + 400 {
                    break;
                }
                n += 1;
                log_term += r.ln() - 0.5 * (n as f64).ln();
            }
        }
        Some((sum, remainder))
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn check_constants(lambda: f64, c0: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("must be non-negative, got {lambda}")));
    }
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(invalid("c0", format!("must be positive, got {c0}")));
    }
    Ok(())
}

fn param(params: &[f64], idx: usize, default: f64) -> f64 {
    params.get(idx).copied().unwrap_or(default)
}

/// Built-in analytic profiles.
///
/// * `maxwellian [theta=1]`
/// * `bi_maxwellian [theta_core=1, theta_halo=4, halo_weight=0.2]`: core plus halo
/// * `bump_on_tail [weight=0.1, drift=3, beam_theta=0.25, bulk_theta=1]`
pub fn builtin_profile(name: &str, params: &[f64]) -> Result<VelocityProfile> {
    let family = ProfileFamily::parse(name)?;
    if params.iter().any(|p| !p.is_finite()) {
        return Err(invalid("params", "non-finite parameter"));
    }
    let comps = match family {
        ProfileFamily::Maxwellian => {
            if params.len() > 1 {
                return Err(invalid("params", "maxwellian takes [theta]"));
            }
            vec![GaussianComponent {
                weight: 1.0,
                mean: 0.0,
                theta: param(params, 0, 1.0),
            }]
        }
        ProfileFamily::BiMaxwellian => {
            if params.len() > 3 {
                return Err(invalid("params", "bi_maxwellian takes [theta_core, theta_halo, halo_weight]"));
            }
            let w = param(params, 2, 0.2);
            vec![
                GaussianComponent {
                    weight: 1.0 - w,
                    mean: 0.0,
                    theta: param(params, 0, 1.0),
                },
                GaussianComponent {
                    weight: w,
                    mean: 0.0,
                    theta: param(params, 1, 4.0),
                },
            ]
        }
        ProfileFamily::BumpOnTail => {
            if params.len() > 4 {
                return Err(invalid("params", "bump_on_tail takes [weight, drift, beam_theta, bulk_theta]"));
            }
            let w = param(params, 0, 0.1);
            vec![
                GaussianComponent {
                    weight: 1.0 - w,
                    mean: 0.0,
                    theta: param(params, 3, 1.0),
                },
                GaussianComponent {
                    weight: w,
                    mean: param(params, 1, 3.0),
                    theta: param(params, 2, 0.25),
                },
            ]
        }
        ProfileFamily::Custom => unreachable!("parse never yields custom"),
    };
    // zero-weight components are dropped so degenerate parameters reduce exactly
    let comps: Vec<_> = if comps.iter().all(|c| (0.0..=1.0).contains(&c.weight)) {
        comps.into_iter().filter(|c| c.weight != 0.0).collect()
    } else {
        comps
    };
    VelocityProfile::mixture(family, comps)
}

/// Marginal of `f0` along a unit direction. Profiles are one-dimensional, so
/// the direction is a unit vector of R^1 and `phi(z) = f0(z * direction)`.
pub fn marginal_phi(profile: &VelocityProfile, direction: &[f64], z: f64) -> Result<f64> {
    let d = unit_direction(direction)?;
    Ok(profile.eval(z * d))
}

/// `phi'(z)` for the marginal of [`marginal_phi`].
pub fn marginal_phi_derivative(profile: &VelocityProfile, direction: &[f64], z: f64) -> Result<f64> {
    let d = unit_direction(direction)?;
    Ok(d * profile.deriv(z * d))
}

fn unit_direction(direction: &[f64]) -> Result<f64> {
    match direction {
        [d] if (d.abs() - 1.0).abs() < 1e-12 => Ok(d.signum()),
        [_] => Err(invalid("direction", "must have unit length")),
        _ => Err(invalid(
            "direction",
            format!("profiles are one-dimensional, got a {}-vector", direction.len()),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondF0Report {
    /// First inequality: `worst_ratio <= 1`.
    pub pass: bool,
    /// `max_eta |f0~(eta)| exp(2 pi lambda |eta|) / c0` over the samples.
    pub worst_ratio: f64,
    pub worst_eta: f64,
    /// Derivative series (plus remainder) over `c0`, closed-form families only.
    pub series_ratio: Option<f64>,
    pub series_remainder: Option<f64>,
}

/// Samples the analyticity bound on `n_samples` points of `[0, eta_max]` and
/// their mirror images.
pub fn verify_cond_f0(profile: &VelocityProfile, eta_max: f64, n_samples: usize) -> Result<CondF0Report> {
    if !(eta_max > 0.0) {
        return Err(invalid("eta_max", "must be positive"));
    }
    if n_samples < 2 {
        return Err(invalid("n_samples", "need at least 2 samples"));
    }
    let lambda = profile.lambda();
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_eta = 0.0;
    for i in 0..n_samples {
        let eta = eta_max * i as f64 / (n_samples - 1) as f64;
        for e in [eta, -eta] {
            let r = profile.ft(e).norm() * (2.0 * PI * lambda * e.abs()).exp() / profile.c0();
            if r > worst_ratio {
                worst_ratio = r;
                worst_eta = e;
            }
        }
    }
    let series = profile.gradient_series(lambda, GRADIENT_SERIES_ORDER);
    Ok(CondF0Report {
        pass: worst_ratio <= 1.0,
        worst_ratio,
        worst_eta,
        series_ratio: series.map(|(s, r)| (s + r) / profile.c0()),
        series_remainder: series.map(|(_, r)| r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maxwellian() -> VelocityProfile {
        builtin_profile("maxwellian", &[1.0]).unwrap()
    }

    #[test]
    fn maxwellian_ft_matches_quadrature() {
        let p = maxwellian();
        for i in 0..100 {
            let eta = -3.0 + 6.0 * i as f64 / 99.0;
            let closed = p.ft(eta);
            assert!((closed.re - (-2.0 * PI * PI * eta * eta).exp()).abs() < 1e-15);
            assert!((closed - p.ft_quadrature(eta)).norm() < 1e-8, "eta = {eta}");
        }
        assert_eq!(p.ft(0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn builtins_normalized_and_consistent() {
        let profiles = [
            builtin_profile("maxwellian", &[]).unwrap(),
            builtin_profile("maxwellian", &[0.3]).unwrap(),
            builtin_profile("bi_maxwellian", &[]).unwrap(),
            builtin_profile("bump_on_tail", &[0.1, 3.0]).unwrap(),
        ];
        for p in &profiles {
            assert!((p.mass_quadrature() - 1.0).abs() < 1e-10);
            for i in 0..100 {
                let eta = -3.0 + 6.0 * i as f64 / 99.0;
                assert!((p.ft(eta) - p.ft_quadrature(eta)).norm() < 1e-8);
                // conjugate symmetry of a real density
                assert!((p.ft(-eta) - p.ft(eta).conj()).norm() < 1e-15);
            }
            for i in 0..200 {
                assert!(p.eval(-10.0 + 0.1 * i as f64) >= 0.0);
            }
        }
    }

    #[test]
    fn bump_on_tail_zero_weight_is_maxwellian() {
        let b = builtin_profile("bump_on_tail", &[0.0, 3.0]).unwrap();
        let m = maxwellian();
        for i in 0..50 {
            let v = -5.0 + 0.2 * i as f64;
            assert_eq!(b.eval(v), m.eval(v));
            assert_eq!(b.ft(v), m.ft(v));
        }
        assert_eq!(b.lambda(), m.lambda());
        assert_eq!(b.c0(), m.c0());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(builtin_profile("kappa", &[]), Err(Error::UnknownName { .. })));
        assert!(builtin_profile("maxwellian", &[0.0]).is_err());
        assert!(builtin_profile("maxwellian", &[-1.0]).is_err());
        assert!(builtin_profile("bump_on_tail", &[1.5, 3.0]).is_err());
        assert!(builtin_profile("bi_maxwellian", &[1.0, -2.0]).is_err());
    }

    #[test]
    fn nth_derivative_matches_finite_differences() {
        let p = builtin_profile("bump_on_tail", &[0.2, 2.0, 0.5]).unwrap();
        let h = 1e-3;
        for v in [-1.3, 0.0, 0.7, 2.4] {
            for n in 1..4 {
                let fd = (p.nth_deriv(n - 1, v + h).unwrap() - p.nth_deriv(n - 1, v - h).unwrap()) / (2.0 * h);
                assert!((fd - p.nth_deriv(n, v).unwrap()).abs() < 1e-5, "n={n} v={v}");
            }
            assert!((p.deriv(v) - p.nth_deriv(1, v).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_values() {
        let p = maxwellian();
        let phi0 = marginal_phi(&p, &[1.0], 0.0).unwrap();
        assert!((phi0 - 0.3989422804014327).abs() < 1e-15);
        for z in [0.3, 1.0, 2.7] {
            assert_eq!(marginal_phi(&p, &[1.0], z).unwrap(), marginal_phi(&p, &[1.0], -z).unwrap());
            assert_eq!(marginal_phi(&p, &[-1.0], z).unwrap(), marginal_phi(&p, &[1.0], z).unwrap());
        }
        let b = builtin_profile("bump_on_tail", &[0.1, 3.0]).unwrap();
        // direct evaluation oracle of the mixture at z = 3
        let bulk = 0.9 * (-4.5f64).exp() / (2.0 * PI).sqrt();
        let beam = 0.1 / (2.0 * PI * 0.25f64).sqrt();
        let phi3 = marginal_phi(&b, &[1.0], 3.0).unwrap();
        assert!((phi3 - (bulk + beam)).abs() < 1e-15);
        assert!(phi3 > marginal_phi(&p, &[1.0], 3.0).unwrap());
        assert!(marginal_phi(&p, &[0.5], 1.0).is_err());
        assert!(marginal_phi(&p, &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn cond_f0_examples() {
        // max of exp(-2 pi^2 eta^2 + 2 pi eta) is exp(1/2) at eta = 1/(2 pi)
        let p = maxwellian().with_constants(1.0, 2.0).unwrap();
        let r = verify_cond_f0(&p, 3.0, 20001).unwrap();
        assert!(r.pass);
        assert!((r.worst_ratio - 0.5f64.exp() / 2.0).abs() < 1e-6);
        assert!((r.worst_eta.abs() - 1.0 / (2.0 * PI)).abs() < 1e-3);

        let p = maxwellian().with_constants(0.5, 0.9).unwrap();
        assert!(!verify_cond_f0(&p, 3.0, 101).unwrap().pass);

        let p = maxwellian().with_constants(0.0, 3.0).unwrap();
        let r = verify_cond_f0(&p, 3.0, 101).unwrap();
        assert_eq!(r.worst_ratio, 1.0 / 3.0);
        assert_eq!(r.worst_eta, 0.0);
    }

    #[test]
    fn builtin_constants_pass_both_inequalities() {
        for (name, params) in [
            ("maxwellian", vec![]),
            ("maxwellian", vec![2.0]),
            ("bi_maxwellian", vec![]),
            ("bump_on_tail", vec![]),
        ] {
            let p = builtin_profile(name, &params).unwrap();
            let r = verify_cond_f0(&p, 5.0, 2001).unwrap();
            assert!(r.pass, "{name}: {r:?}");
            let s = r.series_ratio.unwrap();
            assert!(s <= 1.0 && s > 0.5, "{name}: series ratio {s}");
            assert!(r.series_remainder.unwrap() < 1e-10);
        }
    }

    #[test]
    fn custom_profile_uses_quadrature() {
        let sech = |v: f64| 1.0 / (PI * v.cosh());
        // ft of sech(v)/pi is sech(pi^2 eta), analytic in |Im| < 1/(2 pi)
        let p = VelocityProfile::custom(sech, 60.0, 0.1, 1.2).unwrap();
        assert!(!p.has_closed_form_ft());
        assert!(p.nth_deriv(2, 0.0).is_none());
        for eta in [0.0, 0.1, 0.4] {
            let exact = 1.0 / (PI * PI * eta).cosh();
            assert!((p.ft(eta).re - exact).abs() < 1e-10);
        }
        assert!(p.is_even());
        let r = verify_cond_f0(&p, 3.0, 301).unwrap();
        assert!(r.pass);
        assert!(r.series_ratio.is_none());
    }
}
