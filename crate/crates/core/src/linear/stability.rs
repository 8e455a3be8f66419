use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::models::{builtin_interaction, marginal_phi_derivative, Interaction, InteractionKind, VelocityProfile};

use super::kernel::{StripEvaluator, StripQuadrature};

/// Sampling of the strip `0 <= Re xi <= lambda_strip`, `|Im xi| <= window`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripGrid {
    pub n_re: usize,
    /// Number of `Im xi` samples; forced odd so the real axis is sampled.
    pub n_im: usize,
    /// Half-height of the window. When `None` it is doubled from 2 until the
    /// functional falls below `(1 - kappa) / 2` on the window edges: beyond that
    /// the functional is the Fourier transform of an integrable function and
    /// keeps decaying.
    pub im_window: Option<f64>,
    pub quad: StripQuadrature,
}

impl Default for StripGrid {
    fn default() -> Self {
        Self {
            n_re: 16,
            n_im: 401,
            im_window: None,
            quad: StripQuadrature::default(),
        }
    }
}

/// Sampled evidence for the strip condition `inf |L(k, xi) - 1| >= kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Sampled minimum of `|L - 1|` over modes and strip grid.
    pub kappa_est: f64,
    pub kappa: f64,
    pub lambda_strip: f64,
    pub k_max: i64,
    pub n_re: usize,
    pub n_im: usize,
    pub im_window: f64,
    pub worst_k: i64,
    pub worst_xi: Complex64,
    /// `kappa_est` minus the largest change the functional can undergo
    /// between grid samples.
    pub lower_bound: f64,
    /// Largest `|L|` on the `Im xi = +-window` edges.
    pub edge_max: f64,
    /// Bound on `|L|` for all `|k| > k_max`.
    pub tail_bound: f64,
    pub tail_certified: bool,
    pub pass: bool,
}

impl StabilityReport {
    /// Flat `key = value` block.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "evidence = sampled");
        let _ = writeln!(s, "pass = {}", self.pass);
        let _ = writeln!(s, "kappa_est = {}", self.kappa_est);
        let _ = writeln!(s, "kappa = {}", self.kappa);
        let _ = writeln!(s, "lambda_strip = {}", self.lambda_strip);
        let _ = writeln!(s, "k_range = 1..{}", self.k_max);
        let _ = writeln!(s, "xi_grid = re:[0,{}]x{} im:[-{},{}]x{}", self.lambda_strip, self.n_re, self.im_window, self.im_window, self.n_im);
        let _ = writeln!(s, "worst_k = {}", self.worst_k);
        let _ = writeln!(s, "worst_xi = {}{:+}i", self.worst_xi.re, self.worst_xi.im);
        let _ = writeln!(s, "lower_bound = {}", self.lower_bound);
        let _ = writeln!(s, "edge_max = {}", self.edge_max);
        let _ = writeln!(s, "tail_bound = {}", self.tail_bound);
        let _ = writeln!(s, "tail_certified = {}", self.tail_certified);
        s
    }
}

/// Samples `|L(k, xi) - 1|` over the strip for `1 <= k <= k_max` and bounds
/// the remaining modes through the decay of the interaction.
///
/// `L(k, xi) = W^(k) J(xi)` where `J` does not depend on k (the modulus makes
/// `L(-k, .) = L(k, .)` for real profiles), so `J` is sampled once.
pub fn check_cond_l(
    profile: &VelocityProfile,
    interaction: &Interaction,
    lambda_strip: f64,
    kappa: f64,
    k_max: i64,
    grid: &StripGrid,
) -> Result<StabilityReport> {
    let r = sample_cond_l(profile, interaction, lambda_strip, kappa, k_max, grid)?;
    if r.pass && r.lower_bound <= 0.0 {
        return Err(Error::GridTooCoarse(format!(
            "sampled minimum {:e} but the functional may vary by {:e} between samples",
            r.kappa_est,
            r.kappa_est - r.lower_bound
        )));
    }
    Ok(r)
}

/// Bisects the interaction strength at which the sampled strip condition flips
/// from pass (at `lo`) to fail (at `hi`), to relative width `rel_tol`.
#[allow(clippy::too_many_arguments)]
pub fn strength_threshold(
    profile: &VelocityProfile,
    kind: InteractionKind,
    screening: Option<f64>,
    lambda_strip: f64,
    kappa: f64,
    k_max: i64,
    grid: &StripGrid,
    (mut lo, mut hi): (f64, f64),
    rel_tol: f64,
) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) || !(rel_tol > 0.0) {
        return Err(invalid("bracket", format!("need 0 < lo < hi and rel_tol > 0, got ({lo}, {hi}), {rel_tol}")));
    }
    let passes = |s: f64| -> Result<bool> {
        let w = builtin_interaction(kind, s, screening)?;
        Ok(sample_cond_l(profile, &w, lambda_strip, kappa, k_max, grid)?.pass)
    };
    if !passes(lo)? || passes(hi)? {
        return Err(invalid("bracket", "condition must pass at lo and fail at hi"));
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn sample_cond_l(
    profile: &VelocityProfile,
    interaction: &Interaction,
    lambda_strip: f64,
    kappa: f64,
    k_max: i64,
    grid: &StripGrid,
) -> Result<StabilityReport> {
    if !(lambda_strip > 0.0 && lambda_strip < profile.lambda()) {
        return Err(invalid(
            "lambda_strip",
            format!("must lie in (0, {}), got {lambda_strip}", profile.lambda()),
        ));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(invalid("kappa", format!("must lie in (0, 1), got {kappa}")));
    }
    if k_max < 1 {
        return Err(invalid("k_max", "must be at least 1"));
    }
    if grid.n_re < 2 || grid.n_im < 3 {
        return Err(Error::GridTooCoarse(format!(
            "{} x {} samples cannot cover the strip",
            grid.n_re, grid.n_im
        )));
    }
    let n_im = grid.n_im | 1;
    let w_max = interaction.max_abs_what(k_max);
    let scale = 4.0 * PI * PI * w_max;

    let window = match grid.im_window {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(invalid("im_window", format!("must be positive, got {b}"))),
        None => {
            let mut b = 2.0;
            loop {
                let ev = StripEvaluator::new(profile, 1.0, true, lambda_strip, b, &grid.quad)?;
                let edge = edge_max(&ev, lambda_strip, b, grid.n_re) * scale;
                if edge < 0.5 * (1.0 - kappa) || b >= 1024.0 {
                    break b;
                }
                b *= 2.0;
            }
        }
    };
    let ev = StripEvaluator::new(profile, 1.0, true, lambda_strip, window, &grid.quad)?;

    let re: Vec<f64> = (0..grid.n_re)
        .map(|i| lambda_strip * i as f64 / (grid.n_re - 1) as f64)
        .collect();
    let im: Vec<f64> = (0..n_im)
        .map(|j| -window + 2.0 * window * j as f64 / (n_im - 1) as f64)
        .collect();
    // J(xi) = -4 pi^2 I(conj xi)
    let j_vals: Vec<Complex64> = re
        .iter()
        .flat_map(|&a| im.iter().map(move |&b| Complex64::new(a, b)))
        .map(|xi| -4.0 * PI * PI * ev.eval(xi.conj()))
        .collect();

    let mut kappa_est = f64::INFINITY;
    let mut worst_k = 1;
    let mut worst_xi = Complex64::new(0.0, 0.0);
    for k in 1..=k_max {
        let w = interaction.what(k);
        for (idx, j) in j_vals.iter().enumerate() {
            let d = (w * j - 1.0).norm();
            if d < kappa_est {
                kappa_est = d;
                worst_k = k;
                worst_xi = Complex64::new(re[idx / n_im], im[idx % n_im]);
            }
        }
    }

    let h_re = lambda_strip / (grid.n_re - 1) as f64;
    let h_im = 2.0 * window / (n_im - 1) as f64;
    let lipschitz = scale * ev.lipschitz_bound();
    let lower_bound = kappa_est - 0.5 * lipschitz * h_re.hypot(h_im);
    let edge = edge_max(&ev, lambda_strip, window, grid.n_re) * scale;

    // |L(k, xi)| <= 4 pi^2 C_W / |k|^(1+gamma) * int |f0~(u)| exp(2 pi lambda u) u du
    let tail_bound = 4.0 * PI * PI * interaction.cw() * ev.abs_moment()
        / ((k_max + 1) as f64).powf(1.0 + interaction.gamma());
    let tail_certified = tail_bound < 1.0 - kappa;

    let pass = kappa_est >= kappa && tail_certified;
    Ok(StabilityReport {
        kappa_est,
        kappa,
        lambda_strip,
        k_max,
        n_re: grid.n_re,
        n_im,
        im_window: window,
        worst_k,
        worst_xi,
        lower_bound,
        edge_max: edge,
        tail_bound,
        tail_certified,
        pass,
    })
}

fn edge_max(ev: &StripEvaluator, lambda_strip: f64, window: f64, n_re: usize) -> f64 {
    (0..n_re)
        .map(|i| lambda_strip * i as f64 / (n_re - 1).max(1) as f64)
        .flat_map(|a| [Complex64::new(a, window), Complex64::new(a, -window)])
        .map(|z| ev.eval(z).norm())
        .fold(0.0, f64::max)
}

/// Sufficient condition (a): `W^(k) >= 0` for `1 <= k <= k_max` and
/// `z phi'(z) <= 0` at every sample, with `phi` the marginal along +1.
pub fn check_condition_a(
    profile: &VelocityProfile,
    interaction: &Interaction,
    z_samples: &[f64],
    k_max: i64,
) -> Result<bool> {
    if z_samples.is_empty() {
        return Err(invalid("z_samples", "no samples"));
    }
    if (1..=k_max).any(|k| interaction.what(k) < 0.0) {
        return Ok(false);
    }
    for &z in z_samples {
        if z * marginal_phi_derivative(profile, &[1.0], z)? > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Left-hand side of sufficient condition (b),
/// `4 pi^2 max_k |W^(k)| sup_{sigma = +-1} int_0^inf |f0~(r sigma)| r dr`;
/// the condition holds when it is below 1.
pub fn check_condition_b(profile: &VelocityProfile, interaction: &Interaction, k_max: i64) -> Result<f64> {
    if k_max < 1 {
        return Err(invalid("k_max", "must be at least 1"));
    }
    let w_max = interaction.max_abs_what(k_max);
    if w_max == 0.0 {
        return Ok(0.0);
    }
    let quad = StripQuadrature::default();
    let moment = [1.0, -1.0]
        .iter()
        .map(|&s| {
            StripEvaluator::new(profile, s, true, 0.0, 0.0, &quad)
                .map(|ev| ev.eval(Complex64::new(0.0, 0.0)).re)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(4.0 * PI * PI * w_max * moment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin_profile;

    fn maxwellian() -> VelocityProfile {
        builtin_profile("maxwellian", &[]).unwrap()
    }

    fn samples() -> Vec<f64> {
        (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect()
    }

    #[test]
    fn condition_a() {
        let c = builtin_interaction(InteractionKind::Coulomb, 1.0, None).unwrap();
        let n = builtin_interaction(InteractionKind::Newton, 1.0, None).unwrap();
        assert!(check_condition_a(&maxwellian(), &c, &samples(), 32).unwrap());
        assert!(!check_condition_a(&maxwellian(), &n, &samples(), 32).unwrap());
        let bump = builtin_profile("bump_on_tail", &[0.1, 3.0]).unwrap();
        // oracle: the bump's derivative is positive just below the drift
        let z = 2.7;
        let fd = (bump.eval(z + 1e-5) - bump.eval(z - 1e-5)) / 2e-5;
        assert!(fd > 0.0);
        assert!(!check_condition_a(&bump, &c, &samples(), 32).unwrap());
    }

    #[test]
    fn condition_b_gaussian_moment() {
        let c = builtin_interaction(InteractionKind::Coulomb, 1.0, None).unwrap();
        let m = check_condition_b(&maxwellian(), &c, 64).unwrap();
        // int_0^inf exp(-2 pi^2 r^2) r dr = 1/(4 pi^2): margin = W^(1)
        assert!((m - c.what(1)).abs() < 1e-12);
        assert!((m - 0.025330295910584444).abs() < 1e-12);
        assert_eq!(check_condition_b(&maxwellian(), &Interaction::none(), 8).unwrap(), 0.0);
    }

    #[test]
    fn zero_interaction_kappa_one() {
        let r = check_cond_l(&maxwellian(), &Interaction::none(), 0.5, 0.5, 8, &StripGrid::default()).unwrap();
        assert_eq!(r.kappa_est, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn weak_coulomb_passes_with_half_margin() {
        // sup |L| <= L(1, lambda_strip) on the real axis; pick the strength so
        // that bound is below 1/2
        let p = maxwellian();
        let lambda_strip = 0.5;
        let unit = builtin_interaction(InteractionKind::Coulomb, 1.0, None).unwrap();
        let at_edge = super::super::dispersion_l(&p, &unit, 1, Complex64::new(lambda_strip, 0.0), &StripQuadrature::default())
            .unwrap()
            .norm();
        let strength = 0.4 / at_edge;
        let w = builtin_interaction(InteractionKind::Coulomb, strength, None).unwrap();
        let r = check_cond_l(&p, &w, lambda_strip, 0.5, 8, &StripGrid::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.kappa_est >= 0.5);
        assert!(r.tail_certified);
        assert!(r.to_key_value().contains("pass = true"));
    }

    #[test]
    fn newton_at_jeans_strength_fails() {
        // L(1, 0) = strength / (4 pi^2) = 1 on the real axis
        let p = maxwellian();
        let w = builtin_interaction(InteractionKind::Newton, 4.0 * PI * PI, None).unwrap();
        let r = check_cond_l(&p, &w, 0.2, 0.05, 8, &StripGrid::default()).unwrap();
        assert!(!r.pass);
        assert!(r.kappa_est < 1e-10);
        assert_eq!(r.worst_k, 1);
        assert_eq!(r.worst_xi, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid = StripGrid {
            n_re: 1,
            ..StripGrid::default()
        };
        let r = check_cond_l(&maxwellian(), &Interaction::none(), 0.5, 0.5, 8, &grid);
        assert!(matches!(r, Err(Error::GridTooCoarse(_))));
        let w = builtin_interaction(InteractionKind::Coulomb, 150.0, None).unwrap();
        let grid = StripGrid {
            n_re: 2,
            n_im: 5,
            im_window: Some(40.0),
            ..StripGrid::default()
        };
        let r = check_cond_l(&maxwellian(), &w, 0.2, 0.01, 8, &grid);
        assert!(matches!(r, Err(Error::GridTooCoarse(_))), "{r:?}");
    }

    #[test]
    fn newton_threshold_matches_real_axis_oracle() {
        // |L(1, a + ib)| <= L(1, a) for a positive integrand, so the sampled
        // condition flips when s I(lambda_s) = 1 - kappa, with
        // I(a) = int_0^inf exp(2 pi a u - 2 pi^2 u^2) u du (Simpson oracle).
        let (ls, kappa) = (0.2, 0.1);
        let n = 20_000;
        let h = 4.0 / n as f64;
        let g = |u: f64| (2.0 * PI * ls * u - 2.0 * PI * PI * u * u).exp() * u;
        let mut i_ls = g(0.0) + g(4.0);
        for j in 1..n {
            i_ls += if j % 2 == 1 { 4.0 } else { 2.0 } * g(j as f64 * h);
        }
        i_ls *= h / 3.0;
        let want = (1.0 - kappa) / i_ls;
        let got = strength_threshold(
            &maxwellian(),
            InteractionKind::Newton,
            None,
            ls,
            kappa,
            4,
            &StripGrid { n_im: 101, ..StripGrid::default() },
            (1.0, 4.0 * PI * PI),
            1e-6,
        )
        .unwrap();
        assert!((got - want).abs() < 1e-5 * want, "{got} vs {want}");
        assert!(got < 4.0 * PI * PI);
    }
}
