use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::models::{Interaction, VelocityProfile};

use super::kernel::{StripEvaluator, StripQuadrature};

#[derive(Debug, Clone, PartialEq)]
pub struct RootScanSpec {
    /// Widest strip tested; defaults to the profile's analyticity width.
    pub re_max: Option<f64>,
    /// Minimal admissible distance `|K0^ - 1|` along a strip boundary.
    pub gap: f64,
    /// Half-height of the `Im xi` window; chosen from the decay of the
    /// transform when `None`.
    pub im_window: Option<f64>,
    /// Bisection tolerance on the strip width.
    pub tol: f64,
    pub quad: StripQuadrature,
}

impl Default for RootScanSpec {
    fn default() -> Self {
        Self {
            re_max: None,
            gap: 1e-6,
            im_window: None,
            tol: 1e-10,
            quad: StripQuadrature::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    pub k: i64,
    /// Largest strip width `0 <= Re xi <= lambda_star` free of roots of
    /// `K0^(xi) = 1` and keeping the gap.
    pub lambda_star: f64,
    /// Predicted decay rate of the mode, `2 pi |k| lambda_star`, since the
    /// transform is taken against `exp(2 pi |k| conj(xi) t)`.
    pub rate: f64,
    /// Dominant root in the `xi` variable, when one bounds the strip.
    pub root: Option<Complex64>,
    /// True when no root was met before the profile's analyticity width, so
    /// the source term limits the decay.
    pub limited_by_profile: bool,
    pub im_window: f64,
}

struct Line {
    winding: i64,
    min_dist: f64,
    argmin: f64,
}

/// Finds the widest root-free strip of the kernel's Fourier-Laplace transform.
///
/// For each tested width `a`, the boundary line `Re xi = a` is traversed and
/// the winding number of `1 - K0^` counts the roots with `Re xi < a` (the
/// transform tends to 0 far to the left, so the line closes at infinity).
/// The width is then bisected to the first root.
pub fn root_scan(
    profile: &VelocityProfile,
    interaction: &Interaction,
    k: i64,
    spec: &RootScanSpec,
) -> Result<RootScan> {
    if k == 0 {
        return Err(invalid("k", "defined for k != 0"));
    }
    let re_max = spec.re_max.unwrap_or(profile.lambda());
    if !(re_max > 0.0) || re_max > profile.lambda() {
        return Err(invalid(
            "re_max",
            format!("strip must lie inside 0 <= Re xi <= {}", profile.lambda()),
        ));
    }
    let kf = (k as f64).abs();
    let coupling = -4.0 * PI * PI * interaction.what(k);
    if coupling == 0.0 {
        return Ok(RootScan {
            k,
            lambda_star: re_max,
            rate: 2.0 * PI * kf * re_max,
            root: None,
            limited_by_profile: true,
            im_window: 0.0,
        });
    }
    let sign = (k as f64).signum();

    let window = match spec.im_window {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(invalid("im_window", format!("must be positive, got {b}"))),
        None => {
            let mut b = 2.0;
            loop {
                let ev = StripEvaluator::new(profile, sign, false, re_max, b, &spec.quad)?;
                let edge = [0.0, re_max]
                    .iter()
                    .flat_map(|&a| [Complex64::new(a, b), Complex64::new(a, -b)])
                    .map(|z| (coupling * ev.eval(z)).norm())
                    .fold(0.0, f64::max);
                if edge < 0.25 || b >= 1024.0 {
                    break b;
                }
                b *= 2.0;
            }
        }
    };
    let ev = StripEvaluator::new(profile, sign, false, re_max, window, &spec.quad)?;
    let f = |z: Complex64| Complex64::new(1.0, 0.0) - coupling * ev.eval(z);

    let admissible = |line: &Line| line.winding == 0 && line.min_dist >= spec.gap;

    let at_zero = scan_line(&f, 0.0, window);
    if !admissible(&at_zero) {
        return Err(Error::NoGap(format!(
            "k = {k}: {} root(s) with Re xi < 0, min |K0^ - 1| = {:e} on Re xi = 0",
            at_zero.winding, at_zero.min_dist
        )));
    }
    let at_max = scan_line(&f, re_max, window);
    if admissible(&at_max) {
        return Ok(RootScan {
            k,
            lambda_star: re_max,
            rate: 2.0 * PI * kf * re_max,
            root: None,
            limited_by_profile: true,
            im_window: window,
        });
    }

    let (mut lo, mut hi) = (0.0, re_max);
    let mut hi_line = at_max;
    while hi - lo > spec.tol {
        let mid = 0.5 * (lo + hi);
        let line = scan_line(&f, mid, window);
        if admissible(&line) {
            lo = mid;
        } else {
            hi = mid;
            hi_line = line;
        }
    }

    // Newton in zeta = conj(xi), where the transform is analytic
    let mut z = Complex64::new(hi, hi_line.argmin);
    let mut root = None;
    for _ in 0..60 {
        let fz = f(z);
        let dfz = -coupling * ev.eval_derivative(z);
        let step = fz / dfz;
        z -= step;
        if !z.re.is_finite() || z.re > re_max {
            break;
        }
        if step.norm() < 1e-13 * (1.0 + z.norm()) {
            if f(z).norm() < 1e-9 {
                root = Some(z.conj());
            }
            break;
        }
    }

    Ok(RootScan {
        k,
        lambda_star: lo,
        rate: 2.0 * PI * kf * lo,
        root,
        limited_by_profile: false,
        im_window: window,
    })
}

/// Number of roots of `K0^(xi) = 1` with `Re xi < 0` (growing modes), by the
/// winding of `1 - K0^` along the imaginary axis.
pub fn unstable_root_count(
    profile: &VelocityProfile,
    interaction: &Interaction,
    k: i64,
    quad: &StripQuadrature,
) -> Result<i64> {
    if k == 0 {
        return Err(invalid("k", "defined for k != 0"));
    }
    let coupling = -4.0 * PI * PI * interaction.what(k);
    if coupling == 0.0 {
        return Ok(0);
    }
    let sign = (k as f64).signum();
    let mut b = 2.0;
    let ev = loop {
        let ev = StripEvaluator::new(profile, sign, false, 0.0, b, quad)?;
        let edge = (coupling * ev.eval(Complex64::new(0.0, b)))
            .norm()
            .max((coupling * ev.eval(Complex64::new(0.0, -b))).norm());
        if edge < 0.25 || b >= 1024.0 {
            break ev;
        }
        b *= 2.0;
    };
    let f = |z: Complex64| Complex64::new(1.0, 0.0) - coupling * ev.eval(z);
    Ok(scan_line(&f, 0.0, b).winding.abs())
}

fn scan_line(f: &dyn Fn(Complex64) -> Complex64, a: f64, window: f64) -> Line {
    let n = 256;
    let mut total_arg = 0.0;
    let mut min_dist = f64::INFINITY;
    let mut argmin = 0.0;
    let mut prev_s = -window;
    let mut prev = f(Complex64::new(a, prev_s));
    let track = |s: f64, w: Complex64, min_dist: &mut f64, argmin: &mut f64| {
        if w.norm() < *min_dist {
            *min_dist = w.norm();
            *argmin = s;
        }
    };
    track(prev_s, prev, &mut min_dist, &mut argmin);
    for i in 1..=n {
        let s = -window + 2.0 * window * i as f64 / n as f64;
        let w = f(Complex64::new(a, s));
        total_arg += refine(f, a, (prev_s, prev), (s, w), 0, &mut |s, w| {
            track(s, w, &mut min_dist, &mut argmin)
        });
        track(s, w, &mut min_dist, &mut argmin);
        prev_s = s;
        prev = w;
    }
    // close through the far left, where 1 - K0^ -> 1
    let first = f(Complex64::new(a, -window));
    total_arg += (first / prev).arg();
    Line {
        winding: (total_arg / (2.0 * PI)).round() as i64,
        min_dist,
        argmin,
    }
}

// Argument increment between two samples, bisecting until each piece turns by
// less than pi/8.
fn refine(
    f: &dyn Fn(Complex64) -> Complex64,
    a: f64,
    (s0, w0): (f64, Complex64),
    (s1, w1): (f64, Complex64),
    depth: usize,
    visit: &mut dyn FnMut(f64, Complex64),
) -> f64 {
    let d = (w1 / w0).arg();
    if d.abs() < PI / 8.0 || depth > 40 {
        return d;
    }
    let sm = 0.5 * (s0 + s1);
    let wm = f(Complex64::new(a, sm));
    visit(sm, wm);
    refine(f, a, (s0, w0), (sm, wm), depth + 1, visit) + refine(f, a, (sm, wm), (s1, w1), depth + 1, visit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_interaction, builtin_profile, InteractionKind};

    #[test]
    fn zero_interaction_is_profile_limited() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let r = root_scan(&p, &Interaction::none(), 1, &RootScanSpec::default()).unwrap();
        assert_eq!(r.lambda_star, p.lambda());
        assert!(r.limited_by_profile);
    }

    #[test]
    fn classic_landau_root_at_half_debye() {
        // strength 16 pi^2 gives omega_p = 4 pi and k lambda_D = 1/2 at k = 1;
        // the textbook root is omega / omega_p = 1.4156, gamma / omega_p = 0.1533
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let w = builtin_interaction(InteractionKind::Coulomb, 16.0 * PI * PI, None).unwrap();
        let r = root_scan(&p, &w, 1, &RootScanSpec::default()).unwrap();
        assert!(!r.limited_by_profile);
        let wp = 4.0 * PI;
        assert!((r.rate / wp - 0.1533).abs() < 5e-4, "gamma/wp = {}", r.rate / wp);
        let root = r.root.expect("root refined");
        let omega = (2.0 * PI * root.im).abs();
        assert!((omega / wp - 1.4156).abs() < 5e-4, "omega/wp = {}", omega / wp);
        assert!((root.re - r.lambda_star).abs() < 1e-6);
    }

    #[test]
    fn super_jeans_newton_has_no_gap() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        // Jeans threshold for k = 1 is strength 4 pi^2
        let w = builtin_interaction(InteractionKind::Newton, 2.0 * 4.0 * PI * PI, None).unwrap();
        assert!(matches!(root_scan(&p, &w, 1, &RootScanSpec::default()), Err(Error::NoGap(_))));
        // a single real growing root
        assert_eq!(unstable_root_count(&p, &w, 1, &StripQuadrature::default()).unwrap(), 1);
        let w = builtin_interaction(InteractionKind::Newton, 0.5 * 4.0 * PI * PI, None).unwrap();
        assert!(root_scan(&p, &w, 1, &RootScanSpec::default()).is_ok());
        assert_eq!(unstable_root_count(&p, &w, 1, &StripQuadrature::default()).unwrap(), 0);
    }

    #[test]
    fn weak_coupling_reaches_profile_width() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let w = builtin_interaction(InteractionKind::Coulomb, 1.0, None).unwrap();
        let r = root_scan(&p, &w, 1, &RootScanSpec::default()).unwrap();
        assert_eq!(r.lambda_star, p.lambda());
    }
}
