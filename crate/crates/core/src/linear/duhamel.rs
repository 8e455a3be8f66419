use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::models::{Interaction, VelocityProfile};

use super::volterra::ModeHistory;

/// Solution of the linearized equation around `f0` in double Fourier variables,
/// by Duhamel's formula along free transport:
///
/// `h~(t,k,eta) = h~_i(k, eta + k t)
///     - int_0^t F^(s,k) 2 i pi (eta + k (t - s)) f0~(eta + k (t - s)) ds`
///
/// with `F^(s,k) = -2 i pi k W^(k) rho^(s,k)` taken from `rho`. The time
/// integral uses the trapezoidal rule on the history grid (plus a partial
/// last interval when `t` is off-grid), so at `eta = 0` it reproduces the
/// Volterra solution that produced `rho`.
pub fn linear_h_tilde<H>(
    profile: &VelocityProfile,
    interaction: &Interaction,
    rho: &ModeHistory,
    h_i_tilde: H,
    k: i64,
    eta: f64,
    t: f64,
) -> Result<Complex64>
where
    H: Fn(i64, f64) -> Complex64,
{
    if k == 0 {
        return Ok(h_i_tilde(0, eta));
    }
    if rho.k() != k {
        return Err(invalid("rho", format!("history is for mode {}, requested {k}", rho.k())));
    }
    if !(t >= rho.t0()) {
        return Err(invalid("t", format!("must be at least {}", rho.t0())));
    }
    if t > rho.horizon() + 1e-9 * rho.dt() {
        return Err(Error::BeyondHorizon {
            t,
            horizon: rho.horizon(),
        });
    }
    let kf = k as f64;
    let w = interaction.what(k);
    let free = h_i_tilde(k, eta + kf * t);
    if w == 0.0 {
        return Ok(free);
    }
    let integrand = |s: f64, rho_s: Complex64| {
        let force = Complex64::new(0.0, -2.0 * PI * kf * w) * rho_s;
        let arg = eta + kf * (t - s);
        force * Complex64::new(0.0, 2.0 * PI * arg) * profile.ft(arg)
    };
    let dt = rho.dt();
    let steps = (t - rho.t0()) / dt;
    let n = (steps + 1e-9).floor() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
        acc += wj * integrand(rho.time(j), rho.values()[j]);
    }
    acc *= dt;
    let partial = t - rho.time(n);
    if n == 0 {
        acc = Complex64::new(0.0, 0.0);
    }
    if partial > 1e-9 * dt {
        let end = rho.at(t).expect("inside horizon");
        acc += 0.5 * partial * (integrand(rho.time(n), rho.values()[n]) + integrand(t, end));
    }
    Ok(free - acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::solve_volterra;
    use crate::models::{builtin_interaction, builtin_profile, InteractionKind};

    fn setup() -> (VelocityProfile, Interaction, impl Fn(i64, f64) -> Complex64 + Copy) {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let w = builtin_interaction(InteractionKind::Coulomb, 16.0 * PI * PI, None).unwrap();
        let delta = 1e-3;
        // f_i = f0 (1 + delta cos 2 pi x): h~_i(+-1, eta) = delta/2 f0~(eta)
        let hi = move |k: i64, eta: f64| {
            if k.abs() == 1 {
                Complex64::new(0.5 * delta * (-2.0 * PI * PI * eta * eta).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        (p, w, hi)
    }

    #[test]
    fn eta_zero_reproduces_rho() {
        let (p, w, hi) = setup();
        let rho = solve_volterra(&p, &w, |t| hi(1, t), 1, 2.0, 0.005).unwrap();
        for i in [1, 17, 100, 400] {
            let t = rho.time(i);
            let h = linear_h_tilde(&p, &w, &rho, hi, 1, 0.0, t).unwrap();
            assert!((h - rho.values()[i]).norm() < 1e-8 * 5e-4, "t = {t}");
        }
    }

    #[test]
    fn mean_mode_is_conserved() {
        let (p, w, _) = setup();
        let hi = |k: i64, eta: f64| if k == 0 { Complex64::new(eta.cos(), 0.0) } else { Complex64::new(0.0, 0.0) };
        let rho = solve_volterra(&p, &w, |_| Complex64::new(0.0, 0.0), 1, 1.0, 0.01).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(linear_h_tilde(&p, &w, &rho, hi, 0, 0.7, t).unwrap(), hi(0, 0.7));
        }
    }

    #[test]
    fn free_transport_without_interaction() {
        let (p, _, hi) = setup();
        let w = Interaction::none();
        let rho = solve_volterra(&p, &w, |t| hi(1, t), 1, 1.0, 0.01).unwrap();
        let h = linear_h_tilde(&p, &w, &rho, hi, 1, 0.25, 0.5).unwrap();
        assert_eq!(h, hi(1, 0.75));
    }

    #[test]
    fn horizon_enforced() {
        let (p, w, hi) = setup();
        let rho = solve_volterra(&p, &w, |t| hi(1, t), 1, 1.0, 0.01).unwrap();
        assert!(matches!(
            linear_h_tilde(&p, &w, &rho, hi, 1, 0.0, 1.5),
            Err(Error::BeyondHorizon { .. })
        ));
        assert!(linear_h_tilde(&p, &w, &rho, hi, 2, 0.0, 0.5).is_err());
    }

    #[test]
    fn off_grid_time_matches_finer_grid() {
        let (p, w, hi) = setup();
        let dt = 0.001;
        let rho = solve_volterra(&p, &w, |t| hi(1, t), 1, 1.0, dt).unwrap();
        let fine = solve_volterra(&p, &w, |t| hi(1, t), 1, 1.0, dt / 2.0).unwrap();
        let t = 0.5 + dt / 2.0;
        let off = linear_h_tilde(&p, &w, &rho, hi, 1, 0.0, t).unwrap();
        let on = linear_h_tilde(&p, &w, &fine, hi, 1, 0.0, t).unwrap();
        assert!((off - on).norm() < 1e-3 * 5e-4, "{off} vs {on}");
    }
}
