use std::f64::consts::PI;

use landau_core::echoes::{detect_peaks, echo_kernel, predict_echo_time, resonant_tau, EchoKernelParams};
use landau_core::linear::ModeHistory;
use landau_core::models::{builtin_interaction, builtin_profile, verify_cond_w, InteractionKind};
use landau_core::norms::{lmb_norm, z_norm, GlidingNormSpec, LmbSpec, LpIndex};
use landau_core::sim::{PhaseSpaceField, Stepper};
use landau_core::Complex64;
use proptest::prelude::*;

/// Smooth field with a few x-modes on a Gaussian velocity envelope.
fn field(a: [f64; 3], theta: f64) -> PhaseSpaceField {
    PhaseSpaceField::from_fn(8, 128, 8.0, |x, v| {
        let g = (-0.5 * v * v / theta).exp() / (2.0 * PI * theta).sqrt();
        let xs = 2.0 * PI * x;
        g * (1.0 + a[0] * xs.cos() + a[1] * (2.0 * xs).sin() + a[2] * (3.0 * xs).cos() * v)
    })
    .unwrap()
}

fn amps() -> impl Strategy<Value = [f64; 3]> {
    [-0.2f64..0.2, -0.2f64..0.2, -0.2f64..0.2]
}

fn zspec(lambda: f64, mu: f64, gamma: f64) -> GlidingNormSpec {
    GlidingNormSpec { lambda, mu, gamma, k_max: 3, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interaction_is_even_and_decays(s in 0.1f64..200.0, scr in 0.1f64..5.0, kind in 0usize..3, k in 1i64..40) {
        let kind = [InteractionKind::Coulomb, InteractionKind::Newton, InteractionKind::Screened][kind];
        let w = builtin_interaction(kind, s, Some(scr)).unwrap();
        prop_assert_eq!(w.what(k), w.what(-k));
        prop_assert_eq!(w.what(0), 0.0);
        prop_assert!(verify_cond_w(&w, 64).unwrap().pass);
    }

    #[test]
    fn profile_transform_is_hermitian(eta in -3.0f64..3.0, th in 0.3f64..3.0, w in 0.0f64..0.5, drift in -3.0f64..3.0) {
        for p in [
            builtin_profile("maxwellian", &[th]).unwrap(),
            builtin_profile("bi_maxwellian", &[th, 2.0 * th, w]).unwrap(),
            builtin_profile("bump_on_tail", &[w, drift]).unwrap(),
        ] {
            let (a, b) = (p.ft(eta), p.ft(-eta).conj());
            prop_assert!((a - b).norm() <= 1e-15 * a.norm().max(1e-300) + 1e-300);
            prop_assert!((p.ft(0.0).re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn z_norm_is_monotone_in_indices(a in amps(), l in 0.0f64..0.4, dl in 0.0f64..0.2, mu in 0.0f64..0.3, dm in 0.0f64..0.3, g in 0.0f64..2.0, dg in 0.0f64..1.0) {
        let f = field(a, 1.0);
        let base = z_norm(&f, &zspec(l, mu, g)).unwrap().value;
        for other in [zspec(l + dl, mu, g), zspec(l, mu + dm, g), zspec(l, mu, g + dg)] {
            let v = z_norm(&f, &other).unwrap().value;
            prop_assert!(v >= base * (1.0 - 1e-13), "{} < {}", v, base);
        }
    }

    #[test]
    fn z_norm_triangle_and_homogeneity(a in amps(), b in amps(), c in -3.0f64..3.0, p in 0usize..3) {
        let spec = GlidingNormSpec { p: [LpIndex::One, LpIndex::Two, LpIndex::Inf][p], ..zspec(0.3, 0.1, 1.0) };
        let f = field(a, 1.0);
        let g = field(b, 0.7);
        let sum: Vec<f64> = f.data().iter().zip(g.data()).map(|(x, y)| x + y).collect();
        let fg = PhaseSpaceField::from_data(8, 128, 8.0, 0.0, sum).unwrap();
        let (zf, zg) = (z_norm(&f, &spec).unwrap().value, z_norm(&g, &spec).unwrap().value);
        prop_assert!(z_norm(&fg, &spec).unwrap().value <= (zf + zg) * (1.0 + 1e-12));
        let scaled = PhaseSpaceField::from_data(8, 128, 8.0, 0.0, f.data().iter().map(|x| c * x).collect()).unwrap();
        let zs = z_norm(&scaled, &spec).unwrap().value;
        prop_assert!((zs - c.abs() * zf).abs() <= 1e-12 * zf.max(zs));
    }

    #[test]
    fn lmb_is_absolutely_homogeneous(a in amps(), c in -4.0f64..4.0, lam in 0.05f64..0.5, beta in 0.05f64..1.0) {
        let spec = LmbSpec::new(lam, 0.1, beta);
        let f = field(a, 1.0);
        let scaled = PhaseSpaceField::from_data(8, 128, 8.0, 0.0, f.data().iter().map(|x| c * x).collect()).unwrap();
        let (n, ns) = (lmb_norm(&f, &spec).unwrap(), lmb_norm(&scaled, &spec).unwrap());
        prop_assert!((ns - c.abs() * n).abs() <= 1e-11 * n.max(ns));
    }

    #[test]
    fn echo_kernel_peaks_at_resonance(k in -6i64..=6, ell in -6i64..=6, t in 1.0f64..40.0, gap in 0.2f64..0.6, s in 0.0f64..1.0) {
        prop_assume!(k != 0 && ell != 0 && k != ell);
        let p = EchoKernelParams { lam_bar: 0.5 + gap, lam: 0.5, mu_bar: 0.3, mu: 0.1, gamma: 1.5 };
        if let Some(tr) = resonant_tau(t, k, ell) {
            // (k (t - tau) + l tau) vanishes at the resonance
            prop_assert!((k as f64 * (t - tr) + ell as f64 * tr).abs() < 1e-9 * t * (k.abs() + ell.abs()) as f64);
            let peak = echo_kernel(t, tr, k, ell, &p).unwrap();
            let tau = s * t;
            prop_assert!(echo_kernel(t, tau, k, ell, &p).unwrap() <= peak * (1.0 + 1e-12));
        }
    }

    #[test]
    fn echo_time_scales_linearly(k in -8i64..=8, ell in -8i64..=8, tau in 0.1f64..50.0, c in 0.1f64..10.0) {
        prop_assume!(k != 0);
        match predict_echo_time(k, ell, tau) {
            Ok(a) => {
                let b = predict_echo_time(k, ell, c * tau).unwrap();
                prop_assert!((b.t_echo - c * a.t_echo).abs() <= 1e-12 * b.t_echo);
                prop_assert!(a.t_echo > tau && a.k > 0);
                let m = predict_echo_time(-k, -ell, tau).unwrap();
                prop_assert_eq!(m.t_echo, a.t_echo);
            }
            Err(_) => prop_assert!(ell * k >= 0 || ell == 0),
        }
    }

    #[test]
    fn detected_peaks_are_ordered_and_above_floor(vals in prop::collection::vec(0.0f64..1.0, 8..200), floor in 0.05f64..0.5, sep in 0.0f64..0.5) {
        let h = ModeHistory::new(1, 0.0, 0.1, vals.iter().map(|v| Complex64::new(*v, 0.0)).collect()).unwrap();
        let peaks = detect_peaks(&h, floor, sep).unwrap();
        for w in peaks.windows(2) {
            prop_assert!(w[0].t < w[1].t);
            prop_assert!(w[1].t - w[0].t >= sep - 1e-12);
        }
        for p in &peaks {
            prop_assert!(p.amplitude >= floor);
            prop_assert!(p.t >= 0.0 && p.t <= 0.1 * (vals.len() - 1) as f64);
        }
    }

    #[test]
    fn split_step_conserves_mass(a in amps(), s in 0.5f64..200.0, attractive in any::<bool>(), dt in 0.01f64..0.2) {
        let kind = if attractive { InteractionKind::Newton } else { InteractionKind::Coulomb };
        let w = builtin_interaction(kind, s, None).unwrap();
        let mut f = field(a, 1.0);
        let m0 = f.mass();
        let mut st = Stepper::new(&f, &w);
        for _ in 0..10 {
            st.step(&mut f, dt, None).unwrap();
        }
        prop_assert!((f.mass() - m0).abs() <= 1e-12 * m0);
    }
}
