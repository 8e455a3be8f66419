//! Plasma echoes: response kernel, timing law and two-pulse experiments.
//!
//! Convention: an initial perturbation in mode `k1` filaments to velocity
//! frequency `k1 t`; a kick in mode `k2` at time `tau` feeds mode `k = k1 + k2`,
//! whose velocity frequency `k1 tau + k (t - tau)` returns to zero at
//! `t = tau (k - l)/k` with source mode `l = k1`. Pairs are mirrored to `k > 0`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::linear::ModeHistory;
use crate::models::{Interaction, VelocityProfile};
use crate::sim::{run, Kick, ModePerturbation, PerturbationSpec, RunConfig};

/// Index gaps entering the response kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoKernelParams {
    pub lam_bar: f64,
    pub lam: f64,
    pub mu_bar: f64,
    pub mu: f64,
    pub gamma: f64,
}

impl EchoKernelParams {
    fn validate(&self) -> Result<()> {
        if !(self.lam >= 0.0 && self.lam_bar > self.lam) {
            return Err(invalid("lam_bar", "need lam_bar > lam >= 0"));
        }
        if !(self.mu >= 0.0 && self.mu_bar > self.mu) {
            return Err(invalid("mu_bar", "need mu_bar > mu >= 0"));
        }
        if !self.gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        Ok(())
    }
}

/// `(1+tau) e^{-2 pi (lam_bar - lam) |k (t - tau) + l tau|} e^{-2 pi (mu_bar - mu) |l|} / (1 + |k - l|^gamma)`.
pub fn echo_kernel(t: f64, tau: f64, k: i64, ell: i64, p: &EchoKernelParams) -> Result<f64> {
    p.validate()?;
    if k == 0 || ell == 0 {
        return Err(invalid("k", "k and ell must be nonzero"));
    }
    if !(tau >= 0.0 && tau <= t) {
        return Err(invalid("tau", format!("need 0 <= tau <= t, got tau={tau}, t={t}")));
    }
    let arg = (k as f64 * (t - tau) + ell as f64 * tau).abs();
    Ok((1.0 + tau) * (-2.0 * PI * (p.lam_bar - p.lam) * arg).exp() * (-2.0 * PI * (p.mu_bar - p.mu) * ell.abs() as f64).exp()
        / (1.0 + ((k - ell).abs() as f64).powf(p.gamma)))
}

/// Kernel resonance `tau = k t/(k - l)`, when it lies in `[0, t]`.
pub fn resonant_tau(t: f64, k: i64, ell: i64) -> Option<f64> {
    if k == ell {
        return None;
    }
    let tau = k as f64 * t / (k - ell) as f64;
    (0.0..=t).contains(&tau).then_some(tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPrediction {
    pub k: i64,
    pub ell: i64,
    pub tau_source: f64,
    pub t_echo: f64,
}

/// `t_echo = tau (k - l)/k`; requires `t_echo > tau`.
pub fn predict_echo_time(k: i64, ell: i64, tau_source: f64) -> Result<EchoPrediction> {
    if k == 0 {
        return Err(invalid("k", "must be nonzero"));
    }
    if !(tau_source > 0.0) || !tau_source.is_finite() {
        return Err(invalid("tau_source", format!("must be positive, got {tau_source}")));
    }
    let factor = (k - ell) as f64 / k as f64;
    if !(factor > 1.0) {
        return Err(Error::NoForwardEcho { k, ell });
    }
    let (k, ell) = if k < 0 { (-k, -ell) } else { (k, ell) };
    Ok(EchoPrediction { k, ell, tau_source, t_echo: tau_source * factor })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub amplitude: f64,
}

/// Local maxima of `|values|` above `floor`, refined by a parabola through the
/// three samples around each maximum. Peaks closer than `min_separation` keep
/// only the larger one.
pub fn detect_peaks(history: &ModeHistory, floor: f64, min_separation: f64) -> Result<Vec<Peak>> {
    if !(floor > 0.0) {
        return Err(invalid("floor", "must be positive"));
    }
    let a: Vec<f64> = history.values().iter().map(|c| c.norm()).collect();
    let mut raw = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        if a[i] > floor && a[i] > a[i - 1] && a[i] >= a[i + 1] {
            let (y0, y1, y2) = (a[i - 1], a[i], a[i + 1]);
            let den = y0 - 2.0 * y1 + y2;
            let (off, peak) = if den < 0.0 {
                let off = 0.5 * (y0 - y2) / den;
                (off, y1 - 0.25 * (y0 - y2) * off)
            } else {
                (0.0, y1)
            };
            raw.push(Peak { t: history.time(i) + off * history.dt(), amplitude: peak });
        }
    }
    let mut out: Vec<Peak> = Vec::new();
    for p in raw {
        match out.last_mut() {
            Some(last) if p.t - last.t < min_separation => {
                if p.amplitude > last.amplitude {
                    *last = p;
                }
            }
            _ => out.push(p),
        }
    }
    Ok(out)
}

/// Two-pulse experiment setup.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoExperiment {
    pub k1: i64,
    pub k2_kick: i64,
    pub tau_kick: f64,
    pub amp_initial: f64,
    pub amp_kick: f64,
    /// Response modes to scan; defaults to `k1 + k2_kick`.
    pub response_modes: Vec<i64>,
    pub floor: f64,
    pub run: RunConfig,
}

impl EchoExperiment {
    pub fn new(k1: i64, k2_kick: i64, tau_kick: f64, run: RunConfig) -> Self {
        Self {
            k1,
            k2_kick,
            tau_kick,
            amp_initial: 1e-3,
            amp_kick: 1e-3,
            response_modes: Vec::new(),
            floor: 1e-9,
            run,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedEcho {
    pub t_detected: f64,
    pub amplitude: f64,
    pub rel_error: f64,
    /// Timing error in units of the observation interval.
    pub error_in_strides: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeEcho {
    /// Response mode as simulated (before mirroring).
    pub mode: i64,
    pub prediction: Option<EchoPrediction>,
    pub peaks: Vec<Peak>,
    pub matched: Option<MatchedEcho>,
    pub history: ModeHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoReport {
    pub k1: i64,
    pub k2_kick: i64,
    pub tau_requested: f64,
    /// Time at which the impulse acted (midpoint of its step).
    pub tau_effective: f64,
    pub responses: Vec<ModeEcho>,
    pub convention: &'static str,
}

pub const ECHO_CONVENTION: &str = "k = k1 + k2_kick (response), ell = k1 (source), mirrored so k > 0; t_echo = tau (k - ell)/k";

impl EchoReport {
    pub fn primary(&self) -> &ModeEcho {
        &self.responses[0]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,ell,tau_kick,t_predicted,t_detected,amplitude,rel_error\n");
        self.append_csv_rows(&mut s);
        s
    }

    pub fn append_csv_rows(&self, s: &mut String) {
        for r in &self.responses {
            let (k, ell, tp) = match r.prediction {
                Some(p) => (p.k.to_string(), p.ell.to_string(), p.t_echo.to_string()),
                None => (r.mode.to_string(), self.k1.to_string(), String::new()),
            };
            let (td, amp, err) = match &r.matched {
                Some(m) => (m.t_detected.to_string(), format!("{:e}", m.amplitude), format!("{:e}", m.rel_error)),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(s, "{k},{ell},{},{tp},{td},{amp},{err}", self.tau_effective);
        }
    }
}

/// Runs the simulator with an initial mode `k1` and a kick in mode `k2_kick`,
/// then locates echoes in each response mode after the kick.
pub fn run_echo_experiment(
    profile: &VelocityProfile,
    interaction: &Interaction,
    exp: &EchoExperiment,
) -> Result<EchoReport> {
    if exp.k1 == 0 || exp.k2_kick == 0 {
        return Err(invalid("k1", "initial and kick modes must be nonzero"));
    }
    let modes = if exp.response_modes.is_empty() { vec![exp.k1 + exp.k2_kick] } else { exp.response_modes.clone() };
    if modes.contains(&0) {
        return Err(invalid("response_modes", "mode 0 carries no echo"));
    }
    let mut cfg = exp.run.clone();
    let needed = modes.iter().map(|m| m.abs()).max().unwrap_or(1).max(exp.k1.abs());
    cfg.k_obs = cfg.k_obs.max(needed);
    let pert = PerturbationSpec {
        modes: vec![ModePerturbation::cosine(exp.k1, exp.amp_initial)],
        kicks: vec![Kick { time: exp.tau_kick, mode: exp.k2_kick, amplitude: exp.amp_kick }],
    };
    let log = run(profile, interaction, &pert, &cfg)?;
    let tau_eff = match log.kicks_applied.first() {
        Some((t, _)) => *t,
        None => return Err(invalid("tau_kick", "kick time lies beyond the run")),
    };
    let stride_dt = cfg.dt * cfg.observe_stride as f64;
    let mut responses = Vec::new();
    for &m in &modes {
        let history = log.mode_history(m)?;
        let peaks: Vec<Peak> = detect_peaks(&history, exp.floor, 2.0 * stride_dt)?
            .into_iter()
            .filter(|p| p.t > tau_eff + stride_dt)
            .collect();
        let prediction = predict_echo_time(m, exp.k1, tau_eff).ok();
        let matched = prediction.and_then(|pred| {
            let window = 0.25 * (pred.t_echo - tau_eff);
            peaks
                .iter()
                .filter(|p| (p.t - pred.t_echo).abs() <= window)
                .min_by(|a, b| (a.t - pred.t_echo).abs().total_cmp(&(b.t - pred.t_echo).abs()))
                .map(|p| MatchedEcho {
                    t_detected: p.t,
                    amplitude: p.amplitude,
                    rel_error: (p.t - pred.t_echo) / pred.t_echo,
                    error_in_strides: (p.t - pred.t_echo) / stride_dt,
                })
        });
        responses.push(ModeEcho { mode: m, prediction, peaks, matched, history });
    }
    Ok(EchoReport {
        k1: exp.k1,
        k2_kick: exp.k2_kick,
        tau_requested: exp.tau_kick,
        tau_effective: tau_eff,
        responses,
        convention: ECHO_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin_profile;
    use num_complex::Complex64;

    fn params() -> EchoKernelParams {
        EchoKernelParams { lam_bar: 0.6, lam: 0.4, mu_bar: 0.3, mu: 0.1, gamma: 1.0 }
    }

    #[test]
    fn kernel_at_resonance() {
        let p = params();
        let (t, k, ell) = (6.0, 2, -1);
        let tau = resonant_tau(t, k, ell).unwrap();
        assert_eq!(tau, 4.0);
        let v = echo_kernel(t, tau, k, ell, &p).unwrap();
        let want = 5.0 * (-2.0 * PI * 0.2f64).exp() / 4.0;
        assert!((v - want).abs() < 1e-15);
        assert!(echo_kernel(t, tau - 0.01, k, ell, &p).unwrap() < v);
        assert!(echo_kernel(t, tau + 0.01, k, ell, &p).unwrap() < v);
    }

    #[test]
    fn kernel_decay_rate_away_from_resonance() {
        let p = params();
        let (t, k, ell) = (10.0, 3, -2);
        let tau0 = resonant_tau(t, k, ell).unwrap();
        // log K + 2 pi (lam_bar - lam) |k - l| |tau - tau0| - log(1 + tau) is constant
        let c = |tau: f64| {
            echo_kernel(t, tau, k, ell, &p).unwrap().ln() + 2.0 * PI * 0.2 * 5.0 * (tau - tau0).abs() - (1.0 + tau).ln()
        };
        for d in [-1.5, -0.3, 0.2, 0.9] {
            assert!((c(tau0 + d) - c(tau0)).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_errors() {
        let p = params();
        assert!(echo_kernel(1.0, 2.0, 1, -1, &p).is_err());
        assert!(echo_kernel(1.0, 0.5, 0, -1, &p).is_err());
        assert!(echo_kernel(1.0, 0.5, 1, 0, &p).is_err());
        let bad = EchoKernelParams { lam_bar: 0.3, ..p };
        assert!(echo_kernel(1.0, 0.5, 1, -1, &bad).is_err());
    }

    #[test]
    fn timing_law_examples() {
        let p = predict_echo_time(2, -1, 2.0).unwrap();
        assert_eq!(p.t_echo, 3.0);
        // read backwards: tau = k t/(k + 1)
        assert_eq!(2.0 * p.t_echo / 3.0, 2.0);
        assert_eq!(predict_echo_time(1, -1, 5.0).unwrap().t_echo, 10.0);
        assert!(matches!(predict_echo_time(1, 1, 5.0), Err(Error::NoForwardEcho { .. })));
        assert!(matches!(predict_echo_time(2, 1, 5.0), Err(Error::NoForwardEcho { .. })));
        let m = predict_echo_time(-1, 1, 4.0).unwrap();
        assert_eq!((m.k, m.ell, m.t_echo), (1, -1, 8.0));
    }

    #[test]
    fn peaks_on_synthetic_series() {
        let dt = 0.01;
        let vals: Vec<Complex64> = (0..1400)
            .map(|i| {
                let t = i as f64 * dt;
                Complex64::new((-(t - 5.0f64).powi(2)).exp() + (-(t - 9.0f64).powi(2)).exp(), 0.0)
            })
            .collect();
        let h = ModeHistory::new(1, 0.0, dt, vals).unwrap();
        let p = detect_peaks(&h, 0.1, 0.5).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0].t - 5.0).abs() < 0.01 && (p[1].t - 9.0).abs() < 0.01);
        assert!(detect_peaks(&h, 2.5, 0.5).unwrap().is_empty());
        let mono = ModeHistory::new(1, 0.0, dt, (0..100).map(|i| Complex64::new((-0.1 * i as f64).exp(), 0.0)).collect())
            .unwrap();
        assert!(detect_peaks(&mono, 1e-6, 0.1).unwrap().is_empty());
        assert!(detect_peaks(&mono, 0.0, 0.1).is_err());
    }

    fn echo_run(tau: f64, amp_kick: f64, w: &Interaction) -> EchoReport {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let run = RunConfig {
            nx: 16,
            nv: 512,
            dt: 1.0 / 32.0,
            t_end: 2.0 * tau + 2.0,
            observe_stride: 1,
            k_obs: 2,
            ..Default::default()
        };
        let mut e = EchoExperiment::new(1, -2, tau, run);
        e.amp_kick = amp_kick;
        run_echo_experiment(&p, w, &e).unwrap()
    }

    #[test]
    fn free_streaming_echo_matches_second_order_oracle() {
        // second-order free-streaming theory: |rho^(t, -1)| peaks at 2 tau with
        // height pi tau a d / 2 (initial amplitude d, kick amplitude a)
        let r = echo_run(3.0, 1e-3, &Interaction::none());
        let m = r.primary().matched.clone().expect("echo detected");
        let tau = r.tau_effective;
        assert!((m.t_detected - 2.0 * tau).abs() < 0.01, "{m:?}");
        let want = PI * tau * 1e-3 * 1e-3 / 2.0;
        assert!((m.amplitude - want).abs() < 1e-2 * want, "{} vs {want}", m.amplitude);
        let csv = r.to_csv();
        assert!(csv.starts_with("k,ell,tau_kick,t_predicted,t_detected,amplitude,rel_error\n1,-1,"));
    }

    #[test]
    fn no_kick_no_echo() {
        let r = echo_run(3.0, 0.0, &Interaction::none());
        assert!(r.primary().peaks.is_empty());
        assert!(r.primary().matched.is_none());
    }
}
