use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::models::{Interaction, VelocityProfile};

use super::kernel::kernel_k0;

/// Time series of one complex density mode on a uniform grid `t_i = i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeHistory {
    k: i64,
    t0: f64,
    dt: f64,
    values: Vec<Complex64>,
}

impl ModeHistory {
    pub fn new(k: i64, t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self { k, t0, dt, values })
    }

    /// Builds a history from explicit sample times, which must be uniform.
    pub fn from_samples(k: i64, times: &[f64], values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid("values", "length differs from the time grid"));
        }
        if times.len() < 2 {
            return Err(invalid("times", "need at least two samples"));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) || ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(invalid("times", format!("grid not uniform at sample {}", i + 1)));
            }
        }
        Self::new(k, times[0], dt, values)
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.time(i))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Last sample time.
    pub fn horizon(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    /// Linear interpolation between grid samples.
    pub fn at(&self, t: f64) -> Option<Complex64> {
        if self.values.is_empty() || t < self.t0 - 1e-12 * self.dt || t > self.horizon() + 1e-9 * self.dt {
            return None;
        }
        let s = ((t - self.t0) / self.dt).max(0.0);
        let i = (s.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return Some(self.values[i]);
        }
        let frac = s - i as f64;
        Some(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// CSV with header `t,k,re,im,abs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,k,re,im,abs\n");
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", self.time(i), self.k, v.re, v.im, v.norm());
        }
    }
}

/// Solves `rho(t) - int_0^t K0(t - s, k) rho(s) ds = source(t)` forward in time
/// with the trapezoidal product rule on `t_i = i dt`, `i dt <= t_end`.
///
/// `K0(0, k) = 0`, so each step is explicit; the cost is quadratic in the
/// number of steps.
pub fn solve_volterra<S>(
    profile: &VelocityProfile,
    interaction: &Interaction,
    source: S,
    k: i64,
    t_end: f64,
    dt: f64,
) -> Result<ModeHistory>
where
    S: Fn(f64) -> Complex64,
{
    if k == 0 {
        return Err(invalid("k", "mode equations are posed for k != 0"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_end >= dt) {
        return Err(invalid("t_end", format!("must be at least dt, got {t_end}")));
    }
    let n = (t_end / dt + 1e-9).floor() as usize;
    let kernel: Vec<Complex64> = (0..=n)
        .map(|j| kernel_k0(profile, interaction, k, j as f64 * dt))
        .collect::<Result<_>>()?;
    let mut rho = Vec::with_capacity(n + 1);
    rho.push(source(0.0));
    for i in 1..=n {
        let mut conv = 0.5 * kernel[i] * rho[0];
        for j in 1..i {
            conv += kernel[i - j] * rho[j];
        }
        rho.push(source(i as f64 * dt) + dt * conv);
    }
    ModeHistory::new(k, 0.0, dt, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_interaction, builtin_profile, InteractionKind};
    use std::f64::consts::PI;

    #[test]
    fn free_transport_reproduces_source() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let w = Interaction::none();
        let src = |t: f64| Complex64::new((-t).exp(), t.sin());
        let h = solve_volterra(&p, &w, src, 1, 2.0, 0.01).unwrap();
        for (t, v) in h.times().zip(h.values()) {
            assert_eq!(*v, src(t));
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let w = builtin_interaction(InteractionKind::Coulomb, 100.0, None).unwrap();
        let h = solve_volterra(&p, &w, |_| Complex64::new(0.0, 0.0), 1, 1.0, 0.01).unwrap();
        assert!(h.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn dt_halving_is_second_order() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let w = builtin_interaction(InteractionKind::Coulomb, 16.0 * PI * PI, None).unwrap();
        let src = |t: f64| Complex64::new((-2.0 * PI * PI * t * t).exp(), 0.0);
        let dt = 0.01;
        let coarse = solve_volterra(&p, &w, src, 1, 1.0, dt).unwrap();
        let half = solve_volterra(&p, &w, src, 1, 1.0, dt / 2.0).unwrap();
        let reference = solve_volterra(&p, &w, src, 1, 1.0, dt / 32.0).unwrap();
        let err = |a: &ModeHistory, stride: usize| {
            a.values()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - reference.values()[i * stride]).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(&coarse, 32) / err(&half, 16);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn history_csv_and_uniformity() {
        let h = ModeHistory::new(2, 0.0, 0.5, vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, -1.0)]).unwrap();
        assert_eq!(h.to_csv(), "t,k,re,im,abs\n0,2,3,4,5\n0.5,2,0,-1,1\n");
        assert!(ModeHistory::from_samples(1, &[0.0, 1.0, 3.0], vec![Complex64::default(); 3]).is_err());
        assert!(ModeHistory::from_samples(1, &[0.0, 1.0], vec![Complex64::default(); 3]).is_err());
        let h = ModeHistory::from_samples(1, &[0.0, 0.1, 0.2], vec![Complex64::new(1.0, 0.0); 3]).unwrap();
        assert!((h.dt() - 0.1).abs() < 1e-15);
        assert_eq!(h.at(0.05), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(h.at(0.3), None);
    }
}
