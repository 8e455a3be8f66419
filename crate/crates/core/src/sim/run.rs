use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linear::ModeHistory;
use crate::models::{Interaction, VelocityProfile};

use super::field::{signed_freq, PhaseSpaceField};
use super::perturbation::{init_state, Kick, PerturbationSpec};
use super::stepper::Stepper;

/// Fraction of the recurrence time up to which samples are trusted.
pub const TRUST_FRACTION: f64 = 0.8;

/// Time at which the velocity-frequency shift of mode `k` wraps the grid.
pub fn recurrence_time(nv: usize, vmax: f64, k: i64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "recurrence time is defined for k != 0"));
    }
    if !(vmax > 0.0) {
        return Err(invalid("vmax", "must be positive"));
    }
    Ok(nv as f64 / (2.0 * vmax * k.unsigned_abs() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    pub dt: f64,
    pub t_end: f64,
    pub observe_stride: usize,
    /// Modes `1..=k_obs` are logged.
    pub k_obs: i64,
    pub ftilde_modes: Vec<i64>,
    pub ftilde_eta: Vec<f64>,
    /// Keep the x-averaged velocity profile at every sample.
    pub record_marginal: bool,
    pub filter: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nx: 32,
            nv: 1024,
            vmax: 8.0,
            dt: 1.0 / 32.0,
            t_end: 20.0,
            observe_stride: 4,
            k_obs: 4,
            ftilde_modes: Vec::new(),
            ftilde_eta: Vec::new(),
            record_marginal: false,
            filter: None,
        }
    }
}

impl RunConfig {
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(invalid("t_end", "must be an integer multiple of dt"));
        }
        let n = n as usize;
        if self.observe_stride == 0 || n % self.observe_stride != 0 {
            return Err(invalid("observe_stride", format!("must divide the step count {n}")));
        }
        Ok(n)
    }

    fn validate(&self) -> Result<usize> {
        let n = self.n_steps()?;
        if self.k_obs < 1 || self.k_obs as usize > self.nx / 2 {
            return Err(invalid("k_obs", format!("must be in 1..={}", self.nx / 2)));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtildeSample {
    pub t: f64,
    pub k: i64,
    pub eta: f64,
    pub value: Complex64,
}

/// Time series of observables recorded by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableLog {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub ekin: Vec<f64>,
    pub epot: Vec<f64>,
    pub l2: Vec<f64>,
    pub gradv_l2: Vec<f64>,
    /// `modes[k-1][s]` is `rho^(t_s, k)`.
    pub modes: Vec<Vec<Complex64>>,
    pub ftilde: Vec<FtildeSample>,
    pub marginals: Vec<Vec<f64>>,
    pub v_grid: Vec<f64>,
    pub recurrence_time: f64,
    pub kicks_applied: Vec<(f64, Kick)>,
    pub imag_residue: f64,
}

impl ObservableLog {
    pub fn trusted_until(&self) -> f64 {
        TRUST_FRACTION * self.recurrence_time
    }

    pub fn is_post_recurrence(&self, t: f64) -> bool {
        t > self.trusted_until()
    }

    pub fn k_obs(&self) -> i64 {
        self.modes.len() as i64
    }

    pub fn mode_history(&self, k: i64) -> Result<ModeHistory> {
        let ka = k.unsigned_abs() as usize;
        if ka == 0 || ka > self.modes.len() {
            return Err(invalid("k", format!("mode {k} was not logged")));
        }
        let mut v = self.modes[ka - 1].clone();
        if k < 0 {
            v.iter_mut().for_each(|c| *c = c.conj());
        }
        ModeHistory::from_samples(k, &self.times, v)
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().fold(0.0, |m, x| m.max(((x - m0) / m0).abs()))
    }

    pub fn energy(&self) -> Vec<f64> {
        self.ekin.iter().zip(&self.epot).map(|(a, b)| a + b).collect()
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e = self.energy();
        e.iter().fold(0.0, |m, x| m.max((x - e[0]).abs()))
    }

    pub fn observables_csv(&self) -> String {
        let mut s = String::from("t,mass,ekin,epot,l2,gradv_l2\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[i], self.mass[i], self.ekin[i], self.epot[i], self.l2[i], self.gradv_l2[i]
            );
        }
        s
    }

    pub fn modes_csv(&self) -> String {
        let mut s = String::from("t,k,re,im,abs\n");
        for (i, t) in self.times.iter().enumerate() {
            for (ki, vals) in self.modes.iter().enumerate() {
                let c = vals[i];
                let _ = writeln!(s, "{t},{},{:.17e},{:.17e},{:.17e}", ki + 1, c.re, c.im, c.norm());
            }
        }
        s
    }

    pub fn ftilde_csv(&self) -> String {
        let mut s = String::from("t,k,eta,re,im\n");
        for r in &self.ftilde {
            let _ = writeln!(s, "{},{},{},{:.17e},{:.17e}", r.t, r.k, r.eta, r.value.re, r.value.im);
        }
        s
    }

    /// Grid and timing metadata as ordered key-value pairs.
    pub fn meta_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("nx".to_string(), self.nx.to_string()),
            ("nv".to_string(), self.nv.to_string()),
            ("vmax".to_string(), self.vmax.to_string()),
            ("dt".to_string(), self.dt.to_string()),
            ("t_end".to_string(), self.times.last().copied().unwrap_or(0.0).to_string()),
            ("samples".to_string(), self.times.len().to_string()),
            ("recurrence_time".to_string(), self.recurrence_time.to_string()),
            ("trusted_until".to_string(), self.trusted_until().to_string()),
            ("max_mass_drift".to_string(), format!("{:e}", self.max_mass_drift())),
            ("max_imag_residue".to_string(), format!("{:e}", self.imag_residue)),
        ];
        for (i, (t, k)) in self.kicks_applied.iter().enumerate() {
            out.push((format!("kick{i}"), format!("acts_at={t} requested={} mode={} amplitude={}", k.time, k.mode, k.amplitude)));
        }
        out
    }
}

/// Potential energy `1/2 sum_k W^(k) |rho^(k)|^2`.
pub fn potential_energy(field: &PhaseSpaceField, interaction: &Interaction) -> f64 {
    let nx = field.nx();
    let modes = field.density_modes();
    let mut e = 0.0;
    for (m, c) in modes.iter().enumerate() {
        if m == 0 || m == nx / 2 {
            continue;
        }
        e += interaction.what(signed_freq(m, nx)) * c.norm_sqr();
    }
    0.5 * e
}

/// A simulation owning its state and transform plans.
pub struct Simulation {
    field: PhaseSpaceField,
    stepper: Stepper,
    kicks: Vec<Kick>,
    applied: Vec<(f64, Kick)>,
}

impl Simulation {
    pub fn new(field: PhaseSpaceField, interaction: &Interaction, kicks: Vec<Kick>, filter: Option<f64>) -> Result<Self> {
        let mut stepper = Stepper::new(&field, interaction);
        if let Some(a) = filter {
            stepper = stepper.with_filter(a)?;
        }
        Ok(Self { field, stepper, kicks, applied: Vec::new() })
    }

    pub fn field(&self) -> &PhaseSpaceField {
        &self.field
    }

    pub fn into_field(self) -> PhaseSpaceField {
        self.field
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn kicks_applied(&self) -> &[(f64, Kick)] {
        &self.applied
    }

    /// Advances by `dt`, applying every kick whose time lies in `[t, t + dt)`.
    /// The impulse acts at the step midpoint `t + dt/2`, which is the time recorded
    /// in [`Simulation::kicks_applied`].
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let t = self.field.time();
        let (lo, hi) = if dt > 0.0 { (t, t + dt) } else { (t + dt, t) };
        let tol = 1e-9 * dt.abs();
        let nx = self.field.nx();
        let mut impulse: Option<Vec<f64>> = None;
        for k in &self.kicks {
            if k.time >= lo - tol && k.time < hi - tol {
                let sign = dt.signum();
                let j = impulse.get_or_insert_with(|| vec![0.0; nx]);
                for (i, ji) in j.iter_mut().enumerate() {
                    *ji += sign * k.amplitude * (2.0 * PI * k.mode as f64 * i as f64 / nx as f64).sin();
                }
                self.applied.push((t + 0.5 * dt, *k));
            }
        }
        self.stepper.step(&mut self.field, dt, impulse.as_deref())
    }
}

/// Runs the nonlinear solver and records observables every `observe_stride` steps.
pub fn run(
    profile: &VelocityProfile,
    interaction: &Interaction,
    perturbation: &PerturbationSpec,
    config: &RunConfig,
) -> Result<ObservableLog> {
    run_observed(profile, interaction, perturbation, config, &mut |_| Ok(()))
}

/// As [`run`], calling `observer` on the field at every sample.
pub fn run_observed(
    profile: &VelocityProfile,
    interaction: &Interaction,
    perturbation: &PerturbationSpec,
    config: &RunConfig,
    observer: &mut dyn FnMut(&PhaseSpaceField) -> Result<()>,
) -> Result<ObservableLog> {
    let n = config.validate()?;
    let field = init_state(profile, perturbation, config.nx, config.nv, config.vmax)?;
    for &k in &config.ftilde_modes {
        if k.unsigned_abs() as usize > config.nx / 2 {
            return Err(invalid("ftilde_modes", format!("mode {k} beyond the x-grid")));
        }
    }
    if let Some(&eta) = config.ftilde_eta.iter().find(|e| !(e.abs() <= field.eta_nyquist())) {
        return Err(Error::EtaOutOfRange { eta, limit: field.eta_nyquist() });
    }
    let mut sim = Simulation::new(field, interaction, perturbation.kicks.clone(), config.filter)?;
    let mut log = ObservableLog {
        nx: config.nx,
        nv: config.nv,
        vmax: config.vmax,
        dt: config.dt,
        times: Vec::new(),
        mass: Vec::new(),
        ekin: Vec::new(),
        epot: Vec::new(),
        l2: Vec::new(),
        gradv_l2: Vec::new(),
        modes: vec![Vec::new(); config.k_obs as usize],
        ftilde: Vec::new(),
        marginals: Vec::new(),
        v_grid: sim.field().v_grid(),
        recurrence_time: recurrence_time(config.nv, config.vmax, 1)?,
        kicks_applied: Vec::new(),
        imag_residue: 0.0,
    };
    for s in 0..=n {
        if s > 0 {
            sim.step(config.dt)?;
        }
        if s % config.observe_stride != 0 {
            continue;
        }
        // sample at the nominal time to keep the grid exactly uniform
        let t = s as f64 * config.dt;
        let f = sim.field();
        let modes = f.density_modes();
        log.times.push(t);
        log.mass.push(modes[0].re);
        log.ekin.push(f.kinetic_energy());
        log.epot.push(potential_energy(f, interaction));
        log.l2.push(f.l2_norm());
        log.gradv_l2.push(f.gradv_l2());
        for k in 1..=config.k_obs as usize {
            log.modes[k - 1].push(modes[k]);
        }
        for &k in &config.ftilde_modes {
            let vals = f.ftilde_sample(k, &config.ftilde_eta)?;
            for (&eta, value) in config.ftilde_eta.iter().zip(vals) {
                log.ftilde.push(FtildeSample { t, k, eta, value });
            }
        }
        if config.record_marginal {
            log.marginals.push(f.velocity_marginal());
        }
        observer(f)?;
    }
    log.kicks_applied = sim.kicks_applied().to_vec();
    log.imag_residue = sim.stepper().imag_residue();
    Ok(log)
}

/// Late-time x-averaged velocity profile with a convergence diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticProfile {
    pub v: Vec<f64>,
    pub f_inf: Vec<f64>,
    /// Sup difference between the last two recorded marginals.
    pub last_change: f64,
}

pub fn asymptotic_profile(log: &ObservableLog) -> Result<AsymptoticProfile> {
    let n = log.marginals.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!(
            "need velocity marginals at >= 2 times, log has {n}"
        )));
    }
    let (a, b) = (&log.marginals[n - 2], &log.marginals[n - 1]);
    let last_change = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(AsymptoticProfile { v: log.v_grid.clone(), f_inf: b.clone(), last_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_interaction, builtin_profile, InteractionKind};

    fn maxwellian() -> VelocityProfile {
        builtin_profile("maxwellian", &[]).unwrap()
    }

    fn small_config() -> RunConfig {
        RunConfig { nx: 16, nv: 512, t_end: 4.0, dt: 0.0625, observe_stride: 4, k_obs: 2, ..Default::default() }
    }

    #[test]
    fn recurrence_time_scaling() {
        assert_eq!(recurrence_time(1024, 8.0, 1).unwrap(), 64.0);
        assert_eq!(recurrence_time(1024, 8.0, 2).unwrap(), 32.0);
        assert_eq!(recurrence_time(2048, 8.0, -1).unwrap(), 128.0);
        assert!(recurrence_time(1024, 8.0, 0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.observe_stride = 3;
        assert!(c.n_steps().is_err());
        c.observe_stride = 4;
        c.t_end = 4.01;
        assert!(c.n_steps().is_err());
        c.t_end = 4.0;
        assert_eq!(c.n_steps().unwrap(), 64);
        c.dt = -1.0;
        assert!(c.n_steps().is_err());
    }

    #[test]
    fn equilibrium_run_is_quiet() {
        let w = builtin_interaction(InteractionKind::Coulomb, 1.0, None).unwrap();
        let log = run(&maxwellian(), &w, &PerturbationSpec::none(), &small_config()).unwrap();
        assert!(log.modes.iter().flatten().all(|c| c.norm() < 1e-13));
        assert!(log.max_mass_drift() < 1e-12);
        assert_eq!(log.times.len(), 17);
        assert!(log.imag_residue < 1e-13);
    }

    #[test]
    fn ftilde_follows_free_transport() {
        let mut c = small_config();
        c.ftilde_modes = vec![1];
        c.ftilde_eta = vec![-0.5, 0.0, 0.25];
        let d = 0.01;
        let log = run(&maxwellian(), &Interaction::none(), &PerturbationSpec::single(1, d), &c).unwrap();
        // f~(t, 1, eta) = f~_i(1, eta + t) = (d/2) exp(-2 pi^2 (eta + t)^2)
        for r in &log.ftilde {
            let want = 0.5 * d * (-2.0 * PI * PI * (r.eta + r.t).powi(2)).exp();
            assert!((r.value - Complex64::new(want, 0.0)).norm() < 1e-15, "{r:?}");
        }
        assert!(log.ftilde_csv().starts_with("t,k,eta,re,im\n"));
    }

    #[test]
    fn asymptotic_profile_of_equilibrium_is_f0() {
        let mut c = small_config();
        c.record_marginal = true;
        let w = builtin_interaction(InteractionKind::Coulomb, 1.0, None).unwrap();
        let log = run(&maxwellian(), &w, &PerturbationSpec::none(), &c).unwrap();
        let a = asymptotic_profile(&log).unwrap();
        let p = maxwellian();
        for (v, f) in a.v.iter().zip(&a.f_inf) {
            assert!((f - p.eval(*v)).abs() < 1e-14);
        }
        assert!(a.last_change < 1e-14);
        c.record_marginal = false;
        let log = run(&maxwellian(), &w, &PerturbationSpec::none(), &c).unwrap();
        assert!(matches!(asymptotic_profile(&log), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn kicks_are_applied_once_in_the_right_step() {
        let p = PerturbationSpec::none().with_kick(Kick { time: 1.0, mode: 2, amplitude: 1e-3 });
        let log = run(&maxwellian(), &Interaction::none(), &p, &small_config()).unwrap();
        assert_eq!(log.kicks_applied.len(), 1);
        let t_kick = 1.0 + 0.0625 / 2.0;
        assert_eq!(log.kicks_applied[0].0, t_kick);
        // the kick excites mode 2 only after it is applied; free streaming then
        // gives |rho^(t, 2)| = pi a eta exp(-2 pi^2 eta^2) with eta = 2 (t - t_kick)
        let h = log.mode_history(2).unwrap();
        assert!(h.at(0.75).unwrap().norm() < 1e-16);
        let eta = 2.0 * (1.25 - t_kick);
        let want = PI * 1e-3 * eta * (-2.0 * PI * PI * eta * eta).exp();
        assert!((h.at(1.25).unwrap().norm() - want).abs() < 1e-3 * want);
    }

    #[test]
    fn csv_headers_and_meta() {
        let log = run(&maxwellian(), &Interaction::none(), &PerturbationSpec::single(1, 1e-3), &small_config()).unwrap();
        assert!(log.observables_csv().starts_with("t,mass,ekin,epot,l2,gradv_l2\n"));
        let m = log.modes_csv();
        assert!(m.starts_with("t,k,re,im,abs\n"));
        assert_eq!(m.lines().count(), 1 + 17 * 2);
        let meta = log.meta_pairs();
        assert!(meta.iter().any(|(k, v)| k == "recurrence_time" && v == "32"));
    }
}
