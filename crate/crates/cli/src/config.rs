//! Experiment configuration: a TOML file of flat `key = value` pairs grouped
//! under section headers. Every section rejects unknown keys.

use std::fmt;
use std::path::{Path, PathBuf};

use landau_core::models::{builtin_interaction, builtin_profile, Interaction, InteractionKind, VelocityProfile};
use landau_core::norms::{LpIndex, NOISE_FLOOR};
use landau_core::sim::{ModePerturbation, PerturbationSpec, RunConfig, VelocityShape};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    LinearDamping,
    Nonlinear,
    Certify,
    Echo,
    Norms,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LinearDamping => "linear_damping",
            Self::Nonlinear => "nonlinear",
            Self::Certify => "certify",
            Self::Echo => "echo",
            Self::Norms => "norms",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Output directory; relative paths resolve against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Reserved for randomized sampling grids; recorded in `run.meta`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub interaction: InteractionSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub nonlinear: NonlinearSection,
    #[serde(default)]
    pub certify: CertifySection,
    #[serde(default)]
    pub echo: EchoSection,
    #[serde(default)]
    pub norms: NormsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub name: String,
    pub params: Vec<f64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { name: "maxwellian".into(), params: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InteractionSection {
    /// `coulomb`, `newton`, `screened`, `custom` or `none`.
    pub kind: String,
    pub strength: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screening: Option<f64>,
    /// `W^(1), W^(2), ...` for `custom`.
    pub table: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cw: Option<f64>,
}

impl Default for InteractionSection {
    fn default() -> Self {
        Self { kind: "coulomb".into(), strength: 1.0, screening: None, table: Vec::new(), gamma: None, cw: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    pub k: i64,
    pub amplitude: f64,
    pub phase: f64,
    /// Width of a Gaussian velocity shape; the equilibrium shape when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self { k: 1, amplitude: 1e-3, phase: 0.0, width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 32, nv: 1024, vmax: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub observe_stride: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 1.0 / 32.0, t_end: 20.0, observe_stride: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSection {
    /// Modes to solve; the perturbed mode when empty.
    pub modes: Vec<i64>,
    /// Step of the Volterra solver; `time.dt` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Fit window `[t0, t1]`; `[t_end / 10, t_end]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    /// Also run the simulator and compare its density modes.
    pub compare_simulation: bool,
}

impl Default for LinearSection {
    fn default() -> Self {
        Self { modes: Vec::new(), dt: None, fit_window: None, compare_simulation: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearSection {
    pub k_obs: i64,
    /// Strength of the optional exponential high-frequency filter; off when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    pub ftilde_modes: Vec<i64>,
    pub ftilde_eta: Vec<f64>,
    pub record_marginal: bool,
}

impl Default for NonlinearSection {
    fn default() -> Self {
        Self { k_obs: 4, filter: None, fit_window: None, ftilde_modes: Vec::new(), ftilde_eta: Vec::new(), record_marginal: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySection {
    pub lambda_strip: f64,
    pub kappa: f64,
    pub k_max: i64,
    pub n_re: usize,
    pub n_im: usize,
    /// Half-width of the sample interval for the marginal slope test.
    pub z_max: f64,
    pub z_samples: usize,
    pub eta_max: f64,
}

impl Default for CertifySection {
    fn default() -> Self {
        Self { lambda_strip: 0.2, kappa: 0.1, k_max: 16, n_re: 16, n_im: 401, z_max: 8.0, z_samples: 801, eta_max: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EchoSection {
    pub k1: i64,
    pub k2: i64,
    pub tau: f64,
    pub amp_initial: f64,
    pub amp_kick: f64,
    pub response_modes: Vec<i64>,
    pub floor: f64,
    /// Also run with a zero-amplitude kick.
    pub control: bool,
}

impl Default for EchoSection {
    fn default() -> Self {
        Self { k1: 1, k2: -2, tau: 5.0, amp_initial: 1e-3, amp_kick: 1e-3, response_modes: Vec::new(), floor: 1e-9, control: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    /// `1`, `2` or `inf`.
    pub p: String,
    pub n_max: usize,
    pub k_max: i64,
    /// Use the free-transport frame `tau = t`; `tau = 0` otherwise.
    pub gliding: bool,
    /// Moment weight of the sup-plus-moment norm; skipped when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmb_beta: Option<f64>,
    /// Relative level below which velocity-spectral content counts as roundoff.
    pub noise_floor: f64,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self { lambda: 0.5, mu: 0.0, gamma: 0.0, p: "1".into(), n_max: 24, k_max: 4, gliding: true, lmb_beta: None, noise_floor: NOISE_FLOOR }
    }
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses straight from text so that errors carry line numbers.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, RunError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn from_table(table: toml::Table) -> Result<ExperimentConfig, RunError> {
    let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn bad(key: &str, reason: impl fmt::Display) -> RunError {
    RunError::Config(format!("invalid `{key}`: {reason}"))
}

fn positive(key: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

fn window(key: &str, w: Option<[f64; 2]>) -> Result<(), RunError> {
    match w {
        Some([a, b]) if !(a >= 0.0 && b > a && b.is_finite()) => Err(bad(key, format!("need 0 <= t0 < t1, got [{a}, {b}]"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        self.build_profile()?;
        self.build_interaction()?;
        let g = &self.grid;
        for (key, n) in [("grid.nx", g.nx), ("grid.nv", g.nv)] {
            if n < 4 || !n.is_power_of_two() {
                return Err(bad(key, format!("must be a power of two >= 4, got {n}")));
            }
        }
        positive("grid.vmax", g.vmax)?;
        positive("time.dt", self.time.dt)?;
        positive("time.t_end", self.time.t_end)?;
        if self.time.observe_stride == 0 {
            return Err(bad("time.observe_stride", "must be at least 1"));
        }
        let steps = self.time.t_end / self.time.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(bad("time.t_end", format!("must be a multiple of dt = {}", self.time.dt)));
        }
        let p = &self.perturbation;
        if p.k == 0 || p.k.unsigned_abs() as usize >= g.nx / 2 {
            return Err(bad("perturbation.k", format!("need 0 < |k| < nx/2 = {}", g.nx / 2)));
        }
        if !p.amplitude.is_finite() || !p.phase.is_finite() {
            return Err(bad("perturbation.amplitude", "amplitude and phase must be finite"));
        }
        if let Some(w) = p.width {
            positive("perturbation.width", w)?;
        }
        if let Some(dt) = self.linear.dt {
            positive("linear.dt", dt)?;
        }
        if self.linear.modes.contains(&0) {
            return Err(bad("linear.modes", "mode 0 has no dynamics"));
        }
        window("linear.fit_window", self.linear.fit_window)?;
        window("nonlinear.fit_window", self.nonlinear.fit_window)?;
        let n = &self.nonlinear;
        // bounds tied to the grid only bind the experiment that uses them
        if self.experiment == Experiment::Nonlinear && (n.k_obs < 1 || n.k_obs as usize > g.nx / 2) {
            return Err(bad("nonlinear.k_obs", format!("need 1 <= k_obs <= nx/2 = {}", g.nx / 2)));
        }
        if let Some(a) = n.filter {
            positive("nonlinear.filter", a)?;
        }
        let c = &self.certify;
        positive("certify.lambda_strip", c.lambda_strip)?;
        if !(c.kappa > 0.0 && c.kappa < 1.0) {
            return Err(bad("certify.kappa", format!("must lie in (0, 1), got {}", c.kappa)));
        }
        if c.k_max < 1 {
            return Err(bad("certify.k_max", "must be at least 1"));
        }
        if c.n_re < 2 || c.n_im < 3 {
            return Err(bad("certify.n_re", "need n_re >= 2 and n_im >= 3"));
        }
        positive("certify.z_max", c.z_max)?;
        positive("certify.eta_max", c.eta_max)?;
        if c.z_samples < 2 {
            return Err(bad("certify.z_samples", "need at least 2 samples"));
        }
        let e = &self.echo;
        if e.k1 == 0 || e.k2 == 0 {
            return Err(bad("echo.k1", "initial and kick modes must be nonzero"));
        }
        positive("echo.tau", e.tau)?;
        positive("echo.floor", e.floor)?;
        if self.experiment == Experiment::Echo && e.tau >= self.time.t_end {
            return Err(bad("echo.tau", format!("kick at {} is not before t_end = {}", e.tau, self.time.t_end)));
        }
        let m = &self.norms;
        for (key, v) in [("norms.lambda", m.lambda), ("norms.mu", m.mu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(key, format!("must be >= 0, got {v}")));
            }
        }
        LpIndex::parse(&m.p).map_err(|e| bad("norms.p", e))?;
        if self.experiment == Experiment::Norms && (m.k_max < 1 || m.k_max as usize >= g.nx / 2) {
            return Err(bad("norms.k_max", format!("need 1 <= k_max < nx/2 = {}", g.nx / 2)));
        }
        if let Some(b) = m.lmb_beta {
            positive("norms.lmb_beta", b)?;
        }
        if !(0.0..1.0).contains(&m.noise_floor) {
            return Err(bad("norms.noise_floor", format!("must lie in [0, 1), got {}", m.noise_floor)));
        }
        Ok(())
    }

    pub fn build_profile(&self) -> Result<VelocityProfile, RunError> {
        builtin_profile(&self.profile.name, &self.profile.params).map_err(|e| bad("profile.name", e))
    }

    pub fn build_interaction(&self) -> Result<Interaction, RunError> {
        let s = &self.interaction;
        if s.kind == "none" {
            return Ok(Interaction::none());
        }
        let kind = InteractionKind::parse(&s.kind).map_err(|e| bad("interaction.kind", e))?;
        if kind == InteractionKind::Custom {
            let gamma = s.gamma.unwrap_or(1.0);
            // tightest constant the table admits, or 1 for an all-zero table
            let cw = s.cw.unwrap_or_else(|| {
                let c = s.table.iter().enumerate().map(|(i, w)| w.abs() * ((i + 1) as f64).powf(1.0 + gamma)).fold(0.0, f64::max);
                if c > 0.0 { c } else { 1.0 }
            });
            return Interaction::custom(s.table.clone(), gamma, cw).map_err(|e| bad("interaction.table", e));
        }
        builtin_interaction(kind, s.strength, s.screening).map_err(|e| bad("interaction.strength", e))
    }

    pub fn perturbation_spec(&self) -> PerturbationSpec {
        let p = &self.perturbation;
        PerturbationSpec {
            modes: vec![ModePerturbation {
                k: p.k,
                amplitude: p.amplitude,
                phase: p.phase,
                shape: p.width.map_or(VelocityShape::SameAsF0, VelocityShape::Gaussian),
            }],
            kicks: Vec::new(),
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            nx: self.grid.nx,
            nv: self.grid.nv,
            vmax: self.grid.vmax,
            dt: self.time.dt,
            t_end: self.time.t_end,
            observe_stride: self.time.observe_stride,
            k_obs: self.nonlinear.k_obs.max(self.perturbation.k.abs()),
            ftilde_modes: self.nonlinear.ftilde_modes.clone(),
            ftilde_eta: self.nonlinear.ftilde_eta.clone(),
            record_marginal: self.nonlinear.record_marginal,
            filter: self.nonlinear.filter,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("experiment = \"nonlinear\"\n").unwrap();
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.profile.name, "maxwellian");
        assert_eq!(cfg.time.dt, 1.0 / 32.0);
    }

    #[test]
    fn misspelled_key_is_named() {
        let err = parse_config("experiment = \"nonlinear\"\n[time]\ndtt = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dtt"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_dt_is_a_range_error() {
        let msg = parse_config("experiment = \"nonlinear\"\n[time]\ndt = -0.1\n").unwrap_err().to_string();
        assert!(msg.contains("time.dt") && msg.contains("positive"), "{msg}");
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(parse_config("experiment = \"bogus\"\n").is_err());
        assert!(parse_config("experiment = \"certify\"\n[profile]\nname = \"kappa\"\n").unwrap_err().to_string().contains("profile.name"));
        assert!(parse_config("experiment = \"certify\"\n[interaction]\nkind = \"yukawa\"\n").is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let text = "experiment = \"echo\"\nseed = 7\n[interaction]\nkind = \"screened\"\nstrength = 3.5\nscreening = 0.25\n\
                    [perturbation]\nwidth = 0.7\n[linear]\nfit_window = [1.0, 9.5]\n[echo]\ntau = 2.984375\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn custom_interaction_table() {
        let cfg = parse_config("experiment = \"certify\"\n[interaction]\nkind = \"custom\"\ntable = [0.01, 0.002]\n").unwrap();
        let w = cfg.build_interaction().unwrap();
        assert_eq!(w.what(2), 0.002);
        assert_eq!(w.what(-1), 0.01);
    }
}
