use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::models::VelocityProfile;

use super::field::PhaseSpaceField;

/// Largest admissible `f0(+-V)`.
pub const CUTOFF_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityShape {
    SameAsF0,
    /// Centred Gaussian of the given standard deviation, unit mass.
    Gaussian(f64),
}

/// One cosine mode `amplitude * cos(2 pi k x + phase)` of the initial datum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePerturbation {
    pub k: i64,
    pub amplitude: f64,
    pub phase: f64,
    pub shape: VelocityShape,
}

impl ModePerturbation {
    pub fn cosine(k: i64, amplitude: f64) -> Self {
        Self { k, amplitude, phase: 0.0, shape: VelocityShape::SameAsF0 }
    }
}

/// Impulsive forcing: the velocity jump `amplitude * sin(2 pi mode x)` applied
/// in the single step whose interval contains `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kick {
    pub time: f64,
    pub mode: i64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerturbationSpec {
    pub modes: Vec<ModePerturbation>,
    pub kicks: Vec<Kick>,
}

impl PerturbationSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(k: i64, amplitude: f64) -> Self {
        Self { modes: vec![ModePerturbation::cosine(k, amplitude)], kicks: Vec::new() }
    }

    pub fn with_kick(mut self, kick: Kick) -> Self {
        self.kicks.push(kick);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.modes {
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return Err(invalid("amplitude", "must be finite"));
            }
            if let VelocityShape::Gaussian(w) = m.shape {
                if !(w > 0.0) || !w.is_finite() {
                    return Err(invalid("width", format!("must be positive, got {w}")));
                }
            }
        }
        for k in &self.kicks {
            if !k.amplitude.is_finite() || !(k.time >= 0.0) || !k.time.is_finite() {
                return Err(invalid("kick", "time must be >= 0 and amplitude finite"));
            }
        }
        Ok(())
    }
}

/// Initial datum `f0(v) + sum_k amp cos(2 pi k x + phase) g_k(v)` with `g_k = f0`
/// or a unit Gaussian.
pub fn init_state(
    profile: &VelocityProfile,
    perturbation: &PerturbationSpec,
    nx: usize,
    nv: usize,
    vmax: f64,
) -> Result<PhaseSpaceField> {
    perturbation.validate()?;
    let edge = profile.eval(vmax).max(profile.eval(-vmax));
    if !(edge < CUTOFF_THRESHOLD) {
        return Err(Error::CutoffTooSmall { vmax, value: edge, threshold: CUTOFF_THRESHOLD });
    }
    for m in &perturbation.modes {
        if m.k.unsigned_abs() as usize >= nx / 2 {
            return Err(invalid("k", format!("mode {} not below the x-grid Nyquist index {}", m.k, nx / 2)));
        }
    }
    let modes = perturbation.modes.clone();
    let field = PhaseSpaceField::from_fn(nx, nv, vmax, |x, v| {
        let f0 = profile.eval(v);
        let mut f = f0;
        for m in &modes {
            let c = m.amplitude * (2.0 * PI * m.k as f64 * x + m.phase).cos();
            f += c * match m.shape {
                VelocityShape::SameAsF0 => f0,
                VelocityShape::Gaussian(w) => (-0.5 * v * v / (w * w)).exp() / (w * (2.0 * PI).sqrt()),
            };
        }
        f
    })?;
    let min = field.min_value();
    if min < 0.0 {
        return Err(Error::NegativeDistribution { min });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin_profile;
    use num_complex::Complex64;

    #[test]
    fn single_mode_density() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let f = init_state(&p, &PerturbationSpec::single(1, 1e-3), 16, 256, 8.0).unwrap();
        assert!((f.rho_hat(1).unwrap() - Complex64::new(5e-4, 0.0)).norm() < 1e-15);
        assert!((f.mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn modes_superpose() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let mut spec = PerturbationSpec::single(1, 1e-3);
        spec.modes.push(ModePerturbation { k: 2, amplitude: 2e-3, phase: 0.5, shape: VelocityShape::SameAsF0 });
        let both = init_state(&p, &spec, 16, 256, 8.0).unwrap();
        let two = init_state(
            &p,
            &PerturbationSpec { modes: vec![spec.modes[1]], kicks: vec![] },
            16,
            256,
            8.0,
        )
        .unwrap();
        assert!((both.rho_hat(2).unwrap() - two.rho_hat(2).unwrap()).norm() < 1e-15);
        assert!((both.rho_hat(2).unwrap() - Complex64::from_polar(1e-3, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn gaussian_shape_mode() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        let spec = PerturbationSpec {
            modes: vec![ModePerturbation { k: 1, amplitude: 0.01, phase: 0.0, shape: VelocityShape::Gaussian(0.5) }],
            kicks: vec![],
        };
        let f = init_state(&p, &spec, 16, 512, 8.0).unwrap();
        assert!((f.rho_hat(1).unwrap().re - 0.005).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let p = builtin_profile("maxwellian", &[]).unwrap();
        assert!(matches!(
            init_state(&p, &PerturbationSpec::single(1, 1e-3), 16, 256, 4.0),
            Err(Error::CutoffTooSmall { .. })
        ));
        assert!(matches!(
            init_state(&p, &PerturbationSpec::single(1, 1.5), 16, 256, 8.0),
            Err(Error::NegativeDistribution { .. })
        ));
        assert!(init_state(&p, &PerturbationSpec::single(8, 1e-3), 16, 256, 8.0).is_err());
    }
}
