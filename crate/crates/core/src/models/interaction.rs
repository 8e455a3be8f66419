use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    Coulomb,
    Newton,
    Screened,
    Custom,
}

impl InteractionKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "coulomb" => Ok(Self::Coulomb),
            "newton" => Ok(Self::Newton),
            "screened" => Ok(Self::Screened),
            "custom" | "none" => Ok(Self::Custom),
            _ => Err(Error::UnknownName {
                what: "interaction",
                name: name.to_string(),
            }),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Coulomb => "coulomb",
            Self::Newton => "newton",
            Self::Screened => "screened",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pair potential on the unit torus, described by its Fourier multiplier.
///
/// With the transform convention `f^(k) = int f(x) exp(-2 i pi k x) dx`, the
/// self-consistent force is `F^(k) = -2 i pi k W^(k) rho^(k)`. The mean mode
/// exerts no force, so `W^(0)` is always reported as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    kind: InteractionKind,
    strength: f64,
    screening: Option<f64>,
    /// Tabulated multipliers for `custom`, indexed by |k| starting at k = 1.
    table: Vec<f64>,
    gamma: f64,
    cw: f64,
}

impl Interaction {
    /// The zero interaction (free transport).
    pub fn none() -> Self {
        Self {
            kind: InteractionKind::Custom,
            strength: 0.0,
            screening: None,
            table: Vec::new(),
            gamma: 1.0,
            cw: 1.0,
        }
    }

    /// Even interaction given by `W^(k)` for k = 1..=table.len(), zero beyond.
    pub fn custom(table: Vec<f64>, gamma: f64, cw: f64) -> Result<Self> {
        if table.iter().any(|w| !w.is_finite()) {
            return Err(invalid("table", "non-finite multiplier"));
        }
        check_decay(gamma, cw)?;
        Ok(Self {
            kind: InteractionKind::Custom,
            strength: 0.0,
            screening: None,
            table,
            gamma,
            cw,
        })
    }

    /// Replaces the decay constants used by the decay-hypothesis check.
    pub fn with_decay(mut self, gamma: f64, cw: f64) -> Result<Self> {
        check_decay(gamma, cw)?;
        self.gamma = gamma;
        self.cw = cw;
        Ok(self)
    }

    pub fn kind(&self) -> InteractionKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn screening(&self) -> Option<f64> {
        self.screening
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cw(&self) -> f64 {
        self.cw
    }

    /// Fourier multiplier `W^(k)`; zero at k = 0.
    pub fn what(&self, k: i64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let k2 = (k as f64) * (k as f64);
        match self.kind {
            InteractionKind::Coulomb => self.strength / (4.0 * PI * PI * k2),
            InteractionKind::Newton => -self.strength / (4.0 * PI * PI * k2),
            InteractionKind::Screened => {
                let s = self.screening.unwrap_or(0.0);
                self.strength / (4.0 * PI * PI * (k2 + s * s))
            }
            InteractionKind::Custom => {
                let idx = k.unsigned_abs() as usize;
                self.table.get(idx - 1).copied().unwrap_or(0.0)
            }
        }
    }

    /// `max_{1 <= |k| <= k_max} |W^(k)|`.
    pub fn max_abs_what(&self, k_max: i64) -> f64 {
        (1..=k_max.max(1))
            .map(|k| self.what(k).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            InteractionKind::Custom => self.table.iter().all(|w| *w == 0.0),
            _ => self.strength == 0.0,
        }
    }

    /// Short description used in metadata files.
    pub fn describe(&self) -> String {
        match self.kind {
            InteractionKind::Screened => format!(
                "screened(strength={}, screening={})",
                self.strength,
                self.screening.unwrap_or(0.0)
            ),
            InteractionKind::Custom => format!("custom({} modes)", self.table.len()),
            k => format!("{k}(strength={})", self.strength),
        }
    }
}

fn check_decay(gamma: f64, cw: f64) -> Result<()> {
    if !(gamma >= 1.0) {
        return Err(invalid("gamma", format!("decay exponent must be >= 1, got {gamma}")));
    }
    if !(cw > 0.0) {
        return Err(invalid("cw", format!("decay constant must be positive, got {cw}")));
    }
    Ok(())
}

/// Coulomb, Newton or screened interaction of the given strength.
///
/// Coulomb solves the periodic Poisson problem `-phi'' = strength (rho - <rho>)`,
/// Newton is its negative (attractive), and the screened potential replaces
/// `k^2` by `k^2 + screening^2`. All three decay with `gamma = 1`.
pub fn builtin_interaction(
    kind: InteractionKind,
    strength: f64,
    screening: Option<f64>,
) -> Result<Interaction> {
    if !(strength > 0.0) || !strength.is_finite() {
        return Err(invalid("strength", format!("must be positive, got {strength}")));
    }
    let screening = match kind {
        InteractionKind::Screened => match screening {
            Some(s) if s > 0.0 && s.is_finite() => Some(s),
            Some(s) => return Err(invalid("screening", format!("must be positive, got {s}"))),
            None => return Err(invalid("screening", "required for the screened interaction")),
        },
        InteractionKind::Custom => {
            return Err(invalid("kind", "custom interactions are built with Interaction::custom"))
        }
        _ => None,
    };
    Ok(Interaction {
        kind,
        strength,
        screening,
        table: Vec::new(),
        gamma: 1.0,
        cw: strength / (4.0 * PI * PI),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondWReport {
    pub pass: bool,
    /// Mode with the largest ratio `|W^(k)| |k|^(1+gamma) / C_W`.
    pub worst_k: i64,
    pub worst_ratio: f64,
}

/// Checks `|W^(k)| <= C_W / |k|^(1+gamma)` for `1 <= |k| <= k_max`.
pub fn verify_cond_w(interaction: &Interaction, k_max: i64) -> Result<CondWReport> {
    if k_max < 1 {
        return Err(invalid("k_max", "must be at least 1"));
    }
    let mut worst_k = 1;
    let mut worst_ratio = f64::NEG_INFINITY;
    for k in 1..=k_max {
        let ratio = interaction.what(k).abs() * (k as f64).powf(1.0 + interaction.gamma) / interaction.cw;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_k = k;
        }
    }
    Ok(CondWReport {
        // equality holds identically for the built-ins; allow for rounding
        pass: worst_ratio <= 1.0 + 1e-12,
        worst_k,
        worst_ratio,
    })
}
