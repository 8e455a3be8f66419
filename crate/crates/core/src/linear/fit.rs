use crate::error::{invalid, Error, Result};

use super::volterra::ModeHistory;

/// Samples with `|rho| < DECAY_FIT_FLOOR * max |rho|` (over the whole history)
/// are treated as round-off and excluded from fits.
pub const DECAY_FIT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Exponential rate: `|rho| ~ exp(intercept - rate t)`.
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-linear regression.
    pub quality: f64,
    /// Envelope points `(t, ln |rho|)` used by the regression.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares decay rate of `ln |rho|` over the envelope maxima inside
/// `window`. Peaks are refined by a parabola through the three samples around
/// each discrete maximum. A window in which `|rho|` is monotone is its own
/// envelope, and then every sample is used.
pub fn fit_decay_rate(history: &ModeHistory, window: (f64, f64)) -> Result<DecayFit> {
    let (ta, tb) = window;
    if !(tb > ta) {
        return Err(invalid("window", "empty time window"));
    }
    if ta < history.t0() - 1e-12 || tb > history.horizon() + 1e-9 * history.dt() {
        return Err(invalid("window", format!("[{ta}, {tb}] not inside the history")));
    }
    let amp: Vec<f64> = history.values().iter().map(|v| v.norm()).collect();
    let floor = DECAY_FIT_FLOOR * amp.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..amp.len())
        .filter(|&i| {
            let t = history.time(i);
            t >= ta - 1e-12 && t <= tb + 1e-12 && amp[i] > floor
        })
        .collect();

    let mut points = Vec::new();
    for w in idx.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        if b != a + 1 || c != b + 1 {
            continue;
        }
        if amp[b] >= amp[a] && amp[b] > amp[c] {
            let (la, lb, lc) = (amp[a].ln(), amp[b].ln(), amp[c].ln());
            let denom = la - 2.0 * lb + lc;
            let (shift, peak) = if denom < 0.0 {
                let s = 0.5 * (la - lc) / denom;
                (s, lb - 0.25 * (la - lc) * s)
            } else {
                (0.0, lb)
            };
            points.push((history.time(b) + shift * history.dt(), peak));
        }
    }

    let monotone = idx.windows(2).all(|w| w[1] == w[0] + 1 && amp[w[1]] < amp[w[0]])
        || idx.windows(2).all(|w| w[1] == w[0] + 1 && amp[w[1]] > amp[w[0]]);
    if points.is_empty() && monotone && idx.len() >= 3 {
        points = idx.iter().map(|&i| (history.time(i), amp[i].ln())).collect();
    }
    if points.len() < 3 {
        return Err(Error::TooFewMaxima { found: points.len() });
    }

    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let quality = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        quality,
        points,
    })
}
