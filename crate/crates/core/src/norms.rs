//! Analytic hybrid norms of phase-space fields, evaluated as truncated series.
//!
//! All norms are diagnostics: nothing in the solver depends on them.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::sim::{signed_freq, transform_v, PhaseSpaceField};

/// Integrability index of the velocity integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpIndex {
    One,
    Two,
    Inf,
}

impl LpIndex {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            "inf" | "infinity" => Ok(Self::Inf),
            _ => Err(Error::UnknownName { what: "p", name: s.to_string() }),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::One => "1",
            Self::Two => "2",
            Self::Inf => "inf",
        }
    }

    fn norm(&self, g: &[Complex64], dv: f64) -> f64 {
        match self {
            Self::One => g.iter().map(|c| c.norm()).sum::<f64>() * dv,
            Self::Two => (g.iter().map(|c| c.norm_sqr()).sum::<f64>() * dv).sqrt(),
            Self::Inf => g.iter().fold(0.0, |m, c| m.max(c.norm())),
        }
    }
}

/// Indices of the gliding norm plus truncation orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlidingNormSpec {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub p: LpIndex,
    pub tau: f64,
    pub n_max: usize,
    pub k_max: i64,
    /// Spectral coefficients below this fraction of the largest are dropped.
    pub noise_floor: f64,
}

impl Default for GlidingNormSpec {
    fn default() -> Self {
        Self { lambda: 0.5, mu: 0.0, gamma: 0.0, p: LpIndex::One, tau: 0.0, n_max: 24, k_max: 4, noise_floor: NOISE_FLOOR }
    }
}

impl GlidingNormSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be >= 0"));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(invalid("mu", "must be >= 0"));
        }
        if !self.gamma.is_finite() || !self.tau.is_finite() {
            return Err(invalid("gamma", "gamma and tau must be finite"));
        }
        if self.k_max < 1 {
            return Err(invalid("k_max", "must be >= 1"));
        }
        check_floor(self.noise_floor)?;
        if self.n_max == 0 && self.lambda > 0.0 {
            // a single term cannot carry a remainder estimate
            return Err(invalid("n_max", "must be >= 1 when lambda > 0"));
        }
        Ok(())
    }
}

/// A truncated series value with its estimated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub remainder: f64,
}

/// Spectral content above this fraction of the Nyquist frequency counts as
/// unresolved for the derivative series.
const ALIAS_BAND: f64 = 0.75;

/// Default noise floor: velocity-spectral coefficients below this fraction of
/// the field's largest coefficient are roundoff and are dropped before any
/// exponential weighting. Fields evolved over many steps carry more roundoff
/// and may need a larger floor.
pub const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

fn check_floor(floor: f64) -> Result<()> {
    if !(0.0..1.0).contains(&floor) {
        return Err(invalid("noise_floor", format!("must lie in [0, 1), got {floor}")));
    }
    Ok(())
}

/// v-spectra of the x-modes `-k_max..=k_max`, with coefficients below
/// `noise_floor` (relative) zeroed.
fn denoised_spectra(field: &PhaseSpaceField, k_max: i64, noise_floor: f64) -> Result<Vec<(i64, Vec<Complex64>)>> {
    let fwd = FftPlanner::new().plan_fft_forward(field.nv());
    let mut out = Vec::with_capacity(2 * k_max as usize + 1);
    let mut top: f64 = 0.0;
    for k in -k_max..=k_max {
        let mut c = field.x_mode(k)?;
        fwd.process(&mut c);
        top = c.iter().fold(top, |m, z| m.max(z.norm()));
        out.push((k, c));
    }
    let floor = noise_floor * top;
    for (_, c) in out.iter_mut() {
        for z in c.iter_mut() {
            if z.norm() < floor {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(out)
}

/// Truncated gliding norm
/// `sum_k sum_n e^{2 pi mu |k|} (1+|k|)^gamma lambda^n/n! ||(d_v + 2 i pi tau k)^n f^(k, .)||_{L^p}`.
pub fn z_norm(field: &PhaseSpaceField, spec: &GlidingNormSpec) -> Result<NormValue> {
    spec.validate()?;
    let nx = field.nx() as i64;
    if spec.k_max > nx / 2 - 1 {
        return Err(invalid("k_max", format!("must be below the x-grid Nyquist index {}", nx / 2)));
    }
    let nv = field.nv();
    let dv = field.dv();
    let deta = field.deta();
    let inv = FftPlanner::new().plan_fft_inverse(nv);
    // term[n] summed over k
    let mut terms = vec![0.0; spec.n_max + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); nv];
    for (k, mut cur) in denoised_spectra(field, spec.k_max, spec.noise_floor)? {
        let weight = (2.0 * PI * spec.mu * k.abs() as f64).exp() * (1.0 + k.abs() as f64).powf(spec.gamma);
        let symbol: Vec<Complex64> = (0..nv)
            .map(|m| {
                if m == nv / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, 2.0 * PI * (signed_freq(m, nv) as f64 * deta + spec.tau * k as f64))
                }
            })
            .collect();
        if spec.lambda > 0.0 && spec.n_max > 0 {
            check_resolved(&cur, nv)?;
        }
        for n in 0..=spec.n_max {
            if n > 0 {
                for (c, s) in cur.iter_mut().zip(&symbol) {
                    *c *= s;
                }
            }
            buf.copy_from_slice(&cur);
            inv.process(&mut buf);
            buf.iter_mut().for_each(|c| *c /= nv as f64);
            terms[n] += weight * factorial_weight(spec.lambda, n) * spec.p.norm(&buf, dv);
        }
    }
    series_value(&terms)
}

fn factorial_weight(lambda: f64, n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, m| acc * lambda / m as f64)
}

fn check_resolved(spectrum: &[Complex64], nv: usize) -> Result<()> {
    let band = (ALIAS_BAND * (nv / 2) as f64) as i64;
    let top = spectrum.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let edge = spectrum
        .iter()
        .enumerate()
        .filter(|(m, _)| signed_freq(*m, nv).abs() >= band)
        .fold(0.0f64, |m, (_, c)| m.max(c.norm()));
    if edge > 0.0 {
        return Err(Error::GridTooCoarse(format!(
            "velocity spectrum has content {:.1e} (relative) above {}% of the Nyquist frequency",
            edge / top,
            (ALIAS_BAND * 100.0) as i64
        )));
    }
    Ok(())
}

fn series_value(terms: &[f64]) -> Result<NormValue> {
    let value: f64 = terms.iter().sum();
    let n = terms.len() - 1;
    if n == 0 || terms[n] == 0.0 {
        return Ok(NormValue { value, remainder: 0.0 });
    }
    let r = terms[n] / terms[n - 1];
    if !(r < 1.0) {
        return Err(Error::SeriesDivergence(format!(
            "derivative series terms grow at order {n} (ratio {r:.3}); lambda exceeds the analyticity width"
        )));
    }
    Ok(NormValue { value, remainder: terms[n] * r / (1.0 - r) })
}

/// Weighted spatial norm `sum_k |f^(k)| e^{2 pi w |k|} (1+|k|)^gamma`, with
/// `w = lambda tau + mu`; `homogeneous` drops `k = 0`.
pub fn f_norm(coeffs: &[(i64, Complex64)], weight: f64, gamma: f64, homogeneous: bool) -> Result<f64> {
    if !weight.is_finite() || !gamma.is_finite() {
        return Err(invalid("weight", "weight and gamma must be finite"));
    }
    let mut terms: Vec<(u64, f64)> = coeffs
        .iter()
        .filter(|(k, _)| !(homogeneous && *k == 0))
        .map(|(k, c)| {
            let a = k.unsigned_abs();
            (a, c.norm() * (2.0 * PI * weight * a as f64).exp() * (1.0 + a as f64).powf(gamma))
        })
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let sum: f64 = terms.iter().map(|t| t.1).sum();
    if !sum.is_finite() {
        return Err(Error::SeriesDivergence("weighted mode sum overflows".into()));
    }
    // tail monotonicity among |k| >= 2: three growing shells signal divergence
    let mut shells: Vec<(u64, f64)> = Vec::new();
    for (a, t) in terms.iter().filter(|t| t.0 >= 2 && t.1 > 0.0) {
        match shells.last_mut() {
            Some(last) if last.0 == *a => last.1 += t,
            _ => shells.push((*a, *t)),
        }
    }
    if shells.len() >= 3 {
        let s = &shells[shells.len() - 3..];
        if s[0].1 < s[1].1 && s[1].1 < s[2].1 && s[2].1 > 1e-12 * sum {
            return Err(Error::SeriesDivergence(format!(
                "weighted modes grow up to |k| = {}",
                s[2].0
            )));
        }
    }
    Ok(sum)
}

/// Result of comparing the gliding norm of a v-independent function with the
/// spatial norm of weight `lambda tau + mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coincidence {
    pub z: f64,
    pub f: f64,
    pub rel_diff: f64,
    /// Number of derivative orders summed.
    pub orders: usize,
}

/// For `f = f(x)` the velocity derivative vanishes and
/// `(d_v + 2 i pi tau k)^n f^(k) = (2 i pi tau k)^n f^(k)`; the z-series is summed
/// (past `n_max` if needed, until the terms drop below roundoff) and compared
/// with the closed-form spatial norm. The velocity integral is taken per unit
/// velocity, as a v-independent function is not integrable on the line.
pub fn coincidence_check(coeffs: &[(i64, Complex64)], spec: &GlidingNormSpec) -> Result<Coincidence> {
    spec.validate()?;
    let f = f_norm(coeffs, spec.lambda * spec.tau + spec.mu, spec.gamma, false)?;
    let mut z = 0.0;
    let mut orders = 0;
    for (k, c) in coeffs {
        let a = k.unsigned_abs() as f64;
        let weight = c.norm() * (2.0 * PI * spec.mu * a).exp() * (1.0 + a).powf(spec.gamma);
        let x = 2.0 * PI * spec.tau.abs() * a * spec.lambda;
        // sum_n x^n / n! with terms accumulated in increasing n
        let mut term = 1.0;
        let mut s = 0.0;
        let mut n = 0usize;
        loop {
            s += term;
            n += 1;
            term *= x / n as f64;
            if (n > spec.n_max && term <= f64::EPSILON * 1e-3 * s) || n > 10_000 {
                break;
            }
        }
        orders = orders.max(n);
        z += weight * s;
    }
    let scale = f.abs().max(z.abs());
    let rel_diff = if scale == 0.0 { 0.0 } else { (z - f).abs() / scale };
    Ok(Coincidence { z, f, rel_diff, orders })
}

/// Indices of the sup-plus-moment norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmbSpec {
    pub lambda: f64,
    pub mu: f64,
    pub beta: f64,
    pub noise_floor: f64,
}

impl LmbSpec {
    pub fn new(lambda: f64, mu: f64, beta: f64) -> Self {
        Self { lambda, mu, beta, noise_floor: NOISE_FLOOR }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("lambda", self.lambda), ("mu", self.mu), ("beta", self.beta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(n, format!("must be positive, got {v}")));
            }
        }
        check_floor(self.noise_floor)
    }
}

/// Exponent budget for `e^{2 pi beta V}`.
const EXP_BUDGET: f64 = 700.0;

/// `sup_{k, eta} |f~(k, eta)| e^{2 pi lambda |eta|} e^{2 pi mu |k|} + int int |f| e^{2 pi beta |v|} dv dx`
/// over the resolvable modes; the sup is refined off-grid by golden-section search.
/// Content above 75% of the velocity Nyquist frequency would be aliased, so
/// it is rejected.
pub fn lmb_norm(field: &PhaseSpaceField, spec: &LmbSpec) -> Result<f64> {
    spec.validate()?;
    let vmax = field.vmax();
    if 2.0 * PI * spec.beta * vmax > EXP_BUDGET {
        return Err(Error::Overflow(format!(
            "2 pi beta V = {:.1} exceeds the exponent budget {EXP_BUDGET}",
            2.0 * PI * spec.beta * vmax
        )));
    }
    let nv = field.nv();
    let dv = field.dv();
    let deta = field.deta();
    let kx = field.nx() as i64 / 2 - 1;
    let mut sup: f64 = 0.0;
    for (k, c) in denoised_spectra(field, kx, spec.noise_floor)? {
        check_resolved(&c, nv)?;
        let g = field.x_mode(k)?;
        let wk = (2.0 * PI * spec.mu * k.abs() as f64).exp();
        let weighted = |eta: f64, ft: Complex64| ft.norm() * (2.0 * PI * spec.lambda * eta.abs()).exp() * wk;
        let mut best = (0.0, 0.0);
        for (m, cm) in c.iter().enumerate() {
            if m == nv / 2 {
                continue;
            }
            let q = signed_freq(m, nv);
            let eta = q as f64 * deta;
            // v_0 = -V gives the phase (-1)^q
            let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let w = weighted(eta, cm * dv * sign);
            if w > best.1 {
                best = (eta, w);
            }
        }
        if best.1 > 0.0 && best.0.abs() + deta < field.eta_nyquist() {
            let limit = field.eta_nyquist();
            let (a, b) = ((best.0 - deta).max(-limit), (best.0 + deta).min(limit));
            let h = |eta: f64| -weighted(eta, transform_v(&g, vmax, dv, eta));
            let (eta, val) = golden_min(h, a, b, 1e-12);
            best = if -val > best.1 { (eta, -val) } else { best };
        }
        sup = sup.max(best.1);
    }
    let mut moment = 0.0;
    let w: Vec<f64> = (0..nv).map(|j| (2.0 * PI * spec.beta * field.v(j).abs()).exp()).collect();
    for i in 0..field.nx() {
        moment += field.row(i).iter().zip(&w).map(|(f, w)| f.abs() * w).sum::<f64>();
    }
    moment *= field.dx() * dv;
    let out = sup + moment;
    if !out.is_finite() {
        return Err(Error::Overflow("norm is not finite".into()));
    }
    Ok(out)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// One row of `norms.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub t: f64,
    pub family: String,
    pub spec: GlidingNormSpec,
    pub value: NormValue,
}

pub fn norms_csv(records: &[NormRecord]) -> String {
    let mut s = String::from("t,family,lambda,mu,gamma,p,tau,value,remainder\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:.17e},{:.6e}",
            r.t,
            r.family,
            r.spec.lambda,
            r.spec.mu,
            r.spec.gamma,
            r.spec.p.as_str(),
            r.spec.tau,
            r.value.value,
            r.value.remainder
        );
    }
    s
}
