use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::models::Interaction;

use super::field::{signed_freq, PhaseSpaceField};

/// Order of the optional high-frequency velocity filter `exp(-a (|eta|/eta_N)^36)`.
pub const FILTER_ORDER: i32 = 36;

/// Self-consistent force `F = -W' * rho` on the x-grid, via `F^(k) = -2 i pi k W^(k) rho^(k)`.
pub fn force_field(state: &PhaseSpaceField, interaction: &Interaction) -> Vec<f64> {
    let nx = state.nx();
    let mut modes = state.density_modes();
    for (m, c) in modes.iter_mut().enumerate() {
        let k = signed_freq(m, nx);
        if m == 0 || (m == nx / 2) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, -2.0 * PI * k as f64 * interaction.what(k));
        }
    }
    FftPlanner::new().plan_fft_inverse(nx).process(&mut modes);
    modes.into_iter().map(|c| c.re).collect()
}

/// Strang splitting: half free transport, full velocity kick at the half-step
/// density, half free transport. Each sub-flow is an exact spectral phase shift.
/// Nyquist bins cannot carry a shift of a real signal and are left untouched, so
/// every sub-flow is exactly invertible by reversing its sign.
pub struct Stepper {
    interaction: Interaction,
    nx: usize,
    nv: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fv: Arc<dyn Fft<f64>>,
    iv: Arc<dyn Fft<f64>>,
    cols: Vec<Complex64>,
    filter: Option<f64>,
    imag_residue: f64,
}

impl Stepper {
    pub fn new(field: &PhaseSpaceField, interaction: &Interaction) -> Self {
        let mut planner = FftPlanner::new();
        let (nx, nv) = (field.nx(), field.nv());
        Self {
            interaction: interaction.clone(),
            nx,
            nv,
            fx: planner.plan_fft_forward(nx),
            ix: planner.plan_fft_inverse(nx),
            fv: planner.plan_fft_forward(nv),
            iv: planner.plan_fft_inverse(nv),
            cols: vec![Complex64::new(0.0, 0.0); nx * nv],
            filter: None,
            imag_residue: 0.0,
        }
    }

    /// Enables the exponential velocity filter with strength `a` (off by default).
    pub fn with_filter(mut self, a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(invalid("filter", format!("strength must be >= 0, got {a}")));
        }
        self.filter = (a > 0.0).then_some(a);
        Ok(self)
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    /// Largest imaginary part left by an inverse transform since the last
    /// reset, relative to the field's sup norm.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn reset_imag_residue(&mut self) {
        self.imag_residue = 0.0;
    }

    /// One step of length `dt` (negative steps run backwards). `impulse`, when
    /// given, is an extra velocity jump per x-node added in the kick.
    pub fn step(&mut self, field: &mut PhaseSpaceField, dt: f64, impulse: Option<&[f64]>) -> Result<()> {
        if field.nx() != self.nx || field.nv() != self.nv {
            return Err(invalid("field", "grid differs from the one the stepper was built for"));
        }
        if !dt.is_finite() || dt == 0.0 {
            return Err(invalid("dt", format!("must be finite and nonzero, got {dt}")));
        }
        if let Some(j) = impulse {
            if j.len() != self.nx {
                return Err(invalid("impulse", "one value per x-node required"));
            }
        }
        self.transport(field, 0.5 * dt);
        let mut shift = force_field(field, &self.interaction);
        for (i, s) in shift.iter_mut().enumerate() {
            *s *= dt;
            if let Some(j) = impulse {
                *s += j[i];
            }
        }
        self.kick(field, &shift);
        self.transport(field, 0.5 * dt);
        let t = field.time() + dt;
        field.set_time(t);
        if !field.is_finite() {
            return Err(Error::NonFinite { time: t });
        }
        Ok(())
    }

    fn transport(&mut self, field: &mut PhaseSpaceField, tau: f64) {
        let (nx, nv) = (self.nx, self.nv);
        let vmax = field.vmax();
        let dv = field.dv();
        let (fx, ix) = (&self.fx, &self.ix);
        let data = field.data();
        self.cols.par_chunks_mut(nx).enumerate().for_each_init(
            || vec![Complex64::new(0.0, 0.0); fx.get_inplace_scratch_len().max(ix.get_inplace_scratch_len())],
            |scratch, (j, col)| {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = Complex64::new(data[i * nv + j], 0.0);
                }
                fx.process_with_scratch(col, scratch);
                let v = -vmax + j as f64 * dv;
                for (m, c) in col.iter_mut().enumerate() {
                    if m != nx / 2 {
                        *c *= Complex64::from_polar(1.0, -2.0 * PI * signed_freq(m, nx) as f64 * v * tau);
                    }
                }
                ix.process_with_scratch(col, scratch);
            },
        );
        let cols = &self.cols;
        let s = 1.0 / nx as f64;
        let residue = field
            .data_mut()
            .par_chunks_mut(nv)
            .enumerate()
            .map(|(i, row)| {
                let mut r: f64 = 0.0;
                for (j, f) in row.iter_mut().enumerate() {
                    let c = cols[j * nx + i] * s;
                    *f = c.re;
                    r = r.max(c.im.abs());
                }
                r
            })
            .reduce(|| 0.0, f64::max);
        self.note_residue(field, residue);
    }

    fn kick(&mut self, field: &mut PhaseSpaceField, shift: &[f64]) {
        let nv = self.nv;
        let deta = field.deta();
        let (fv, iv) = (&self.fv, &self.iv);
        let filter = self.filter;
        let s = 1.0 / nv as f64;
        let residue = field
            .data_mut()
            .par_chunks_mut(nv)
            .enumerate()
            .map_init(
                || {
                    (
                        vec![Complex64::new(0.0, 0.0); nv],
                        vec![Complex64::new(0.0, 0.0); fv.get_inplace_scratch_len().max(iv.get_inplace_scratch_len())],
                    )
                },
                |(buf, scratch), (i, row)| {
                    for (b, f) in buf.iter_mut().zip(row.iter()) {
                        *b = Complex64::new(*f, 0.0);
                    }
                    fv.process_with_scratch(buf, scratch);
                    for (m, c) in buf.iter_mut().enumerate() {
                        let q = signed_freq(m, nv) as f64;
                        if m != nv / 2 {
                            *c *= Complex64::from_polar(1.0, -2.0 * PI * q * deta * shift[i]);
                        }
                        if let Some(a) = filter {
                            *c *= (-a * (2.0 * q.abs() / nv as f64).powi(FILTER_ORDER)).exp();
                        }
                    }
                    iv.process_with_scratch(buf, scratch);
                    let mut r: f64 = 0.0;
                    for (f, b) in row.iter_mut().zip(buf.iter()) {
                        *f = b.re * s;
                        r = r.max((b.im * s).abs());
                    }
                    r
                },
            )
            .reduce(|| 0.0, f64::max);
        self.note_residue(field, residue);
    }

    fn note_residue(&mut self, field: &PhaseSpaceField, residue: f64) {
        let scale = field.max_abs();
        if scale > 0.0 {
            self.imag_residue = self.imag_residue.max(residue / scale);
        }
    }
}

/// Convenience single step without reusing transform plans.
pub fn strang_step(state: &mut PhaseSpaceField, interaction: &Interaction, dt: f64) -> Result<()> {
    Stepper::new(state, interaction).step(state, dt, None)
}
