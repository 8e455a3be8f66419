use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Signed frequency index of FFT bin `m` out of `n` (Nyquist reported as `n/2`).
pub(crate) fn signed_freq(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Distribution `f(x, v)` on `x_i = i/nx`, `v_j = -V + j dv`, `dv = 2V/nv`.
/// Stored x-major: `data[i * nv + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    nx: usize,
    nv: usize,
    vmax: f64,
    time: f64,
    data: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(nx: usize, nv: usize, vmax: f64, f: F) -> Result<Self> {
        check_grid(nx, nv, vmax)?;
        let dv = 2.0 * vmax / nv as f64;
        let mut data = Vec::with_capacity(nx * nv);
        for i in 0..nx {
            let x = i as f64 / nx as f64;
            for j in 0..nv {
                data.push(f(x, -vmax + j as f64 * dv));
            }
        }
        Ok(Self { nx, nv, vmax, time: 0.0, data })
    }

    pub fn from_data(nx: usize, nv: usize, vmax: f64, time: f64, data: Vec<f64>) -> Result<Self> {
        check_grid(nx, nv, vmax)?;
        if data.len() != nx * nv {
            return Err(crate::error::invalid("data", format!("expected {} values, got {}", nx * nv, data.len())));
        }
        Ok(Self { nx, nv, vmax, time, data })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn v(&self, j: usize) -> f64 {
        -self.vmax + j as f64 * self.dv()
    }

    pub fn v_grid(&self) -> Vec<f64> {
        (0..self.nv).map(|j| self.v(j)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.nv + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.nv..(i + 1) * self.nv]
    }

    /// Velocity-frequency spacing `1/(2V)`.
    pub fn deta(&self) -> f64 {
        0.5 / self.vmax
    }

    /// Largest resolvable `|eta|` (the Nyquist frequency of the v-grid).
    pub fn eta_nyquist(&self) -> f64 {
        self.nv as f64 / (4.0 * self.vmax)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.dx() * self.dv()
    }

    /// Spatial density `rho(x_i) = int f dv`.
    pub fn density(&self) -> Vec<f64> {
        let dv = self.dv();
        (0..self.nx).map(|i| self.row(i).iter().sum::<f64>() * dv).collect()
    }

    /// All spatial modes of the density, in FFT order.
    pub fn density_modes(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.density().into_iter().map(|r| Complex64::new(r, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(self.nx).process(&mut buf);
        let s = 1.0 / self.nx as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    /// `rho^(k)`; `None` when `|k|` exceeds the x-grid's Nyquist index.
    pub fn rho_hat(&self, k: i64) -> Option<Complex64> {
        if k.unsigned_abs() as usize > self.nx / 2 {
            return None;
        }
        Some(self.density_modes()[k.rem_euclid(self.nx as i64) as usize])
    }

    /// x-average of `f`, the `k = 0` mode as a function of `v`.
    pub fn velocity_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nv];
        for i in 0..self.nx {
            for (o, f) in out.iter_mut().zip(self.row(i)) {
                *o += f;
            }
        }
        let s = 1.0 / self.nx as f64;
        out.iter_mut().for_each(|o| *o *= s);
        out
    }

    /// Spatial mode `k` of `f` as a function of `v` (one value per velocity node).
    pub fn x_mode(&self, k: i64) -> Result<Vec<Complex64>> {
        if k.unsigned_abs() as usize > self.nx / 2 {
            return Err(crate::error::invalid("k", format!("|k| must be at most {}", self.nx / 2)));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.nv];
        for i in 0..self.nx {
            let ph = Complex64::from_polar(1.0 / self.nx as f64, -2.0 * PI * k as f64 * self.x(i));
            for (o, f) in out.iter_mut().zip(self.row(i)) {
                *o += ph * f;
            }
        }
        Ok(out)
    }

    /// Double transform `f~(k, eta)` by direct summation at arbitrary `eta`.
    pub fn ftilde_sample(&self, k: i64, etas: &[f64]) -> Result<Vec<Complex64>> {
        let limit = self.eta_nyquist();
        if let Some(&eta) = etas.iter().find(|e| !(e.abs() <= limit)) {
            return Err(Error::EtaOutOfRange { eta, limit });
        }
        let g = self.x_mode(k)?;
        Ok(etas.iter().map(|&eta| transform_v(&g, self.vmax, self.dv(), eta)).collect())
    }

    pub fn kinetic_energy(&self) -> f64 {
        let w: Vec<f64> = (0..self.nv).map(|j| 0.5 * self.v(j) * self.v(j)).collect();
        let mut s = 0.0;
        for i in 0..self.nx {
            s += self.row(i).iter().zip(&w).map(|(f, w)| f * w).sum::<f64>();
        }
        s * self.dx() * self.dv()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|f| f * f).sum::<f64>() * self.dx() * self.dv()).sqrt()
    }

    /// `||d_v f||_{L^2}` with the derivative taken spectrally in `v`.
    pub fn gradv_l2(&self) -> f64 {
        let fft = FftPlanner::new().plan_fft_forward(self.nv);
        let nv = self.nv;
        let deta = self.deta();
        let mut buf = vec![Complex64::new(0.0, 0.0); nv];
        let mut total = 0.0;
        for i in 0..self.nx {
            for (b, f) in buf.iter_mut().zip(self.row(i)) {
                *b = Complex64::new(*f, 0.0);
            }
            fft.process(&mut buf);
            let mut s = 0.0;
            for (m, c) in buf.iter().enumerate() {
                if m == nv / 2 {
                    continue;
                }
                let w = 2.0 * PI * signed_freq(m, nv) as f64 * deta;
                s += w * w * c.norm_sqr();
            }
            total += s / nv as f64;
        }
        (total * self.dx() * self.dv()).sqrt()
    }
}

/// `dv * sum_j g_j exp(-2 i pi eta v_j)` on the grid `v_j = -V + j dv`.
pub(crate) fn transform_v(g: &[Complex64], vmax: f64, dv: f64, eta: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -2.0 * PI * eta * dv);
    let mut ph = Complex64::from_polar(1.0, 2.0 * PI * eta * vmax);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, gj) in g.iter().enumerate() {
        if j % 64 == 0 {
            // re-anchor the phase recursion
            ph = Complex64::from_polar(1.0, -2.0 * PI * eta * (-vmax + j as f64 * dv));
        }
        acc += gj * ph;
        ph *= step;
    }
    acc * dv
}

fn check_grid(nx: usize, nv: usize, vmax: f64) -> Result<()> {
    use crate::error::invalid;
    if !nx.is_power_of_two() || nx < 2 {
        return Err(invalid("nx", format!("must be a power of two >= 2, got {nx}")));
    }
    if !nv.is_power_of_two() || nv < 2 {
        return Err(invalid("nv", format!("must be a power of two >= 2, got {nv}")));
    }
    if !(vmax > 0.0) || !vmax.is_finite() {
        return Err(invalid("vmax", format!("must be positive, got {vmax}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(v: f64) -> f64 {
        (-0.5 * v * v).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(PhaseSpaceField::from_fn(48, 64, 8.0, |_, _| 0.0).is_err());
        assert!(PhaseSpaceField::from_fn(16, 100, 8.0, |_, _| 0.0).is_err());
        assert!(PhaseSpaceField::from_fn(16, 64, -1.0, |_, _| 0.0).is_err());
    }

    #[test]
    fn moments_of_a_maxwellian() {
        let f = PhaseSpaceField::from_fn(8, 256, 8.0, |_, v| gauss(v)).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-13);
        assert!((f.kinetic_energy() - 0.5).abs() < 1e-13);
        // int g'^2 dv = 1/(4 sqrt(pi))
        assert!((f.gradv_l2() - (0.25 / PI.sqrt()).sqrt()).abs() < 1e-12);
        // int g^2 dv = 1/(2 sqrt(pi))
        assert!((f.l2_norm() - (0.5 / PI.sqrt()).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn cosine_density_mode() {
        let d = 1e-3;
        let f = PhaseSpaceField::from_fn(16, 256, 8.0, |x, v| gauss(v) * (1.0 + d * (2.0 * PI * x).cos())).unwrap();
        assert!((f.rho_hat(1).unwrap() - Complex64::new(d / 2.0, 0.0)).norm() < 1e-15);
        assert!((f.rho_hat(-1).unwrap() - Complex64::new(d / 2.0, 0.0)).norm() < 1e-15);
        assert!(f.rho_hat(2).unwrap().norm() < 1e-16);
        assert!(f.rho_hat(9).is_none());
    }

    #[test]
    fn ftilde_at_zero_eta_is_rho_hat() {
        let f = PhaseSpaceField::from_fn(16, 256, 8.0, |x, v| gauss(v - 0.3) * (1.0 + 0.1 * (2.0 * PI * x).sin())).unwrap();
        let s = f.ftilde_sample(1, &[0.0]).unwrap()[0];
        assert!((s - f.rho_hat(1).unwrap()).norm() < 1e-15);
        let m = f.ftilde_sample(0, &[0.0]).unwrap()[0];
        assert!((m.re - f.mass()).abs() < 1e-14 && m.im.abs() < 1e-15);
        // shifted Gaussian transform
        let eta = 0.4;
        let got = f.ftilde_sample(0, &[eta]).unwrap()[0];
        let want = Complex64::from_polar((-2.0 * PI * PI * eta * eta).exp(), -2.0 * PI * eta * 0.3);
        assert!((got - want).norm() < 1e-13);
        assert!(matches!(f.ftilde_sample(0, &[100.0]), Err(Error::EtaOutOfRange { .. })));
    }
}
