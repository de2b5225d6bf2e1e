//! Fourier-spectral reference evolver for
//! `u_t = u_xxx + 6|u|²u_x + 3u(|u|²)_x` on a periodic box.
//!
//! The linear part `û_t = -iκ³ û` is integrated exactly and the nonlinear part
//! by the fourth-order exponential time-differencing Runge–Kutta scheme of Cox
//! and Matthews, with the contour-integral evaluation of the φ-functions
//! proposed by Kassam and Trefethen.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{atomic_write, fmt_f64, read_csv_rows};

/// |u| allowed at the box edges.
pub const EDGE_TOL: f64 = 1e-8;
/// Edge tolerance when an absorbing layer is active: the layer leaves a small
/// residual background at the box edge.
pub const SPONGE_EDGE_TOL: f64 = 1e-6;
const MIN_POINTS: usize = 256;
/// Bound on `dt · (nonlinear rate)` for the explicit part of the scheme.
const STABILITY_LIMIT: f64 = 2.5;
const CONTOUR_POINTS: usize = 32;

/// `(a/√2) e^{iφ} sech(a(x + a²t - x₀))`, written in the exponential form
/// `√2 a e^{θ} e^{iφ} / (1 + e^{2θ})`.
pub fn one_soliton(a: f64, phi: f64, x0: f64, x: f64, t: f64) -> Complex64 {
    let theta = a * (x + a * a * t - x0);
    // e^{θ}/(1 + e^{2θ}) = e^{-|θ|}/(1 + e^{-2|θ|}) avoids overflow
    let e = (-theta.abs()).exp();
    let r = 2f64.sqrt() * a * e / (1.0 + e * e);
    Complex64::from_polar(r, phi)
}

/// Snapshot of `u` on the periodic grid `x_j = -L/2 + jL/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub box_length: f64,
    pub t: f64,
    pub values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(box_length: f64, t: f64, values: Vec<Complex64>) -> Result<Self> {
        let n = values.len();
        if !n.is_power_of_two() || n < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "wave field needs a power-of-two size >= {MIN_POINTS}, got {n}"
            )));
        }
        if !(box_length > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("bad box length {box_length} or time {t}")));
        }
        Ok(Self { box_length, t, values })
    }

    pub fn from_fn(box_length: f64, n: usize, t: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let dx = box_length / n as f64;
        let values = (0..n).map(|j| f(-0.5 * box_length + dx * j as f64)).collect();
        Self::new(box_length, t, values)
    }

    pub fn soliton(a: f64, phi: f64, x0: f64, box_length: f64, n: usize, t: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidInput(format!("soliton amplitude must be positive, got {a}")));
        }
        Self::from_fn(box_length, n, t, |x| one_soliton(a, phi, x0, x, t))
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.box_length + self.dx() * j as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |u| over the first and last grid points.
    pub fn edge_value(&self) -> f64 {
        self.values[0].norm().max(self.values[self.n() - 1].norm())
    }

    pub fn check_decay(&self) -> Result<()> {
        self.check_decay_with(EDGE_TOL)
    }

    pub fn check_decay_with(&self, tol: f64) -> Result<()> {
        let edge = self.edge_value();
        if !(edge < tol) {
            return Err(Error::BoxTooSmall { t: self.t, edge_value: edge });
        }
        Ok(())
    }

    /// Trigonometric interpolation at an arbitrary point of the box.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let n = self.n();
        let coeffs = fft_forward(&self.values);
        let shift = x + 0.5 * self.box_length;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in coeffs.iter().enumerate() {
            if 2 * j == n {
                acc += c * (2.0 * PI * (n / 2) as f64 * shift / self.box_length).cos();
                continue;
            }
            let kappa = wavenumber(j, n, self.box_length);
            acc += c * Complex64::from_polar(1.0, kappa * shift);
        }
        acc / n as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("x,re_u,im_u\n");
        for (j, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", fmt_f64(self.x(j)), fmt_f64(v.re), fmt_f64(v.im)));
        }
        atomic_write(path, s.as_bytes())
    }

    /// Reads a CSV written by [`WaveField::write_csv`]; the box is recovered from
    /// the first two abscissae.
    pub fn read_csv(path: &Path, t: f64) -> Result<Self> {
        let rows = read_csv_rows(path, 3)?;
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let values: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
        if xs.len() < 2 {
            return Err(Error::Format("wave field CSV has fewer than two rows".into()));
        }
        let box_length = (xs[1] - xs[0]) * xs.len() as f64;
        Self::new(box_length, t, values)
    }

    /// Binary snapshot: L (f64), n (u64), t (f64), then interleaved re/im, all
    /// little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 16 * self.n());
        out.extend_from_slice(&self.box_length.to_le_bytes());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |b: &mut &[u8]| -> Result<[u8; 8]> {
            b.read_exact(&mut word).map_err(|_| Error::Format("truncated wave field snapshot".into()))?;
            Ok(word)
        };
        let box_length = f64::from_le_bytes(next(&mut bytes)?);
        let n = u64::from_le_bytes(next(&mut bytes)?) as usize;
        let t = f64::from_le_bytes(next(&mut bytes)?);
        if bytes.len() != 16 * n {
            return Err(Error::Format(format!(
                "snapshot payload has {} bytes, header promises {}",
                bytes.len(),
                16 * n
            )));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let re = f64::from_le_bytes(next(&mut bytes)?);
            let im = f64::from_le_bytes(next(&mut bytes)?);
            values.push(Complex64::new(re, im));
        }
        Self::new(box_length, t, values)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// `∫|u|² dx` by the periodic trapezoid rule.
pub fn conserved_l2(u: &WaveField) -> f64 {
    u.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * u.dx()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Etdrk4,
}

/// Absorbing layer `-σ(x) u` near both box edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sponge {
    /// Width of each layer as a fraction of the box.
    pub fraction: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub sponge: Option<Sponge>,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}
fn default_scheme() -> Scheme {
    Scheme::Etdrk4
}

impl EvolveConfig {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let cfg = Self { dt, t_final, dealias_fraction: default_dealias(), scheme: Scheme::Etdrk4, sponge: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sponge(mut self, sponge: Sponge) -> Result<Self> {
        self.sponge = Some(sponge);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() || !self.t_final.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need dt > 0 and finite final time (dt = {}, T = {})",
                self.dt, self.t_final
            )));
        }
        if !(self.dealias_fraction > 0.5 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "dealias fraction must lie in (1/2, 1], got {}",
                self.dealias_fraction
            )));
        }
        if let Some(s) = self.sponge {
            if !(s.fraction > 0.0 && s.fraction < 0.5) || !(s.strength >= 0.0) {
                return Err(Error::InvalidInput(format!("bad sponge {s:?}")));
            }
            if self.dt * s.strength > STABILITY_LIMIT {
                return Err(Error::InvalidInput(format!(
                    "dt * sponge strength = {:.3} exceeds the stability limit {STABILITY_LIMIT}",
                    self.dt * s.strength
                )));
            }
        }
        Ok(())
    }
}

fn wavenumber(j: usize, n: usize, box_length: f64) -> f64 {
    let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * m / box_length
}

fn fft_forward(v: &[Complex64]) -> Vec<Complex64> {
    let mut buf = v.to_vec();
    FftPlanner::new().plan_fft_forward(v.len()).process(&mut buf);
    buf
}

/// Per-run workspace: transforms, exact linear factors and φ-function weights.
struct Stepper {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    ik: Vec<Complex64>,
    mask: Vec<f64>,
    sigma: Option<Vec<f64>>,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
    scratch: Vec<Complex64>,
    scratch_x: Vec<Complex64>,
}

impl Stepper {
    fn new(n: usize, box_length: f64, cfg: &EvolveConfig) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let kmax = PI * n as f64 / box_length;
        let mut ik = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for j in 0..n {
            let kappa = if 2 * j == n { 0.0 } else { wavenumber(j, n, box_length) };
            ik.push(Complex64::new(0.0, kappa));
            mask.push(if kappa.abs() <= cfg.dealias_fraction * kmax && 2 * j != n { 1.0 } else { 0.0 });
        }
        let sigma = cfg.sponge.map(|s| {
            let width = s.fraction * box_length;
            (0..n)
                .map(|j| {
                    let x = -0.5 * box_length + box_length * j as f64 / n as f64;
                    let d = 0.5 * box_length - x.abs();
                    if d >= width {
                        0.0
                    } else {
                        let r = 1.0 - d / width;
                        s.strength * r * r * (3.0 - 2.0 * r)
                    }
                })
                .collect()
        });
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mut st = Self {
            n,
            fwd,
            inv,
            ik,
            mask,
            sigma,
            e: zero.clone(),
            e2: zero.clone(),
            q: zero.clone(),
            f1: zero.clone(),
            f2: zero.clone(),
            f3: zero.clone(),
            scratch: zero.clone(),
            scratch_x: zero,
        };
        st.set_dt(cfg.dt);
        st
    }

    fn set_dt(&mut self, h: f64) {
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        for j in 0..self.n {
            let kappa = self.ik[j].im;
            let l = Complex64::new(0.0, -kappa * kappa * kappa);
            let hl = l * h;
            self.e[j] = hl.exp();
            self.e2[j] = (hl * 0.5).exp();
            let (mut q, mut f1, mut f2, mut f3) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            for r in &roots {
                let z = hl + r;
                let ez = z.exp();
                let z2 = z * z;
                let z3 = z2 * z;
                q += ((z * 0.5).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - z * 3.0 + z2)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - z * 3.0 - z2 + ez * (4.0 - z)) / z3;
            }
            let w = h / CONTOUR_POINTS as f64;
            self.q[j] = q * w;
            self.f1[j] = f1 * w;
            self.f2[j] = f2 * w;
            self.f3[j] = f3 * w;
        }
    }

    /// Nonlinear term in Fourier space, dealiased.
    fn nonlinear(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let inv_n = 1.0 / n as f64;
        self.scratch.copy_from_slice(v);
        self.inv.process(&mut self.scratch);
        for (j, w) in self.scratch_x.iter_mut().enumerate() {
            *w = v[j] * self.ik[j];
        }
        self.inv.process(&mut self.scratch_x);
        for j in 0..n {
            let u = self.scratch[j] * inv_n;
            let ux = self.scratch_x[j] * inv_n;
            let m2 = u.norm_sqr();
            let dm2 = 2.0 * (u.conj() * ux).re;
            let mut nl = ux * (6.0 * m2) + u * (3.0 * dm2);
            if let Some(sig) = &self.sigma {
                nl -= u * sig[j];
            }
            out[j] = nl;
        }
        self.fwd.process(out);
        for (o, m) in out.iter_mut().zip(&self.mask) {
            *o *= m;
        }
    }

    fn step(&mut self, v: &mut [Complex64], bufs: &mut [Vec<Complex64>; 5]) {
        let [nv, na, nb, nc, tmp] = bufs;
        let n = self.n;
        self.nonlinear(v, nv);
        for j in 0..n {
            tmp[j] = self.e2[j] * v[j] + self.q[j] * nv[j];
        }
        self.nonlinear(tmp, na);
        let a = tmp.clone();
        for j in 0..n {
            tmp[j] = self.e2[j] * v[j] + self.q[j] * na[j];
        }
        self.nonlinear(tmp, nb);
        for j in 0..n {
            tmp[j] = self.e2[j] * a[j] + self.q[j] * (nb[j] * 2.0 - nv[j]);
        }
        self.nonlinear(tmp, nc);
        for j in 0..n {
            v[j] = self.e[j] * v[j]
                + nv[j] * self.f1[j]
                + (na[j] + nb[j]) * 2.0 * self.f2[j]
                + nc[j] * self.f3[j];
        }
    }
}

/// Evolves `u0` to `cfg.t_final` (which may lie before `u0.t`).
pub fn evolve(u0: &WaveField, cfg: &EvolveConfig) -> Result<WaveField> {
    let mut out = evolve_snapshots(u0, cfg, &[cfg.t_final])?;
    Ok(out.pop().expect("one snapshot requested"))
}

/// Evolves `u0` and returns the field at each of `times`, which must be
/// monotone in the direction of travel.  The step is shortened so that every
/// requested time is hit exactly.
pub fn evolve_snapshots(u0: &WaveField, cfg: &EvolveConfig, times: &[f64]) -> Result<Vec<WaveField>> {
    cfg.validate()?;
    let n = u0.n();
    let kmax = PI * n as f64 / u0.box_length;
    let amp = u0.max_abs();
    let rate = cfg.dealias_fraction * kmax * 9.0 * amp * amp;
    if cfg.dt * rate > STABILITY_LIMIT {
        return Err(Error::InvalidInput(format!(
            "dt = {} outside the stability envelope: dt * 9 kmax |u|^2 = {:.3} > {STABILITY_LIMIT}",
            cfg.dt,
            cfg.dt * rate
        )));
    }
    let mut stepper = Stepper::new(n, u0.box_length, cfg);
    let mut v = fft_forward(&u0.values);
    let mut bufs: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
    let mut t = u0.t;
    let mut current_h = f64::NAN;
    let mut snapshots = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        let steps = (span.abs() / cfg.dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            if h != current_h {
                stepper.set_dt(h);
                current_h = h;
            }
            for i in 0..steps {
                stepper.step(&mut v, &mut bufs);
                if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::BlowUp { last_stable_t: t + h * i as f64 });
                }
            }
        }
        t = target;
        let mut values = v.clone();
        stepper.inv.process(&mut values);
        let inv_n = 1.0 / n as f64;
        for c in values.iter_mut() {
            *c *= inv_n;
        }
        let field = WaveField::new(u0.box_length, t, values)?;
        field.check_decay_with(if cfg.sponge.is_some() { SPONGE_EDGE_TOL } else { EDGE_TOL })?;
        snapshots.push(field);
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup_diff(a: &WaveField, b: &WaveField) -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn soliton_value_and_phase() {
        let v = one_soliton(1.0, 0.0, 0.0, 0.0, 0.0);
        assert!((v.re - 1.0 / 2f64.sqrt()).abs() < 1e-15 && v.im == 0.0);
        let w = one_soliton(1.3, 0.7, 0.2, -3.1, 0.4);
        assert!((w.arg() - 0.7).abs() < 1e-14);
        // sech form
        let a = 1.3;
        let th: f64 = a * (-3.1 + a * a * 0.4 - 0.2);
        assert!((w.norm() - a / 2f64.sqrt() / th.cosh()).abs() < 1e-15);
        assert!(one_soliton(1.0, 0.0, 0.0, 1e4, 0.0).norm() == 0.0);
    }

    #[test]
    fn soliton_l2_mass_is_a() {
        let u = WaveField::soliton(1.0, 0.3, 0.0, 80.0, 1024, 0.0).unwrap();
        assert!((conserved_l2(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_stays_zero() {
        let u = WaveField::from_fn(40.0, 256, 0.0, |_| Complex64::new(0.0, 0.0)).unwrap();
        let out = evolve(&u, &EvolveConfig::new(0.01, 0.5).unwrap()).unwrap();
        assert!(out.max_abs() == 0.0);
        assert_eq!(out.t, 0.5);
    }

    #[test]
    fn soliton_regression_short_time() {
        let u0 = WaveField::soliton(1.0, 0.4, 0.0, 80.0, 1024, 0.0).unwrap();
        let out = evolve(&u0, &EvolveConfig::new(1e-3, 0.25).unwrap()).unwrap();
        let exact = WaveField::soliton(1.0, 0.4, 0.0, 80.0, 1024, 0.25).unwrap();
        assert!(sup_diff(&out, &exact) < 1e-8);
    }

    #[test]
    fn rejects_bad_sizes_and_configs() {
        assert!(WaveField::new(10.0, 0.0, vec![Complex64::new(0.0, 0.0); 300]).is_err());
        assert!(WaveField::new(10.0, 0.0, vec![Complex64::new(0.0, 0.0); 128]).is_err());
        assert!(EvolveConfig::new(0.0, 1.0).is_err());
        let mut c = EvolveConfig::new(0.1, 1.0).unwrap();
        c.dealias_fraction = 0.4;
        assert!(c.validate().is_err());
        let u0 = WaveField::soliton(4.0, 0.0, 0.0, 40.0, 1024, 0.0).unwrap();
        assert!(evolve(&u0, &EvolveConfig::new(0.5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn box_too_small_is_reported() {
        let u0 = WaveField::soliton(1.0, 0.0, 0.0, 30.0, 256, 0.0).unwrap();
        let r = evolve(&u0, &EvolveConfig::new(0.01, 1.0).unwrap());
        assert!(matches!(r, Err(Error::BoxTooSmall { .. })), "{r:?}");
    }

    #[test]
    fn trigonometric_interpolation_is_exact_on_modes() {
        let l = 20.0;
        let f = |x: f64| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * x / l) + Complex64::new((2.0 * PI * x / l).cos(), 0.0);
        let u = WaveField::from_fn(l, 256, 0.0, f).unwrap();
        for x in [-9.3, 0.1234, 7.77] {
            assert!((u.interpolate(x) - f(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn binary_round_trip() {
        let u = WaveField::soliton(1.0, 0.2, 1.0, 40.0, 256, 0.5).unwrap();
        let back = WaveField::from_bytes(&u.to_bytes()).unwrap();
        assert_eq!(u, back);
        assert!(WaveField::from_bytes(&u.to_bytes()[..100]).is_err());
    }
}
