//! Leading-order asymptotics in the Painlevé sector `|x| ≤ M t^{1/3}` and its
//! validation against the spectral evolver.
//!
//! In the sector `u(x, t) ≈ t^{-1/3} u₁(y)` with `y = x/(3t)^{1/3}` and
//! `u₁ = i u_P(y; s)/(3^{1/3}√2)`, `s = ρ₁(0)`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fd, SampledField, UniformGrid};
use crate::io::{atomic_write, fmt_f64, write_json};
use crate::painleve::{phase_spread, solve_painleve, ContourConfig, PainleveData, PainleveSolution};
use crate::pde::{evolve_snapshots, EvolveConfig, Sponge, WaveField};
use crate::scattering::{scatter, solitonless_certificate, InitialDatum, ScatterConfig};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this modulus a sample carries no usable phase.
pub const PHASE_FLOOR: f64 = 1e-12;

/// `3^{1/3} √2`.
fn u1_scale() -> f64 {
    3f64.cbrt() * 2f64.sqrt()
}

/// A point `(x, t)` of the Painlevé sector with its derived coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorPoint {
    pub x: f64,
    pub t: f64,
    /// `x/(3t)^{1/3}`
    pub y: f64,
    /// `x/t`
    pub zeta: f64,
    /// `√(x/12t)` for `x ≥ 0`, zero on the left half.
    pub k0: f64,
    /// `x < 0`: no real critical points.
    pub left: bool,
}

impl SectorPoint {
    pub fn new(x: f64, t: f64, m: f64) -> Result<Self> {
        if !(t >= 1.0) || !x.is_finite() || !(m > 0.0) {
            return Err(Error::InvalidInput(format!("sector point needs t >= 1, M > 0 (x = {x}, t = {t}, M = {m})")));
        }
        let half = m * t.cbrt();
        if x.abs() > half * (1.0 + 1e-14) {
            return Err(Error::Range { what: "x".into(), value: x, lo: -half, hi: half });
        }
        let zeta = x / t;
        Ok(Self {
            x,
            t,
            y: x / (3.0 * t).cbrt(),
            zeta,
            k0: if x >= 0.0 { (zeta / 12.0).sqrt() } else { 0.0 },
            left: x < 0.0,
        })
    }
}

/// `Φ(ζ, k) = 2ikζ - 8ik³`.
pub fn phase_function(pt: &SectorPoint, k: Complex64) -> Complex64 {
    I * k * (2.0 * pt.zeta) - I * k * k * k * 8.0
}

/// `∂Φ/∂k = 2iζ - 24ik²`.
pub fn phase_derivative(pt: &SectorPoint, k: Complex64) -> Complex64 {
    I * (2.0 * pt.zeta) - I * k * k * 24.0
}

/// `u₁ = i u_P/(3^{1/3}√2)` on the Painlevé grid.
pub fn u1_profile(sol: &PainleveSolution) -> SampledField {
    SampledField { grid: sol.y_grid, values: sol.u_p.iter().map(|u| I * u / u1_scale()).collect() }
}

/// `t^{-1/3} u₁(y)` with `u_P` interpolated cubically from `sol`.
pub fn leading_term(x: f64, t: f64, sol: &PainleveSolution) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let y = x / (3.0 * t).cbrt();
    let up = sol.interpolate(y)?;
    Ok(I * up / u1_scale() * t.powf(-1.0 / 3.0))
}

/// Max-norm over the interior of the defect of
/// `u₁''' + y u₁' + u₁ + 3^{5/3}(3|u₁|²u₁' + u₁² conj(u₁'))`, centred 2nd-order
/// differences.
pub fn hierarchy_residual(u1: &SampledField) -> f64 {
    let order = fd::Order::Second;
    let reach = order.reach().max(2);
    let g = u1.grid;
    let v = &u1.values;
    if g.len < 2 * reach + 1 {
        return 0.0;
    }
    let c = 3f64.powf(5.0 / 3.0);
    let mut worst: f64 = 0.0;
    for j in reach..g.len - reach {
        let u = v[j];
        let d1 = fd::d1(v, j, g.step, order);
        let d3 = fd::d3(v, j, g.step, order);
        let r = d3 + d1 * g.point(j) + u + (d1 * (3.0 * u.norm_sqr()) + u * u * d1.conj()) * c;
        worst = worst.max(r.norm());
    }
    worst
}

/// Least-squares slope of `log e` against `log t`; `None` when any error
/// vanishes or fewer than two points are given.
pub fn fit_exponent(t: &[f64], e: &[f64]) -> Option<f64> {
    if t.len() < 2 || t.len() != e.len() || e.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Settings of [`validate_sector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorConfig {
    /// Sector half-width constant `M`.
    pub m: f64,
    pub t_list: Vec<f64>,
    /// x-samples across the sector per time.
    pub samples: usize,
    /// Fraction of the sector used for the measured-phase comparison.
    pub core_fraction: f64,
    pub box_length: f64,
    pub n: usize,
    pub dt: f64,
    pub sponge: Sponge,
    pub y_step: f64,
    pub contour: ContourConfig,
    pub scatter: ScatterConfig,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            t_list: vec![25.0, 50.0, 100.0, 200.0],
            samples: 41,
            core_fraction: 0.25,
            box_length: 1024.0,
            n: 8192,
            dt: 0.05,
            sponge: Sponge { fraction: 0.25, strength: 20.0 },
            y_step: 0.01,
            contour: ContourConfig::default(),
            scatter: ScatterConfig::default(),
        }
    }
}

impl SectorConfig {
    fn validate(&self) -> Result<()> {
        if self.t_list.len() < 4 {
            return Err(Error::InvalidInput(format!("need at least 4 times, got {}", self.t_list.len())));
        }
        if self.t_list[0] < 1.0 || self.t_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("times must be increasing and >= 1".into()));
        }
        if !(self.m > 0.0) || self.samples < 3 || !(self.core_fraction > 0.0 && self.core_fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "bad sector sampling: M = {}, samples = {}, core = {}",
                self.m, self.samples, self.core_fraction
            )));
        }
        let t_max = *self.t_list.last().unwrap();
        if self.m * t_max.cbrt() >= 0.5 * self.box_length * (1.0 - 2.0 * self.sponge.fraction) {
            return Err(Error::InvalidInput("sector reaches into the absorbing layer; enlarge the box".into()));
        }
        Ok(())
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig> {
        EvolveConfig::new(self.dt, *self.t_list.last().unwrap_or(&0.0))?.with_sponge(self.sponge)
    }
}

/// Comparison at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub measured: Vec<Complex64>,
    pub predicted: Vec<Complex64>,
    pub sup_error: f64,
    pub sup_error_left: f64,
    pub sup_error_right: f64,
    /// Std-dev of `arg` of the prediction over the sector (modulo π).
    pub phase_flatness: f64,
    /// Max |arg(measured/predicted)| over the sector core.
    pub core_phase_gap: f64,
    pub max_imag_measured: f64,
    pub max_imag_predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub s: Complex64,
    pub m: f64,
    pub t_list: Vec<f64>,
    pub sup_errors: Vec<f64>,
    /// Fitted slope of log(error) against log(t); `None` when undefined.
    pub exponent: Option<f64>,
    /// Right half `0 ≤ x ≤ Mt^{1/3}`.
    pub exponent_right: Option<f64>,
    /// Left half; measured only.
    pub exponent_left: Option<f64>,
    /// Slope between consecutive times, starting at the second.
    pub exponent_running: Vec<Option<f64>>,
    pub phase_flatness: f64,
    /// Whether `t_list` spans a factor of ten.
    pub spans_decade: bool,
    pub samples: Vec<SectorSample>,
}

impl AsymptoticsReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("t,sup_error,exponent_running,phase_flatness\n");
        for (i, smp) in self.samples.iter().enumerate() {
            let run = if i == 0 { None } else { self.exponent_running[i - 1] };
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(smp.t),
                fmt_f64(smp.sup_error),
                run.map(fmt_f64).unwrap_or_else(|| "nan".into()),
                fmt_f64(smp.phase_flatness)
            ));
        }
        atomic_write(path, s.as_bytes())
    }
}

/// Painlevé solution covering the sector's y-range for datum `s`.
pub fn sector_painleve(s: Complex64, cfg: &SectorConfig) -> Result<PainleveSolution> {
    let y_max = cfg.m / 3f64.cbrt() + 4.0 * cfg.y_step;
    let n = (2.0 * y_max / cfg.y_step).ceil() as usize + 1;
    let grid = UniformGrid::span(-y_max, y_max, n)?;
    solve_painleve(&PainleveData { s, y_grid: grid }, &cfg.contour)
}

/// Compares snapshots of the evolution with the leading term.
pub fn compare_sector(snapshots: &[WaveField], sol: &PainleveSolution, cfg: &SectorConfig) -> Result<Vec<SectorSample>> {
    snapshots
        .iter()
        .map(|snap| {
            let t = snap.t;
            let half = cfg.m * t.cbrt();
            let x: Vec<f64> =
                (0..cfg.samples).map(|i| -half + 2.0 * half * i as f64 / (cfg.samples - 1) as f64).collect();
            let measured: Vec<Complex64> = x.iter().map(|&x| snap.interpolate(x)).collect();
            let predicted = x.iter().map(|&x| leading_term(x, t, sol)).collect::<Result<Vec<_>>>()?;
            let mut smp = SectorSample {
                t,
                x: x.clone(),
                measured: measured.clone(),
                predicted: predicted.clone(),
                sup_error: 0.0,
                sup_error_left: 0.0,
                sup_error_right: 0.0,
                phase_flatness: phase_spread(&predicted, PHASE_FLOOR),
                core_phase_gap: 0.0,
                max_imag_measured: 0.0,
                max_imag_predicted: 0.0,
            };
            for i in 0..x.len() {
                let e = (measured[i] - predicted[i]).norm();
                smp.sup_error = smp.sup_error.max(e);
                if x[i] < 0.0 {
                    smp.sup_error_left = smp.sup_error_left.max(e);
                } else {
                    smp.sup_error_right = smp.sup_error_right.max(e);
                }
                smp.max_imag_measured = smp.max_imag_measured.max(measured[i].im.abs());
                smp.max_imag_predicted = smp.max_imag_predicted.max(predicted[i].im.abs());
                if x[i].abs() <= cfg.core_fraction * half && predicted[i].norm() > PHASE_FLOOR {
                    smp.core_phase_gap = smp.core_phase_gap.max((measured[i] / predicted[i]).arg().abs());
                }
            }
            Ok(smp)
        })
        .collect()
}

/// Evolves `u0` to each time of `cfg.t_list` and measures the in-sector error
/// of the leading term.
pub fn validate_sector(u0: &InitialDatum, cfg: &SectorConfig) -> Result<AsymptoticsReport> {
    cfg.validate()?;
    let record = scatter(u0, &cfg.scatter)?;
    let count = solitonless_certificate(&record)?;
    if count != 0 {
        return Err(Error::SolitonsPresent { count });
    }
    let s = record.rho1_at_zero();
    let sol = sector_painleve(s, cfg)?;
    let grid = *u0.grid();
    let w0 = WaveField::from_fn(cfg.box_length, cfg.n, 0.0, |x| {
        if grid.contains(x) {
            u0.eval(x)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })?;
    let snapshots = evolve_snapshots(&w0, &cfg.evolve_config()?, &cfg.t_list)?;
    let samples = compare_sector(&snapshots, &sol, cfg)?;
    Ok(assemble_report(s, cfg, samples))
}

pub fn assemble_report(s: Complex64, cfg: &SectorConfig, samples: Vec<SectorSample>) -> AsymptoticsReport {
    let t: Vec<f64> = samples.iter().map(|p| p.t).collect();
    let all: Vec<f64> = samples.iter().map(|p| p.sup_error).collect();
    let left: Vec<f64> = samples.iter().map(|p| p.sup_error_left).collect();
    let right: Vec<f64> = samples.iter().map(|p| p.sup_error_right).collect();
    let running = (1..t.len()).map(|i| fit_exponent(&t[i - 1..=i], &all[i - 1..=i])).collect();
    AsymptoticsReport {
        s,
        m: cfg.m,
        exponent: fit_exponent(&t, &all),
        exponent_right: fit_exponent(&t, &right),
        exponent_left: fit_exponent(&t, &left),
        exponent_running: running,
        phase_flatness: samples.iter().map(|p| p.phase_flatness).fold(0.0, f64::max),
        spans_decade: t.last().zip(t.first()).is_some_and(|(b, a)| b / a >= 10.0),
        t_list: t,
        sup_errors: all,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zero_solution() -> PainleveSolution {
        let g = UniformGrid::span(-1.0, 1.0, 201).unwrap();
        solve_painleve(&PainleveData { s: c(0.0, 0.0), y_grid: g }, &ContourConfig::default()).unwrap()
    }

    #[test]
    fn sector_point_coordinates() {
        let p = SectorPoint::new(2.0, 8.0, 1.0).unwrap();
        assert!((p.y - 2.0 / 24f64.cbrt()).abs() < 1e-15);
        assert!((p.zeta - 0.25).abs() < 1e-16);
        assert!((p.k0 - (0.25f64 / 12.0).sqrt()).abs() < 1e-16);
        assert!(SectorPoint::new(2.5, 8.0, 1.0).is_err());
        assert!(SectorPoint::new(0.1, 0.5, 1.0).is_err());
        assert!(SectorPoint::new(-1.0, 8.0, 1.0).unwrap().left);
    }

    #[test]
    fn critical_points_are_stationary() {
        for (x, t) in [(0.7, 3.0), (2.0, 10.0), (5.0, 150.0)] {
            let p = SectorPoint::new(x, t, 1.0).unwrap();
            for k in [p.k0, -p.k0] {
                assert!(phase_derivative(&p, c(k, 0.0)).norm() < 1e-12);
                assert!(phase_function(&p, c(k, 0.0)).re.abs() < 1e-15);
            }
            // k0 ≤ C t^{-1/3} in the sector
            assert!(p.k0 * t.cbrt() <= (1.0f64 / 12.0).sqrt() + 1e-15);
        }
    }

    #[test]
    fn re_phi_sign_pattern() {
        let p = SectorPoint::new(1.0, 2.0, 1.0).unwrap();
        let k0 = p.k0;
        let eps = 0.2 * k0;
        // outside [-k0, k0]: Re Φ > 0 above the axis, < 0 below; reversed inside
        for a in [-2.0 * k0, 2.0 * k0] {
            assert!(phase_function(&p, c(a, eps)).re > 0.0);
            assert!(phase_function(&p, c(a, -eps)).re < 0.0);
        }
        assert!(phase_function(&p, c(0.3 * k0, eps)).re < 0.0);
        assert!(phase_function(&p, c(-0.3 * k0, -eps)).re > 0.0);
    }

    #[test]
    fn zero_datum_gives_zero_leading_term() {
        let sol = zero_solution();
        for (x, t) in [(0.0, 1.0), (1.5, 30.0), (-2.0, 100.0)] {
            assert_eq!(leading_term(x, t, &sol).unwrap(), c(0.0, 0.0));
        }
        assert_eq!(hierarchy_residual(&u1_profile(&sol)), 0.0);
    }

    #[test]
    fn leading_term_scales_like_cube_root() {
        let g = UniformGrid::span(-1.0, 1.0, 201).unwrap();
        let sol = solve_painleve(&PainleveData { s: Complex64::from_polar(0.4, 1.0), y_grid: g }, &ContourConfig::default())
            .unwrap();
        let y = 0.37;
        let a = leading_term(y * 3f64.cbrt(), 1.0, &sol).unwrap();
        let b = leading_term(y * 3000f64.cbrt(), 1000.0, &sol).unwrap();
        assert!((a / b - c(10.0, 0.0)).norm() < 1e-12);
        // constant phase offset from i u_P
        let up = sol.interpolate(y).unwrap();
        assert!(((a / (I * up)).arg()).abs() < 1e-14);
        assert!(leading_term(5.0, 1.0, &sol).is_err());
    }

    #[test]
    fn exponent_fit_recovers_power_law() {
        let t = [25.0, 50.0, 100.0, 200.0];
        let e: Vec<f64> = t.iter().map(|v: &f64| 3.0 * v.powf(-2.0 / 3.0)).collect();
        assert!((fit_exponent(&t, &e).unwrap() + 2.0 / 3.0).abs() < 1e-12);
        assert!(fit_exponent(&t, &[0.0; 4]).is_none());
    }

    #[test]
    fn hierarchy_accepts_any_constant_phase_rotation() {
        let g = UniformGrid::span(-1.0, 1.0, 201).unwrap();
        let sol = solve_painleve(&PainleveData { s: c(0.5, 0.0), y_grid: g }, &ContourConfig::default()).unwrap();
        let u1 = u1_profile(&sol);
        assert!(hierarchy_residual(&u1) < 1e-4);
        let rotated = SampledField { grid: g, values: u1.values.iter().map(|v| v * Complex64::from_polar(1.0, 0.3)).collect() };
        assert!(hierarchy_residual(&rotated) < 1e-4);
        let twisted = SampledField {
            grid: g,
            values: u1.values.iter().enumerate().map(|(j, v)| v * Complex64::from_polar(1.0, PI * g.point(j))).collect(),
        };
        assert!(hierarchy_residual(&twisted) > 1e-1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SectorConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.t_list = vec![25.0, 50.0, 100.0];
        assert!(cfg.validate().is_err());
        cfg.t_list = vec![25.0, 50.0, 40.0, 200.0];
        assert!(cfg.validate().is_err());
        let cfg = SectorConfig { box_length: 16.0, n: 256, ..SectorConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
