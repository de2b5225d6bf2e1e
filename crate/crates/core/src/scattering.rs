//! Direct scattering: Jost solutions, the scattering matrix `s(k)`, the
//! reflection coefficient and the solitonless certificate.
//!
//! The Jost solution `X(x, k)` normalised at the right end of the data grid
//! solves `X_x + ik[Λ, X] = U₀ X`.  We integrate the equivalent system
//! `Φ_x = (-ikΛ + U₀)Φ`, `Φ = X e^{-ikxΛ}`, backwards with a fourth-order
//! Magnus step, so every step is the exponential of a trace-free matrix that is
//! anti-Hermitian for real `k`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{build_u, ComplexMatrix3};
use crate::error::{Error, Result};
use crate::grid::{lagrange_uniform, SampledField, UniformGrid};
use crate::io::{atomic_write, fmt_f64, read_csv_rows, write_json};
use crate::pde::one_soliton;

/// Default threshold for |u₀| at the ends of the data grid.
pub const DECAY_TOL: f64 = 1e-10;
/// Tolerance on the determinant and symmetry defects of `s`.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// |s₃₃| below this on the real line is treated as a spectral singularity.
pub const SINGULARITY_TOL: f64 = 1e-10;

const MIN_SAMPLES: usize = 64;

fn zero_phase() -> f64 {
    0.0
}
fn unit_width() -> f64 {
    1.0
}

/// Analytic initial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `amplitude · e^{i phase} · exp(-((x - center)/width)²)`
    Gaussian {
        amplitude: f64,
        #[serde(default = "unit_width")]
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "zero_phase")]
        phase: f64,
    },
    /// `amplitude · e^{i phase} · sech((x - center)/width)`
    Sech {
        amplitude: f64,
        #[serde(default = "unit_width")]
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "zero_phase")]
        phase: f64,
    },
    /// The one-soliton at `t = 0`.
    Soliton {
        a: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        x0: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64) -> Complex64 {
        match *self {
            Profile::Gaussian { amplitude, width, center, phase } => {
                let z = (x - center) / width;
                Complex64::from_polar(amplitude * (-z * z).exp(), phase)
            }
            Profile::Sech { amplitude, width, center, phase } => {
                let z = (x - center) / width;
                Complex64::from_polar(amplitude / z.cosh(), phase)
            }
            Profile::Soliton { a, phi, x0 } => one_soliton(a, phi, x0, x, 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Gaussian { amplitude, width, center, phase }
            | Profile::Sech { amplitude, width, center, phase } => {
                amplitude.is_finite() && width > 0.0 && center.is_finite() && phase.is_finite()
            }
            Profile::Soliton { a, phi, x0 } => a > 0.0 && phi.is_finite() && x0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad profile parameters: {self:?}")))
        }
    }
}

/// Initial datum `u₀` sampled on a uniform grid, optionally backed by an
/// analytic profile that is then used for sub-grid evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatum {
    pub field: SampledField,
    pub profile: Option<Profile>,
}

impl InitialDatum {
    pub fn from_samples(field: SampledField) -> Result<Self> {
        Self::check(&field, DECAY_TOL)?;
        Ok(Self { field, profile: None })
    }

    pub fn from_profile(profile: Profile, x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        profile.validate()?;
        let grid = UniformGrid::span(x_min, x_max, n)?;
        let field = SampledField::from_fn(grid, |x| profile.eval(x));
        Self::check(&field, DECAY_TOL)?;
        Ok(Self { field, profile: Some(profile) })
    }

    pub fn zero(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let grid = UniformGrid::span(x_min, x_max, n)?;
        let field = SampledField::zeros(grid);
        Self::check(&field, DECAY_TOL)?;
        Ok(Self { field, profile: None })
    }

    fn check(field: &SampledField, tol: f64) -> Result<()> {
        let n = field.grid.len;
        if n < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "initial datum needs at least {MIN_SAMPLES} samples, got {n}"
            )));
        }
        if field.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("initial datum contains non-finite samples".into()));
        }
        let edge = field.values[0].norm().max(field.values[n - 1].norm());
        if edge >= tol {
            return Err(Error::InvalidInput(format!(
                "initial datum not decayed: |u0| = {edge:.3e} at the grid ends (needs < {tol:.0e})"
            )));
        }
        Ok(())
    }

    /// Reads samples `x, Re u₀, Im u₀` (one header line) on a uniform grid.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = read_csv_rows(path, 3)?;
        Self::from_samples(SampledField::new(uniform_from_rows(&rows, "x")?, complex_column(&rows, 1))?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,re_u,im_u\n");
        for (j, v) in self.field.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", fmt_f64(self.field.grid.point(j)), fmt_f64(v.re), fmt_f64(v.im)));
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.field.grid
    }

    /// `u₀(x)`: the analytic profile when present, otherwise cubic interpolation.
    pub fn eval(&self, x: f64) -> Complex64 {
        match &self.profile {
            Some(p) => p.eval(x),
            None => lagrange_uniform(&self.field.grid, &self.field.values, x, 4),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.field.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }
}

/// Integration settings for the Jost solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JostConfig {
    /// Largest Magnus step; each grid cell is split into enough substeps.
    pub max_step: f64,
}

impl Default for JostConfig {
    fn default() -> Self {
        Self { max_step: 0.005 }
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6

/// Potential matrices at the two Gauss points of every Magnus step, ordered
/// from the right end of the grid leftwards.
struct MagnusPlan {
    h: f64,
    x_min: f64,
    x_max: f64,
    potentials: Vec<(ComplexMatrix3, ComplexMatrix3)>,
    /// Number of substeps per grid cell.
    sub: usize,
}

impl MagnusPlan {
    fn new(u0: &InitialDatum, cfg: &JostConfig) -> Result<Self> {
        if !(cfg.max_step > 0.0) {
            return Err(Error::InvalidInput(format!("max_step must be positive, got {}", cfg.max_step)));
        }
        let g = u0.grid();
        let sub = (g.step / cfg.max_step).ceil().max(1.0) as usize;
        let h = -g.step / sub as f64;
        let steps = (g.len - 1) * sub;
        let x_max = g.end();
        let potentials = (0..steps)
            .map(|j| {
                let x_right = x_max + h * j as f64;
                let x1 = x_right + (0.5 - GAUSS_OFFSET) * h;
                let x2 = x_right + (0.5 + GAUSS_OFFSET) * h;
                (build_u(u0.eval(x1)), build_u(u0.eval(x2)))
            })
            .collect();
        Ok(Self { h, x_min: g.start, x_max, potentials, sub })
    }

    fn step_exp(&self, j: usize, k: Complex64) -> ComplexMatrix3 {
        let lam = ComplexMatrix3::lambda().scale(-Complex64::i() * k);
        let (u1, u2) = &self.potentials[j];
        let a1 = lam + *u1;
        let a2 = lam + *u2;
        let h = self.h;
        let omega = (a1 + a2).scale_re(0.5 * h) + a2.commutator(&a1).scale_re(3f64.sqrt() * h * h / 12.0);
        omega.exp()
    }

    fn phase_shift(&self, k: Complex64) -> ComplexMatrix3 {
        let e = (Complex64::i() * k * self.h).exp();
        ComplexMatrix3::diag([e, e, e.inv()])
    }
}

/// Jost solution sampled on the data grid.
#[derive(Debug, Clone)]
pub struct JostSolution {
    pub grid: UniformGrid,
    pub k: Complex64,
    pub values: Vec<ComplexMatrix3>,
}

impl JostSolution {
    pub fn at_node(&self, i: usize) -> &ComplexMatrix3 {
        &self.values[i]
    }
}

/// `X(x, k)` on the data grid, `X = I` at the right end.
///
/// Off the real axis only the columns analytic in the relevant half plane are
/// meaningful: the third for `Im k > 0`, the first two for `Im k < 0`.
pub fn solve_x(u0: &InitialDatum, k: Complex64, cfg: &JostConfig) -> Result<JostSolution> {
    let plan = MagnusPlan::new(u0, cfg)?;
    let g = *u0.grid();
    let shift = plan.phase_shift(k);
    let mut values = vec![ComplexMatrix3::identity(); g.len];
    let mut x = ComplexMatrix3::identity();
    for (j, _) in plan.potentials.iter().enumerate() {
        x = plan.step_exp(j, k) * x * shift;
        if !x.is_finite() {
            return Err(Error::Numerical(format!(
                "Jost integration overflowed at x = {:.4}, k = {k}",
                plan.x_max + plan.h * (j + 1) as f64
            )));
        }
        if (j + 1) % plan.sub == 0 {
            values[g.len - 1 - (j + 1) / plan.sub] = x;
        }
    }
    Ok(JostSolution { grid: g, k, values })
}

/// `X(x_min, k)` without storing the trajectory.
fn x_at_left(plan: &MagnusPlan, k: Complex64) -> ComplexMatrix3 {
    let shift = plan.phase_shift(k);
    let mut x = ComplexMatrix3::identity();
    for j in 0..plan.potentials.len() {
        x = plan.step_exp(j, k) * x * shift;
    }
    x
}

fn s_from_left(plan: &MagnusPlan, k: Complex64) -> ComplexMatrix3 {
    let x = x_at_left(plan, k);
    let e = (Complex64::i() * k * plan.x_min).exp();
    let left = ComplexMatrix3::diag([e, e, e.inv()]);
    let right = ComplexMatrix3::diag([e.inv(), e.inv(), e]);
    left * x * right
}

/// Scattering matrix at a single real spectral parameter.
pub fn scattering_matrix(u0: &InitialDatum, k: f64, cfg: &JostConfig) -> Result<ComplexMatrix3> {
    let plan = MagnusPlan::new(u0, cfg)?;
    Ok(s_from_left(&plan, Complex64::new(k, 0.0)))
}

/// `s₃₃(k)` for `Im k ≥ 0`, from the third Jost column alone.
pub fn s33(u0: &InitialDatum, k: Complex64, cfg: &JostConfig) -> Result<Complex64> {
    if k.im < 0.0 {
        return Err(Error::InvalidInput(format!("s33 is only analytic for Im k >= 0, got k = {k}")));
    }
    let plan = MagnusPlan::new(u0, cfg)?;
    Ok(s33_with_plan(&plan, k))
}

fn s33_with_plan(plan: &MagnusPlan, k: Complex64) -> Complex64 {
    let decay = (-Complex64::i() * k * plan.h).exp();
    let mut col = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    for j in 0..plan.potentials.len() {
        let e = plan.step_exp(j, k);
        let mut next = [Complex64::new(0.0, 0.0); 3];
        for (r, out) in next.iter_mut().enumerate() {
            *out = (e[(r, 0)] * col[0] + e[(r, 1)] * col[1] + e[(r, 2)] * col[2]) * decay;
        }
        col = next;
    }
    col[2]
}

/// `s₃₃` on a rectangular sampling of the closed upper half plane.
pub fn s33_upper_grid(
    u0: &InitialDatum,
    re: &[f64],
    im: &[f64],
    cfg: &JostConfig,
) -> Result<Vec<Vec<Complex64>>> {
    if im.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("upper half-plane sampling needs Im k >= 0".into()));
    }
    let plan = MagnusPlan::new(u0, cfg)?;
    Ok(im
        .par_iter()
        .map(|&b| re.iter().map(|&a| s33_with_plan(&plan, Complex64::new(a, b))).collect())
        .collect())
}

/// Scattering data on a symmetric real k-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringRecord {
    pub k_grid: UniformGrid,
    pub s: Vec<ComplexMatrix3>,
    pub rho1: Vec<Complex64>,
    pub rho2: Vec<Complex64>,
    pub winding_s33: i64,
    pub det_defect: f64,
    pub unitarity_defect: f64,
    pub swap_defect: f64,
}

impl ScatteringRecord {
    /// `ρ₁` at `k = 0` (the middle node).
    pub fn rho1_at_zero(&self) -> Complex64 {
        self.rho1[self.k_grid.len / 2]
    }

    pub fn rho1_field(&self) -> SampledField {
        SampledField { grid: self.k_grid, values: self.rho1.clone() }
    }

    /// Largest |ρ₁| over the outer 5% of nodes on either side.
    pub fn rho1_tail(&self) -> f64 {
        let n = self.k_grid.len;
        let m = ((n as f64) * 0.05).ceil() as usize;
        self.rho1[..m]
            .iter()
            .chain(&self.rho1[n - m..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Summary written next to the record CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSidecar {
    pub k_max: f64,
    pub k_nodes: usize,
    pub det_defect: f64,
    pub unitarity_defect: f64,
    pub swap_defect: f64,
    pub winding_s33: i64,
    pub rho1_at_zero: Complex64,
}

const RECORD_COLUMNS: usize = 21;

impl ScatteringRecord {
    pub fn sidecar(&self) -> ScatteringSidecar {
        ScatteringSidecar {
            k_max: self.k_grid.end(),
            k_nodes: self.k_grid.len,
            det_defect: self.det_defect,
            unitarity_defect: self.unitarity_defect,
            swap_defect: self.swap_defect,
            winding_s33: self.winding_s33,
            rho1_at_zero: self.rho1_at_zero(),
        }
    }

    /// CSV with columns `k`, Re/Im of `s₁₁ … s₃₃` (row-major), Re/Im `ρ₁`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("k");
        for i in 1..=3 {
            for j in 1..=3 {
                out.push_str(&format!(",re_s{i}{j},im_s{i}{j}"));
            }
        }
        out.push_str(",re_rho1,im_rho1\n");
        for (idx, m) in self.s.iter().enumerate() {
            out.push_str(&fmt_f64(self.k_grid.point(idx)));
            for i in 0..3 {
                for j in 0..3 {
                    out.push_str(&format!(",{},{}", fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)));
                }
            }
            let r = self.rho1[idx];
            out.push_str(&format!(",{},{}\n", fmt_f64(r.re), fmt_f64(r.im)));
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        write_json(path, &self.sidecar())
    }

    /// Reads a CSV written by [`ScatteringRecord::write_csv`]; defects, `ρ₂` and
    /// the winding number are recomputed from `s`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = read_csv_rows(path, RECORD_COLUMNS)?;
        let k_grid = uniform_from_rows(&rows, "k")?;
        let s: Vec<ComplexMatrix3> = rows
            .iter()
            .map(|r| {
                let mut m = ComplexMatrix3::zero();
                for i in 0..3 {
                    for j in 0..3 {
                        let c = 1 + 2 * (3 * i + j);
                        m.0[i][j] = Complex64::new(r[c], r[c + 1]);
                    }
                }
                m
            })
            .collect();
        let rho1 = complex_column(&rows, 19);
        let (det_defect, unitarity_defect, swap_defect) = symmetry_defects(&k_grid, &s);
        let n = rho1.len();
        let mut record = Self {
            k_grid,
            s,
            rho2: (0..n).map(|j| rho1[n - 1 - j].conj()).collect(),
            rho1,
            winding_s33: 0,
            det_defect,
            unitarity_defect,
            swap_defect,
        };
        record.winding_s33 = solitonless_certificate(&record)?;
        Ok(record)
    }
}

fn uniform_from_rows(rows: &[Vec<f64>], what: &str) -> Result<UniformGrid> {
    if rows.len() < 2 {
        return Err(Error::Format(format!("need at least two {what} rows")));
    }
    let n = rows.len();
    let grid = UniformGrid::span(rows[0][0], rows[n - 1][0], n)?;
    for (j, r) in rows.iter().enumerate() {
        if (r[0] - grid.point(j)).abs() > 1e-9 * grid.step.abs().max(1.0) {
            return Err(Error::Format(format!("{what} column is not uniform at row {}", j + 1)));
        }
    }
    Ok(grid)
}

fn complex_column(rows: &[Vec<f64>], re: usize) -> Vec<Complex64> {
    rows.iter().map(|r| Complex64::new(r[re], r[re + 1])).collect()
}

/// Defects of `det s = 1`, `s = (s†)^{-1}` and `s(k) = A conj(s(-k)) A`.
pub fn symmetry_defects(k_grid: &UniformGrid, s: &[ComplexMatrix3]) -> (f64, f64, f64) {
    let n = s.len();
    let mut det: f64 = 0.0;
    let mut unit: f64 = 0.0;
    let mut swap: f64 = 0.0;
    for (j, m) in s.iter().enumerate() {
        det = det.max((m.det() - 1.0).norm());
        let inv = m.adjoint().inverse().map(|i| (*m - i).max_abs()).unwrap_or(f64::INFINITY);
        unit = unit.max(inv);
        if k_grid.is_symmetric() {
            swap = swap.max((*m - s[n - 1 - j].swap_conj()).max_abs());
        }
    }
    if !k_grid.is_symmetric() {
        swap = f64::NAN;
    }
    (det, unit, swap)
}

/// `s(k)` on `k_grid`, the reflection coefficients and the winding certificate.
pub fn compute_s(u0: &InitialDatum, k_grid: &UniformGrid, cfg: &JostConfig) -> Result<ScatteringRecord> {
    if !k_grid.is_symmetric() || k_grid.len % 2 == 0 {
        return Err(Error::InvalidInput("k-grid must be symmetric about 0 with an odd node count".into()));
    }
    let plan = MagnusPlan::new(u0, cfg)?;
    let s: Vec<ComplexMatrix3> = (0..k_grid.len)
        .into_par_iter()
        .map(|j| s_from_left(&plan, Complex64::new(k_grid.point(j), 0.0)))
        .collect();
    if let Some(j) = s.iter().position(|m| !m.is_finite()) {
        return Err(Error::Numerical(format!("non-finite s(k) at k = {}", k_grid.point(j))));
    }
    let (det_defect, unitarity_defect, swap_defect) = symmetry_defects(k_grid, &s);
    for (name, d) in [
        ("det s = 1", det_defect),
        ("s = (s^dagger)^-1", unitarity_defect),
        ("s(k) = A conj(s(-k)) A", swap_defect),
    ] {
        if !(d < SYMMETRY_TOL) {
            return Err(Error::Consistency { check: name.into(), defect: d, tolerance: SYMMETRY_TOL });
        }
    }
    let mut record = ScatteringRecord {
        k_grid: *k_grid,
        s,
        rho1: Vec::new(),
        rho2: Vec::new(),
        winding_s33: 0,
        det_defect,
        unitarity_defect,
        swap_defect,
    };
    let rho1 = reflection_coefficient(&record)?;
    record.rho2 = (0..k_grid.len).map(|j| rho1.values[k_grid.len - 1 - j].conj()).collect();
    record.rho1 = rho1.values;
    record.winding_s33 = solitonless_certificate(&record)?;
    Ok(record)
}

/// Settings for [`scatter`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub k_max: f64,
    pub k_nodes: usize,
    /// Double `k_max` (keeping the spacing) while the tail of ρ₁ exceeds
    /// `tail_tol`, at most this many times.
    pub max_doublings: usize,
    pub tail_tol: f64,
    pub jost: JostConfig,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { k_max: 12.0, k_nodes: 1025, max_doublings: 3, tail_tol: 1e-8, jost: JostConfig::default() }
    }
}

/// [`compute_s`] on a default symmetric grid, widened until ρ₁ has decayed.
pub fn scatter(u0: &InitialDatum, cfg: &ScatterConfig) -> Result<ScatteringRecord> {
    let mut k_max = cfg.k_max;
    let mut nodes = cfg.k_nodes;
    let mut doublings = 0;
    loop {
        let grid = UniformGrid::symmetric(k_max, nodes)?;
        let record = compute_s(u0, &grid, &cfg.jost)?;
        if record.rho1_tail() < cfg.tail_tol || doublings >= cfg.max_doublings {
            return Ok(record);
        }
        k_max *= 2.0;
        nodes = 2 * (nodes - 1) + 1;
        doublings += 1;
    }
}

/// `ρ₁(k) = conj(s₁₃) / conj(s₃₃)` on the record's grid.
pub fn reflection_coefficient(record: &ScatteringRecord) -> Result<SampledField> {
    let mut values = Vec::with_capacity(record.s.len());
    for (j, m) in record.s.iter().enumerate() {
        let s33 = m[(2, 2)];
        if s33.norm() < SINGULARITY_TOL {
            return Err(Error::SpectralSingularity { k: record.k_grid.point(j), modulus: s33.norm() });
        }
        values.push(m[(0, 2)].conj() / s33.conj());
    }
    SampledField::new(record.k_grid, values)
}

/// Winding number of `s₃₃` along the real line, closed through `s₃₃ → 1` at
/// infinity; by the argument principle this counts zeros in the upper half
/// plane.
pub fn solitonless_certificate(record: &ScatteringRecord) -> Result<i64> {
    let s33: Vec<Complex64> = record.s.iter().map(|m| m[(2, 2)]).collect();
    winding_number(&record.k_grid, &s33)
}

fn winding_number(grid: &UniformGrid, f: &[Complex64]) -> Result<i64> {
    let mut total = 0.0;
    for j in 0..f.len() - 1 {
        let d = (f[j + 1] / f[j]).arg();
        if !(d.abs() < PI / 2.0) {
            return Err(Error::Resolution { k: grid.point(j), jump: d });
        }
        total += d;
    }
    let closure = (f[0] / f[f.len() - 1]).arg();
    Ok(((total + closure) / (2.0 * PI)).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(eps: f64) -> InitialDatum {
        let p = Profile::Gaussian { amplitude: eps, width: 1.0, center: 0.0, phase: 0.0 };
        InitialDatum::from_profile(p, -8.0, 8.0, 1601).unwrap()
    }

    #[test]
    fn rejects_undecayed_or_short_data() {
        let p = Profile::Gaussian { amplitude: 1.0, width: 1.0, center: 0.0, phase: 0.0 };
        assert!(InitialDatum::from_profile(p, -3.0, 3.0, 200).is_err());
        assert!(InitialDatum::from_profile(p, -8.0, 8.0, 32).is_err());
        assert!(InitialDatum::from_profile(p, -8.0, 8.0, 64).is_ok());
    }

    #[test]
    fn zero_potential_gives_identity() {
        let u0 = InitialDatum::zero(-5.0, 5.0, 101).unwrap();
        let cfg = JostConfig::default();
        let x = solve_x(&u0, Complex64::new(1.3, 0.2), &cfg).unwrap();
        for m in &x.values {
            assert!((*m - ComplexMatrix3::identity()).max_abs() < 1e-11);
        }
        let grid = UniformGrid::symmetric(4.0, 33).unwrap();
        let rec = compute_s(&u0, &grid, &cfg).unwrap();
        assert!(rec.rho1.iter().all(|r| r.norm() < 1e-14));
        assert_eq!(rec.winding_s33, 0);
    }

    #[test]
    fn jost_determinant_is_one() {
        let u0 = gaussian(0.5);
        let x = solve_x(&u0, Complex64::new(0.7, 0.0), &JostConfig::default()).unwrap();
        for m in &x.values {
            assert!((m.det() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn small_datum_follows_born_approximation() {
        // X - I ≈ -∫_x^∞ e^{ik(x'-x)Λ̂} U₀(x') dx', entry (1,3) is -∫_x^∞ e^{2ik(x' - x)}u₀.
        let eps = 1e-3;
        let u0 = gaussian(eps);
        let k = 0.8;
        let x = solve_x(&u0, Complex64::new(k, 0.0), &JostConfig::default()).unwrap();
        let g = *u0.grid();
        let i0 = g.nearest(-0.5);
        let x0 = g.point(i0);
        let n = 4000;
        let h = (8.0 - x0) / n as f64;
        let mut born = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let xp = x0 + h * j as f64;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            born -= Complex64::from_polar(w * h * eps * (-xp * xp).exp(), 2.0 * k * (xp - x0));
        }
        let got = x.at_node(i0)[(0, 2)];
        assert!((got - born).norm() < 10.0 * eps * eps, "{got} vs {born}");
    }

    #[test]
    fn s13_matches_born_integral_for_small_gaussian() {
        let eps = 1e-3;
        let u0 = gaussian(eps);
        let cfg = JostConfig::default();
        for k in [0.0, 0.5, 1.5] {
            let s = scattering_matrix(&u0, k, &cfg).unwrap();
            let born = -eps * PI.sqrt() * (-k * k).exp();
            assert!((s[(0, 2)] - born).norm() < 5.0 * eps * eps, "k = {k}");
        }
    }

    #[test]
    fn winding_detects_soliton_zero() {
        let u0 = InitialDatum::from_profile(Profile::Soliton { a: 1.0, phi: 0.0, x0: 0.0 }, -30.0, 30.0, 1201)
            .unwrap();
        let cfg = JostConfig { max_step: 0.01 };
        let grid = UniformGrid::symmetric(12.0, 1025).unwrap();
        let rec = compute_s(&u0, &grid, &cfg).unwrap();
        assert_eq!(rec.winding_s33, 1);
        // reflectionless
        assert!(rec.rho1.iter().all(|r| r.norm() < 1e-6));
    }

    #[test]
    fn winding_rejects_coarse_sampling() {
        let grid = UniformGrid::symmetric(1.0, 5).unwrap();
        let f: Vec<Complex64> = (0..5).map(|j| Complex64::from_polar(1.0, 2.0 * j as f64)).collect();
        assert!(matches!(winding_number(&grid, &f), Err(Error::Resolution { .. })));
    }

    #[test]
    fn spectral_singularity_is_reported() {
        let grid = UniformGrid::symmetric(1.0, 3).unwrap();
        let mut s = vec![ComplexMatrix3::identity(); 3];
        s[1][(2, 2)] = Complex64::new(1e-12, 0.0);
        let rec = ScatteringRecord {
            k_grid: grid,
            s,
            rho1: vec![],
            rho2: vec![],
            winding_s33: 0,
            det_defect: 0.0,
            unitarity_defect: 0.0,
            swap_defect: 0.0,
        };
        assert!(matches!(reflection_coefficient(&rec), Err(Error::SpectralSingularity { .. })));
    }
}
