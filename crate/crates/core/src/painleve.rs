//! The modified Painlevé II transcendent `u'' + yu + 2u|u|² = 0` via its 3×3
//! Riemann–Hilbert problem, the model problem on the contour `Z`, and an ODE
//! integrator used as an independent cross-check.
//!
//! Both problems live on four rays leaving `±z₀` at angles `±π/6`, `±5π/6`
//! (joined by the segment `[-z₀, z₀]` when `z₀ > 0`), all oriented from left to
//! right.  The jump is `v_U = (I  p†(z̄)e^{-2iθ}; 0 1)` on the upper rays,
//! `v_L = (I 0; p(z)e^{2iθ} 1)` on the lower rays and `v_L v_U` on the segment,
//! with `θ = yz - 4z³/3` and `p = (p₁, p₂)`, `p₂(z) = conj(p₁(-z̄))`.  With
//! `p₁ ≡ s` and `z₀ = 0` this is the Painlevé problem on `P`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMatrix3;
use crate::error::{Error, Result};
use crate::grid::{fd, lagrange_uniform, SampledField, UniformGrid};
use crate::io::{atomic_write, fmt_f64};
use crate::rh::{solve_rh, Contour, ContourRh, Piece, RhData, RhSolution, SolverConfig};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this `z₀` the segment `[-z₀, z₀]` is dropped and the rays meet at 0.
pub const MERGE_THRESHOLD: f64 = 1e-3;
/// ‖v - I‖ required at the truncated ray ends.
pub const TRUNCATION_TOL: f64 = 1e-16;

fn sqrt8() -> f64 {
    8f64.sqrt()
}

/// Discretisation settings for the contour problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourConfig {
    /// Target panel length along each piece.
    pub panel_len: f64,
    /// Finite-difference order (2 or 4) for the residual checks.
    pub fd_order: u8,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { panel_len: 0.5, fd_order: 4 }
    }
}

impl ContourConfig {
    fn order(&self) -> Result<fd::Order> {
        match self.fd_order {
            2 => Ok(fd::Order::Second),
            4 => Ok(fd::Order::Fourth),
            o => Err(Error::InvalidInput(format!("finite-difference order must be 2 or 4, got {o}"))),
        }
    }
}

/// Coefficients of `p₁(t, z) = s + Σ_j p_{1j} z^j t^{-j/3}`.
#[derive(Debug, Clone, PartialEq)]
struct Poly {
    coeffs: Vec<Complex64>,
    t: f64,
}

impl Poly {
    fn p1(&self, z: Complex64) -> Complex64 {
        let w = z * self.t.powf(-1.0 / 3.0);
        let mut acc = ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JumpKind {
    Upper,
    Lower,
    Segment,
}

/// Jump data of the model problem; pieces are tagged with their jump type.
#[derive(Debug, Clone)]
struct ModelJump {
    y: f64,
    poly: Poly,
    kinds: Vec<JumpKind>,
}

impl ModelJump {
    fn upper(&self, z: Complex64) -> ComplexMatrix3 {
        let e_inv = (-2.0 * I * theta(self.y, z)).exp();
        let mut m = ComplexMatrix3::identity();
        m[(0, 2)] = self.poly.p1(z.conj()).conj() * e_inv;
        m[(1, 2)] = self.poly.p1(-z) * e_inv;
        m
    }

    fn lower(&self, z: Complex64) -> ComplexMatrix3 {
        let e = (2.0 * I * theta(self.y, z)).exp();
        let mut m = ComplexMatrix3::identity();
        m[(2, 0)] = self.poly.p1(z) * e;
        m[(2, 1)] = self.poly.p1(-z.conj()).conj() * e;
        m
    }

    fn eval(&self, piece: usize, z: Complex64) -> ComplexMatrix3 {
        match self.kinds[piece] {
            JumpKind::Upper => self.upper(z),
            JumpKind::Lower => self.lower(z),
            JumpKind::Segment => self.lower(z) * self.upper(z),
        }
    }
}

/// `θ = yz - 4z³/3`.
pub fn theta(y: f64, z: Complex64) -> Complex64 {
    z * y - z * z * z * (4.0 / 3.0)
}

/// Smallest radius beyond the maximum of ‖v - I‖ along the ray at which the
/// jump is below [`TRUNCATION_TOL`].
fn truncation_radius(jump: &ModelJump, piece: usize, base: Complex64, dir: Complex64) -> Result<f64> {
    let dr = 0.05;
    let mut prev = f64::INFINITY;
    let mut r = dr;
    while r < 50.0 {
        let d = (jump.eval(piece, base + dir * r) - ComplexMatrix3::identity()).max_abs();
        if d < TRUNCATION_TOL && d <= prev {
            return Ok(r.max(1.0));
        }
        prev = d;
        r += dr;
    }
    Err(Error::Numerical(format!("jump does not decay along the ray from {base} in direction {dir}")))
}

fn model_rh(y: f64, t: f64, z0: f64, coeffs: &[Complex64], cfg: &ContourConfig) -> Result<ContourRh> {
    if !(cfg.panel_len > 0.0) {
        return Err(Error::InvalidInput(format!("panel length must be positive, got {}", cfg.panel_len)));
    }
    let poly = Poly { coeffs: coeffs.to_vec(), t };
    let merged = z0 < MERGE_THRESHOLD;
    let z0 = if merged { 0.0 } else { z0 };
    let right = Complex64::new(z0, 0.0);
    let left = -right;
    // (label, base point, direction, outward?, jump)
    let rays = [
        ("Z1", right, Complex64::from_polar(1.0, PI / 6.0), true, JumpKind::Upper),
        ("Z2", left, Complex64::from_polar(1.0, 5.0 * PI / 6.0), false, JumpKind::Upper),
        ("Z3", left, Complex64::from_polar(1.0, -5.0 * PI / 6.0), false, JumpKind::Lower),
        ("Z4", right, Complex64::from_polar(1.0, -PI / 6.0), true, JumpKind::Lower),
    ];
    let mut kinds: Vec<JumpKind> = rays.iter().map(|r| r.4).collect();
    if !merged {
        kinds.push(JumpKind::Segment);
    }
    let jump = ModelJump { y, poly, kinds };
    let mut pieces = Vec::new();
    for (i, (label, base, dir, outward, _)) in rays.iter().enumerate() {
        let r = truncation_radius(&jump, i, *base, *dir)?;
        let far = *base + dir * r;
        let panels = (r / cfg.panel_len).ceil() as usize;
        pieces.push(if *outward {
            Piece::new(label, *base, far, panels)
        } else {
            Piece::new(label, far, *base, panels)
        });
    }
    if !merged {
        let panels = (2.0 * z0 / cfg.panel_len).ceil() as usize;
        pieces.push(Piece::new("Z5", left, right, panels));
    }
    let contour = Contour { pieces };
    ContourRh::new(contour, |p, z| jump.eval(p, z))
}

/// The Painlevé problem on `P` for datum `s` at the point `y`.
pub fn build_painleve_rh(s: Complex64, y: f64, cfg: &ContourConfig) -> Result<ContourRh> {
    if !y.is_finite() || !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite Painleve data s = {s}, y = {y}")));
    }
    model_rh(y, 1.0, 0.0, &[s], cfg)
}

/// Jump of the Painlevé problem at an arbitrary point, by piece of `P`
/// (0, 1 upper rays; 2, 3 lower rays).
pub fn painleve_jump(s: Complex64, y: f64, piece: usize, z: Complex64) -> ComplexMatrix3 {
    let jump = ModelJump {
        y,
        poly: Poly { coeffs: vec![s], t: 1.0 },
        kinds: vec![JumpKind::Upper, JumpKind::Upper, JumpKind::Lower, JumpKind::Lower],
    };
    jump.eval(piece, z)
}

/// Coefficients of the Painlevé problem at one `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PainlevePoint {
    pub y: f64,
    pub m1: ComplexMatrix3,
    pub m2: ComplexMatrix3,
    pub residual: f64,
}

impl PainlevePoint {
    /// `u_P = 2√2 (m₁)₁₃`.
    pub fn u_p(&self) -> Complex64 {
        self.m1[(0, 2)] * sqrt8()
    }

    /// `u_P'` from `(m₁)_y = i[Λ, m₁] m₁ - i[Λ, m₂]`, whose (1,3) entry is
    /// `2i (m₁)₁₃ (m₁)₃₃ - 2i (m₂)₁₃`.
    pub fn u_p_prime(&self) -> Complex64 {
        (self.m1[(0, 2)] * self.m1[(2, 2)] - self.m2[(0, 2)]) * (2.0 * I) * sqrt8()
    }

    /// `(ψ₁, ψ₂, ψ₃, ψ₄) = (m₁₁, m₁₂, m₁₃, m₃₃)` of `m₁`.
    pub fn psi(&self) -> [Complex64; 4] {
        [self.m1[(0, 0)], self.m1[(0, 1)], self.m1[(0, 2)], self.m1[(2, 2)]]
    }
}

/// Solves the Painlevé problem at a single `y`.
pub fn solve_painleve_point(s: Complex64, y: f64, cfg: &ContourConfig) -> Result<PainlevePoint> {
    let sol = solve_painleve_full(s, y, cfg)?;
    Ok(PainlevePoint { y, m1: sol.m1, m2: sol.m2, residual: sol.residual })
}

/// As [`solve_painleve_point`] but returning the full discrete solution.
pub fn solve_painleve_full(s: Complex64, y: f64, cfg: &ContourConfig) -> Result<RhSolution> {
    let data = RhData::Contour(build_painleve_rh(s, y, cfg)?);
    solve_rh(&data, &SolverConfig::default())
}

/// Input of [`solve_painleve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainleveData {
    pub s: Complex64,
    pub y_grid: UniformGrid,
}

/// `u_P` and the coefficients of `m^P` on a y-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PainleveSolution {
    pub s: Complex64,
    pub y_grid: UniformGrid,
    pub u_p: Vec<Complex64>,
    pub u_p_prime: Vec<Complex64>,
    pub m1: Vec<ComplexMatrix3>,
    pub m2: Vec<ComplexMatrix3>,
    pub psi: Vec<[Complex64; 4]>,
    /// Pointwise defect of `u'' + yu + 2u|u|²` (zero at the two end nodes
    /// on each side, where the stencil does not fit).
    pub ode_defect: Vec<f64>,
    pub ode_residual: f64,
    pub max_solver_residual: f64,
    pub fd_order: u8,
}

impl PainleveSolution {
    pub fn u_p_field(&self) -> SampledField {
        SampledField { grid: self.y_grid, values: self.u_p.clone() }
    }

    /// Cubic interpolation of `u_P`.
    pub fn interpolate(&self, y: f64) -> Result<Complex64> {
        self.u_p_field().interpolate(y)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut s = String::from("y,re_u,im_u,abs_u,arg_u,ode_residual\n");
        for (j, u) in self.u_p.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(self.y_grid.point(j)),
                fmt_f64(u.re),
                fmt_f64(u.im),
                fmt_f64(u.norm()),
                fmt_f64(u.arg()),
                fmt_f64(self.ode_defect[j])
            ));
        }
        atomic_write(path, s.as_bytes())
    }
}

/// `max |u'' + yu + 2u|u|²|` over the interior of the grid, and the pointwise defect.
pub fn painleve_ode_defect(u: &SampledField, order: fd::Order) -> (f64, Vec<f64>) {
    let n = u.grid.len;
    let h = u.grid.step;
    let reach = match order {
        fd::Order::Second => 1,
        fd::Order::Fourth => 2,
    };
    let mut defect = vec![0.0; n];
    let mut worst: f64 = 0.0;
    if n < 2 * reach + 1 {
        return (0.0, defect);
    }
    for j in reach..n - reach {
        let v = u.values[j];
        let y = u.grid.point(j);
        let r = fd::d2(&u.values, j, h, order) + v * y + v * (2.0 * v.norm_sqr());
        defect[j] = r.norm();
        worst = worst.max(defect[j]);
    }
    (worst, defect)
}

/// Per-y Painlevé solves over the grid plus the ODE residual.
pub fn solve_painleve(data: &PainleveData, cfg: &ContourConfig) -> Result<PainleveSolution> {
    let order = cfg.order()?;
    let g = data.y_grid;
    let points: Vec<PainlevePoint> = (0..g.len)
        .into_par_iter()
        .map(|j| {
            let y = g.point(j);
            solve_painleve_point(data.s, y, cfg).map_err(|e| Error::Numerical(format!("Painleve solve at y = {y}: {e}")))
        })
        .collect::<Result<_>>()?;
    let u_p: Vec<Complex64> = points.iter().map(|p| p.u_p()).collect();
    let field = SampledField { grid: g, values: u_p.clone() };
    let (ode_residual, ode_defect) = painleve_ode_defect(&field, order);
    Ok(PainleveSolution {
        s: data.s,
        y_grid: g,
        u_p,
        u_p_prime: points.iter().map(|p| p.u_p_prime()).collect(),
        m1: points.iter().map(|p| p.m1).collect(),
        m2: points.iter().map(|p| p.m2).collect(),
        psi: points.iter().map(|p| p.psi()).collect(),
        ode_defect,
        ode_residual,
        max_solver_residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        fd_order: cfg.fd_order,
    })
}

/// Defects of the ψ-relations and structural checks of `m₁^P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiCheck {
    /// Max over `ψ₁' + 2i|ψ₃|²`, `ψ₂' - 2iψ₃²`, `ψ₄' - 4i|ψ₃|²`,
    /// `ψ₃'' + yψ₃ + 16ψ₃|ψ₃|²`.
    pub relation_defect: f64,
    /// max |Re ψ₁|, |Re ψ₄|.
    pub real_part: f64,
    /// max of the defects of `m₁ = -m₁†` and `m₁ = -A conj(m₁) A`.
    pub symmetry: f64,
    /// max |(m₁)₁₃ - u_P/(2√2)|.
    pub entry13: f64,
    /// max `|ψ₃|² |(arg ψ₃)'|` = max |Im(conj(ψ₃) ψ₃')|.
    pub c0: f64,
}

impl PsiCheck {
    pub fn max_defect(&self) -> f64 {
        self.relation_defect.max(self.real_part).max(self.symmetry).max(self.entry13)
    }
}

/// Checks the ψ-system relations on the solution grid.
pub fn psi_system_check(sol: &PainleveSolution) -> Result<PsiCheck> {
    let order = match sol.fd_order {
        2 => fd::Order::Second,
        _ => fd::Order::Fourth,
    };
    let reach = match order {
        fd::Order::Second => 1,
        fd::Order::Fourth => 2,
    };
    let g = sol.y_grid;
    let h = g.step;
    let n = g.len;
    if n < 2 * reach + 1 {
        return Err(Error::InvalidInput("y-grid too short for the psi check".into()));
    }
    let col = |k: usize| -> Vec<Complex64> { sol.psi.iter().map(|p| p[k]).collect() };
    let (p1, p2, p3, p4) = (col(0), col(1), col(2), col(3));
    let mut rel: f64 = 0.0;
    for j in reach..n - reach {
        let a = p3[j];
        let m = a.norm_sqr();
        let d1 = fd::d1(&p1, j, h, order) + I * (2.0 * m);
        let d2 = fd::d1(&p2, j, h, order) - I * a * a * 2.0;
        let d4 = fd::d1(&p4, j, h, order) - I * (4.0 * m);
        let d3 = fd::d2(&p3, j, h, order) + a * g.point(j) + a * (16.0 * m);
        rel = rel.max(d1.norm()).max(d2.norm()).max(d3.norm()).max(d4.norm());
    }
    let mut real_part: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    let mut entry13: f64 = 0.0;
    let mut c0: f64 = 0.0;
    for j in 0..n {
        real_part = real_part.max(p1[j].re.abs()).max(p4[j].re.abs());
        let m = sol.m1[j];
        symmetry = symmetry.max((m + m.adjoint()).max_abs()).max((m + m.swap_conj()).max_abs());
        entry13 = entry13.max((m[(0, 2)] - sol.u_p[j] / sqrt8()).norm());
        let dpsi3 = sol.u_p_prime[j] / sqrt8();
        c0 = c0.max((p3[j].conj() * dpsi3).im.abs());
    }
    Ok(PsiCheck { relation_defect: rel, real_part, symmetry, entry13, c0 })
}

/// Standard deviation of `arg u` modulo π over nodes with `|u| > floor`.  A
/// constant-phase solution may change sign, so phases are folded into
/// `(-π/2, π/2]` relative to the value at the largest |u|.
pub fn phase_spread(u: &[Complex64], floor: f64) -> f64 {
    let Some(peak) = u.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return 0.0;
    };
    if peak.norm() <= floor {
        return 0.0;
    }
    let rot = peak.conj() / peak.norm();
    let phases: Vec<f64> = u
        .iter()
        .filter(|v| v.norm() > floor)
        .map(|v| {
            let a = (v * rot).arg();
            if a > PI / 2.0 {
                a - PI
            } else if a <= -PI / 2.0 {
                a + PI
            } else {
                a
            }
        })
        .collect();
    let mean = phases.iter().sum::<f64>() / phases.len() as f64;
    (phases.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / phases.len() as f64).sqrt()
}

/// Integrates `u'' = -yu - 2u|u|²` from `(y₀, u, u')` over `y_grid` (both
/// directions) with classical RK4 on `substeps` steps per grid cell.
pub fn solve_painleve_ode(
    anchor: (f64, Complex64, Complex64),
    y_grid: &UniformGrid,
    substeps: usize,
) -> Result<SampledField> {
    let (y0, u0, v0) = anchor;
    if !y_grid.contains(y0) {
        return Err(Error::Range { what: "ODE anchor".into(), value: y0, lo: y_grid.start, hi: y_grid.end() });
    }
    let f = |y: f64, u: Complex64, v: Complex64| (v, -u * y - u * (2.0 * u.norm_sqr()));
    let rk4 = |y: f64, u: Complex64, v: Complex64, h: f64| {
        let (a1, b1) = f(y, u, v);
        let (a2, b2) = f(y + h / 2.0, u + a1 * (h / 2.0), v + b1 * (h / 2.0));
        let (a3, b3) = f(y + h / 2.0, u + a2 * (h / 2.0), v + b2 * (h / 2.0));
        let (a4, b4) = f(y + h, u + a3 * h, v + b3 * h);
        (u + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0), v + (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0))
    };
    let sub = substeps.max(1);
    let mut values = vec![ZERO; y_grid.len];
    let pos = (y0 - y_grid.start) / y_grid.step;
    let j0 = pos.round() as usize;
    // march from the anchor to the nearest node first
    let (mut u, mut v) = (u0, v0);
    let gap = y_grid.point(j0) - y0;
    if gap != 0.0 {
        let steps = sub;
        for i in 0..steps {
            let h = gap / steps as f64;
            (u, v) = rk4(y0 + h * i as f64, u, v, h);
        }
    }
    values[j0] = u;
    let start = (u, v);
    for dir in [1isize, -1] {
        let (mut u, mut v) = start;
        let mut j = j0 as isize;
        loop {
            let next = j + dir;
            if next < 0 || next >= y_grid.len as isize {
                break;
            }
            let h = dir as f64 * y_grid.step / sub as f64;
            let mut y = y_grid.point(j as usize);
            for _ in 0..sub {
                (u, v) = rk4(y, u, v, h);
                y += h;
            }
            if !u.re.is_finite() || !u.im.is_finite() {
                return Err(Error::Numerical(format!("ODE solution blew up near y = {y}")));
            }
            values[next as usize] = u;
            j = next;
        }
    }
    SampledField::new(*y_grid, values)
}

/// Input of [`solve_model_problem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProblemData {
    pub y: f64,
    pub t: f64,
    pub z0: f64,
    /// `(s, p_{11}, p_{12}, ...)`.
    pub p_coeffs: Vec<Complex64>,
}

impl ModelProblemData {
    /// Membership of `0 ≤ y ≤ c1, t ≥ 1, √y/2 ≤ z₀ ≤ c2`.
    pub fn in_parameter_set(&self, c1: f64, c2: f64) -> bool {
        self.y >= 0.0 && self.y <= c1 && self.t >= 1.0 && self.z0 >= 0.5 * self.y.sqrt() && self.z0 <= c2
    }
}

/// Leading coefficients of the model problem.
#[derive(Debug, Clone)]
pub struct ModelProblemSolution {
    /// `m₁₀`: the `t⁰` part of the `1/z` coefficient.
    pub m10: ComplexMatrix3,
    /// `m₁₁`: the `t^{-1/3}` part of the `1/z` coefficient.
    pub m11: ComplexMatrix3,
    /// `m₁` at `t` and at `8t`.
    pub m1_t: ComplexMatrix3,
    pub m1_8t: ComplexMatrix3,
    /// Whether `z₀` was below the merge threshold.
    pub merged: bool,
    /// Discrete solution at `t`, for probing `m^Z` off the contour.
    pub solution: RhSolution,
}

/// Solves the model problem at `t` and `8t` and separates the `t⁰` and
/// `t^{-1/3}` parts of the `1/z` coefficient by Richardson elimination.
pub fn solve_model_problem(data: &ModelProblemData, cfg: &ContourConfig) -> Result<ModelProblemSolution> {
    if !(data.y >= 0.0) || !(data.t >= 1.0) || !(data.z0 >= 0.0) || data.p_coeffs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "model problem needs y >= 0, t >= 1, z0 >= 0 and at least one coefficient (got y = {}, t = {}, z0 = {})",
            data.y, data.t, data.z0
        )));
    }
    let solve = |t: f64| -> Result<RhSolution> {
        let rh = model_rh(data.y, t, data.z0, &data.p_coeffs, cfg)?;
        solve_rh(&RhData::Contour(rh), &SolverConfig::default())
    };
    let at_t = solve(data.t)?;
    let at_8t = solve(8.0 * data.t)?;
    let m10 = at_8t.m1.scale_re(2.0) - at_t.m1;
    let m11 = (at_t.m1 - m10).scale_re(data.t.cbrt());
    Ok(ModelProblemSolution {
        m10,
        m11,
        m1_t: at_t.m1,
        m1_8t: at_8t.m1,
        merged: data.z0 < MERGE_THRESHOLD,
        solution: at_t,
    })
}

/// JSON form of the ψ samples and `m₁^P`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PainleveRecord {
    pub s: Complex64,
    pub y: Vec<f64>,
    pub psi: Vec<[Complex64; 4]>,
    pub m1: Vec<ComplexMatrix3>,
    pub ode_residual: f64,
    pub fd_order: u8,
}

impl From<&PainleveSolution> for PainleveRecord {
    fn from(sol: &PainleveSolution) -> Self {
        Self {
            s: sol.s,
            y: sol.y_grid.points(),
            psi: sol.psi.clone(),
            m1: sol.m1.clone(),
            ode_residual: sol.ode_residual,
            fd_order: sol.fd_order,
        }
    }
}

/// Interpolates `u_P` given on a uniform y-grid, as used by the asymptotics.
pub fn interpolate_u_p(y_grid: &UniformGrid, u_p: &[Complex64], y: f64) -> Result<Complex64> {
    if !y_grid.contains(y) {
        return Err(Error::Range { what: "y".into(), value: y, lo: y_grid.start, hi: y_grid.end() });
    }
    Ok(lagrange_uniform(y_grid, u_p, y, 4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_datum_gives_trivial_jump_and_solution() {
        let rh = build_painleve_rh(ZERO, 0.3, &ContourConfig::default()).unwrap();
        assert!(rh.jumps.iter().all(|v| *v == ComplexMatrix3::identity()));
        let p = solve_painleve_point(ZERO, 0.3, &ContourConfig::default()).unwrap();
        assert_eq!(p.u_p(), ZERO);
    }

    #[test]
    fn jump_hermitian_symmetry() {
        let s = c(0.3, 0.7);
        let y = -1.2;
        for (piece, conj_piece, z) in [
            (0usize, 3usize, Complex64::from_polar(0.8, PI / 6.0)),
            (1, 2, Complex64::from_polar(1.1, 5.0 * PI / 6.0)),
        ] {
            let v = painleve_jump(s, y, piece, z);
            let w = painleve_jump(s, y, conj_piece, z.conj());
            assert!((v - w.adjoint()).max_abs() < 1e-14);
            // A conj(v(-z̄)) A, with -z̄ on the mirror ray of the same half plane
            let mirror = painleve_jump(s, y, 1 - piece, -z.conj());
            assert!((v - mirror.swap_conj()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn jump_decays_cubically_along_rays() {
        let s = c(0.5, 0.0);
        for r in [1.0, 1.5, 2.0] {
            let z = Complex64::from_polar(r, PI / 6.0);
            let d = (painleve_jump(s, 0.0, 0, z) - ComplexMatrix3::identity()).max_abs();
            let bound = 0.5 * (-(8.0 / 3.0) * r * r * r).exp();
            assert!((d - bound).abs() < 1e-12 * bound.max(1e-300) + 1e-300, "r = {r}: {d} vs {bound}");
        }
    }

    #[test]
    fn ode_keeps_real_anchor_real() {
        let g = UniformGrid::span(-2.0, 2.0, 401).unwrap();
        let u = solve_painleve_ode((0.0, c(0.3, 0.0), c(-0.1, 0.0)), &g, 4).unwrap();
        assert!(u.values.iter().all(|v| v.im == 0.0));
        let zero = solve_painleve_ode((0.0, ZERO, ZERO), &g, 4).unwrap();
        assert!(zero.values.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn phase_spread_of_constant_phase_is_zero() {
        let u: Vec<Complex64> = (0..50).map(|j| Complex64::from_polar(j as f64 * 0.1 + 1e-3, 3.1)).collect();
        assert!(phase_spread(&u, 1e-6) < 1e-14);
        let flip: Vec<Complex64> = (0..50).map(|j| Complex64::from_polar(j as f64 - 24.5, 0.4)).collect();
        assert!(phase_spread(&flip, 1e-6) < 1e-14);
        let w: Vec<Complex64> = (0..50).map(|j| Complex64::from_polar(1.0, j as f64 * 0.02)).collect();
        assert!(phase_spread(&w, 1e-6) > 0.1);
    }

    #[test]
    fn model_problem_validation() {
        let bad = ModelProblemData { y: -1.0, t: 1.0, z0: 0.0, p_coeffs: vec![c(0.1, 0.0)] };
        assert!(solve_model_problem(&bad, &ContourConfig::default()).is_err());
        let d = ModelProblemData { y: 1.0, t: 2.0, z0: 0.6, p_coeffs: vec![c(0.1, 0.0)] };
        assert!(d.in_parameter_set(2.0, 2.0));
        let d = ModelProblemData { z0: 0.0, ..d };
        assert!(!d.in_parameter_set(2.0, 2.0));
    }
}
