//! Riemann–Hilbert problems: Cauchy boundary operators, the singular integral
//! equation `μ = I + C_w μ`, and reconstruction of `u(x, t)`.
//!
//! Two discretisations are provided.
//!
//! * The real line, for the inverse scattering problem.  Functions are sampled
//!   on the nodes `k_j = L tan(θ_j/2)` of a uniform θ-grid; `(1 - ik/L) h` is a
//!   smooth periodic function of θ whose nonnegative Fourier modes are exactly
//!   the part of `h` analytic in the upper half plane, so `C_±` are applied with
//!   two FFTs.
//! * Unions of straight pieces (truncated rays and segments), for the
//!   Painlevé and model problems.  Gauss–Legendre panels, with singular and
//!   nearly singular panel integrals done by product integration against the
//!   polynomial interpolant of the density.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMatrix3;
use crate::error::{Error, Result};
use crate::grid::{lagrange_uniform, SampledField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative size of the highest Fourier modes tolerated by [`cauchy_boundary`].
pub const SPECTRAL_TAIL_TOL: f64 = 1e-10;
/// Default tolerance on the relative residual of the discrete equation.
pub const SOLVER_TOL: f64 = 1e-10;
/// Magnitude of ρ below which a node does not count towards the oscillation budget.
pub const BUDGET_FLOOR: f64 = 1e-10;

fn two_pi_i() -> Complex64 {
    Complex64::new(0.0, 2.0 * PI)
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Boundary value side of a Cauchy transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Limit from the left of the oriented contour (the upper half plane for ℝ).
    Plus,
    Minus,
}

/// Mapped trigonometric discretisation of the real line.
#[derive(Clone)]
pub struct RealLine {
    pub scale: f64,
    pub nodes: Vec<f64>,
    /// Trapezoid weights in θ times `dk/dθ`.
    pub weights: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RealLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealLine").field("n", &self.nodes.len()).field("scale", &self.scale).finish()
    }
}

impl RealLine {
    pub fn new(n: usize, scale: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!("real-line grid needs an even n >= 16, got {n}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!("map scale must be positive, got {scale}")));
        }
        let dtheta = 2.0 * PI / n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let theta = -PI + (j as f64 + 0.5) * dtheta;
            let k = scale * (0.5 * theta).tan();
            nodes.push(k);
            weights.push(dtheta * 0.5 * scale * (1.0 + (k / scale).powi(2)));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { scale, nodes, weights, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn weight_factor(&self, j: usize) -> Complex64 {
        Complex64::new(1.0, -self.nodes[j] / self.scale)
    }

    /// Fourier coefficients (FFT order) of the periodic function `(1 - ik/L) h`.
    fn spectrum(&self, h: &[Complex64]) -> Vec<Complex64> {
        let mut g: Vec<Complex64> = h.iter().enumerate().map(|(j, v)| v * self.weight_factor(j)).collect();
        self.fwd.process(&mut g);
        g
    }

    /// `C₊f - C₋g` from the spectra of `f` and `g`.
    fn combine(&self, f_hat: &[Complex64], g_hat: &[Complex64], out: &mut [Complex64]) {
        let n = self.len();
        for q in 0..n {
            out[q] = if q < n / 2 { f_hat[q] } else { -g_hat[q] };
        }
        self.inv.process(out);
        for (j, o) in out.iter_mut().enumerate() {
            *o /= self.weight_factor(j) * n as f64;
        }
    }

    /// Both boundary values `C₊h`, `C₋h`, without the resolution check.
    pub fn cauchy_pair(&self, h: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.len();
        let spec = self.spectrum(h);
        let zero = vec![ZERO; n];
        let mut plus = vec![ZERO; n];
        let mut minus = vec![ZERO; n];
        self.combine(&spec, &zero, &mut plus);
        // C₋h = -(negative modes)
        let neg: Vec<Complex64> = spec.iter().map(|v| -v).collect();
        self.combine(&zero, &neg, &mut minus);
        for v in minus.iter_mut() {
            *v = -*v;
        }
        (plus, minus)
    }

    /// Largest relative Fourier coefficient among the top quarter of modes.
    pub fn spectral_tail(&self, h: &[Complex64]) -> f64 {
        let n = self.len();
        let spec = self.spectrum(h);
        let max = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let lo = 3 * n / 8;
        let hi = n - lo;
        spec[lo..=hi].iter().map(|v| v.norm()).fold(0.0, f64::max) / max
    }
}

/// `C₊h` or `C₋h` at the nodes of `line`.
///
/// `h` must be resolved by the grid: `(1 - ik/L) h`, viewed as a periodic
/// function of θ, needs negligible energy in its highest modes.  Functions that
/// do not decay at infinity fail this test.
pub fn cauchy_boundary(line: &RealLine, h: &[Complex64], side: Side) -> Result<Vec<Complex64>> {
    if h.len() != line.len() {
        return Err(Error::InvalidInput(format!("{} samples for {} nodes", h.len(), line.len())));
    }
    if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite density".into()));
    }
    let tail = line.spectral_tail(h);
    if tail > SPECTRAL_TAIL_TOL {
        return Err(Error::InvalidInput(format!(
            "density does not decay or is under-resolved (relative spectral tail {tail:.3e})"
        )));
    }
    let (plus, minus) = line.cauchy_pair(h);
    Ok(match side {
        Side::Plus => plus,
        Side::Minus => minus,
    })
}

/// Outcome of [`gmres`].
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES for `A x = b` with `A` given as a matrix-free product.
/// `residual` is the final relative residual `|b - Ax| / |b|`.
pub fn gmres(
    mut apply: impl FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x, iterations: 0, residual: 0.0 });
    }
    let mut total = 0;
    let mut ax = vec![ZERO; n];
    loop {
        apply(&x, &mut ax);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= tol {
            return Ok(GmresOutcome { x, iterations: total, residual: beta / bnorm });
        }
        if total >= max_iter {
            return Err(Error::Numerical(format!(
                "GMRES did not converge in {max_iter} iterations (relative residual {:.3e})",
                beta / bnorm
            )));
        }
        let m = restart.min(max_iter - total).max(1);
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = vec![ZERO; n];
            apply(&basis[j], &mut w);
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[i][j] = h;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= h * vk;
                }
            }
            let hn = norm2(&w);
            hess[j + 1][j] = Complex64::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let a = hess[j][j];
            let bb = hess[j + 1][j];
            let d = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if d == 0.0 {
                used = j;
                break;
            }
            cs[j] = a / d;
            sn[j] = bb / d;
            hess[j][j] = cs[j].conj() * a + sn[j].conj() * bb;
            hess[j + 1][j] = ZERO;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            total += 1;
            if g[j + 1].norm() / bnorm <= 0.1 * tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= hess[i][k] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[k]) {
                *xi += yk * vi;
            }
        }
        if used == 0 {
            return Err(Error::Numerical("GMRES breakdown".into()));
        }
    }
}

/// Jump of the inverse scattering problem on the real line, sampled at the
/// nodes of a [`RealLine`].
///
/// `v = (I - w⁻)^{-1}(I + w⁺)` with `w⁻ = (0 0; ρE 0)`, `w⁺ = (0 ρ†Ē; 0 0)`,
/// `ρ = (ρ₁, ρ₂)` and `E = e^{2ikx - 8ik³t}`.
#[derive(Debug, Clone)]
pub struct LineJump {
    pub x: f64,
    pub t: f64,
    pub rho1: Vec<Complex64>,
    pub rho2: Vec<Complex64>,
    pub phase: Vec<Complex64>,
}

impl LineJump {
    pub fn w_minus(&self, j: usize) -> ComplexMatrix3 {
        let e = self.phase[j];
        let mut m = ComplexMatrix3::zero();
        m[(2, 0)] = self.rho1[j] * e;
        m[(2, 1)] = self.rho2[j] * e;
        m
    }

    pub fn w_plus(&self, j: usize) -> ComplexMatrix3 {
        let e = self.phase[j].conj();
        let mut m = ComplexMatrix3::zero();
        m[(0, 2)] = self.rho1[j].conj() * e;
        m[(1, 2)] = self.rho2[j].conj() * e;
        m
    }

    pub fn v(&self, j: usize) -> ComplexMatrix3 {
        (ComplexMatrix3::identity() + self.w_minus(j)) * (ComplexMatrix3::identity() + self.w_plus(j))
    }

    pub fn is_trivial(&self) -> bool {
        self.rho1.iter().chain(&self.rho2).all(|r| *r == ZERO)
    }
}

/// Real-line problem: grid plus jump.
#[derive(Debug, Clone)]
pub struct LineRh {
    pub line: RealLine,
    pub jump: LineJump,
}

/// The jump of the inverse problem at `(x, t)` built from ρ₁ sampled on a
/// uniform symmetric k-grid (zero outside it).
///
/// Refuses with [`Error::OscillationBudget`] when the phase `2kx - 8k³t`
/// advances by more than π/4 between neighbouring nodes anywhere ρ is not
/// negligible.
pub fn build_jump_v(x: f64, t: f64, rho1: &SampledField, line: &RealLine) -> Result<LineRh> {
    if !x.is_finite() || !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite (x, t) = ({x}, {t})")));
    }
    let g = rho1.grid;
    let sample = |k: f64| -> Complex64 {
        if g.contains(k) {
            lagrange_uniform(&g, &rho1.values, k, 6)
        } else {
            ZERO
        }
    };
    let n = line.len();
    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    let mut phase = Vec::with_capacity(n);
    for (j, &k) in line.nodes.iter().enumerate() {
        let a = sample(k);
        let b = sample(-k).conj();
        if a.norm().max(b.norm()) >= BUDGET_FLOOR {
            // the quadrature weight is the local node spacing
            let step = (2.0 * x - 24.0 * k * k * t).abs() * line.weights[j];
            if step > PI / 4.0 {
                return Err(Error::OscillationBudget { x, t, phase_step: step });
            }
        }
        r1.push(a);
        r2.push(b);
        phase.push(Complex64::from_polar(1.0, 2.0 * k * x - 8.0 * k * k * k * t));
    }
    Ok(LineRh { line: line.clone(), jump: LineJump { x, t, rho1: r1, rho2: r2, phase } })
}

/// Oriented straight piece of a contour from `start` to `end`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Piece {
    pub label: String,
    pub start: Complex64,
    pub end: Complex64,
    pub panels: usize,
}

impl Piece {
    pub fn new(label: &str, start: Complex64, end: Complex64, panels: usize) -> Self {
        Self { label: label.to_string(), start, end, panels: panels.max(1) }
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Union of straight pieces; rays are stored truncated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Contour {
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone)]
struct Panel {
    a: Complex64,
    b: Complex64,
    first: usize,
}

/// Nodes, complex weights `dz` and panel structure of a [`Contour`].
#[derive(Debug, Clone)]
pub struct Discretization {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    /// Index of the piece each node lies on.
    pub piece: Vec<usize>,
    panels: Vec<Panel>,
    panel_of: Vec<usize>,
}

/// Nodes per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 16;

struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Inverse transpose of the monomial Vandermonde matrix on the nodes.
    vt_inv: SMatrix<f64, PANEL_ORDER, PANEL_ORDER>,
}

fn panel_rule() -> &'static PanelRule {
    static RULE: OnceLock<PanelRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(PANEL_ORDER);
        let vt = SMatrix::<f64, PANEL_ORDER, PANEL_ORDER>::from_fn(|n, k| nodes[k].powi(n as i32));
        let vt_inv = vt.try_inverse().expect("Vandermonde matrix on distinct nodes is invertible");
        PanelRule { nodes, weights, vt_inv }
    })
}

impl Contour {
    pub fn discretize(&self) -> Result<Discretization> {
        let rule = panel_rule();
        let mut d = Discretization {
            nodes: Vec::new(),
            weights: Vec::new(),
            piece: Vec::new(),
            panels: Vec::new(),
            panel_of: Vec::new(),
        };
        for (pi, piece) in self.pieces.iter().enumerate() {
            if !(piece.length() > 0.0) {
                return Err(Error::InvalidInput(format!("degenerate contour piece {}", piece.label)));
            }
            for p in 0..piece.panels {
                let a = piece.start + (piece.end - piece.start) * (p as f64 / piece.panels as f64);
                let b = piece.start + (piece.end - piece.start) * ((p + 1) as f64 / piece.panels as f64);
                let first = d.nodes.len();
                d.panels.push(Panel { a, b, first });
                let half = (b - a) * 0.5;
                let mid = (a + b) * 0.5;
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    d.nodes.push(mid + half * *t);
                    d.weights.push(half * *w);
                    d.piece.push(pi);
                    d.panel_of.push(d.panels.len() - 1);
                }
            }
        }
        Ok(d)
    }
}

/// Bernstein-ellipse parameter of `ζ` relative to [-1, 1].
fn bernstein(zeta: Complex64) -> f64 {
    let r = (zeta * zeta - 1.0).sqrt();
    (zeta + r).norm().max((zeta - r).norm())
}

/// Weights λ with `∫_{-1}^{1} f(τ)/(τ - ζ) dτ ≈ Σ λ_k f(τ_k)`; for `on_panel`
/// the minus-side (right of the orientation) limit is taken.
fn product_weights(zeta: Complex64, on_panel: bool) -> [Complex64; PANEL_ORDER] {
    let rule = panel_rule();
    let mut p = [ZERO; PANEL_ORDER];
    p[0] = if on_panel {
        let t = zeta.re;
        Complex64::new(((1.0 - t) / (1.0 + t)).ln(), -PI)
    } else {
        ((1.0 - zeta) / (-1.0 - zeta)).ln()
    };
    for n in 1..PANEL_ORDER {
        let odd = if n % 2 == 1 { 2.0 / n as f64 } else { 0.0 };
        p[n] = zeta * p[n - 1] + odd;
    }
    let mut lam = [ZERO; PANEL_ORDER];
    for (k, l) in lam.iter_mut().enumerate() {
        let mut s = ZERO;
        for n in 0..PANEL_ORDER {
            s += p[n] * rule.vt_inv[(k, n)];
        }
        *l = s;
    }
    lam
}

const NEAR_BERNSTEIN: f64 = 3.0;

impl Discretization {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Dense matrix `K` with `(C₋f)(z_i) ≈ Σ_j K_ij f_j`.
    pub fn cauchy_minus_matrix(&self) -> DMatrix<Complex64> {
        let n = self.len();
        let scale = two_pi_i().inv();
        let mut k = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            let zi = self.nodes[i];
            for (pi, panel) in self.panels.iter().enumerate() {
                let zeta = (zi * 2.0 - panel.a - panel.b) / (panel.b - panel.a);
                let own = self.panel_of[i] == pi;
                if own || bernstein(zeta) < NEAR_BERNSTEIN {
                    let lam = product_weights(zeta, own);
                    for (q, l) in lam.iter().enumerate() {
                        k[(i, panel.first + q)] = l * scale;
                    }
                } else {
                    for q in 0..PANEL_ORDER {
                        let j = panel.first + q;
                        k[(i, j)] = self.weights[j] / (self.nodes[j] - zi) * scale;
                    }
                }
            }
        }
        k
    }

    /// `(C₋h)` at the nodes for a scalar density.
    pub fn cauchy_minus(&self, h: &[Complex64]) -> Vec<Complex64> {
        let k = self.cauchy_minus_matrix();
        let v = nalgebra::DVector::from_column_slice(h);
        (k * v).iter().copied().collect()
    }
}

/// Contour problem: discretised contour with the jump at every node, solved
/// with the one-sided convention `w⁻ = 0`, `w⁺ = v - I`.
#[derive(Debug, Clone)]
pub struct ContourRh {
    pub contour: Contour,
    pub disc: Discretization,
    pub jumps: Vec<ComplexMatrix3>,
}

impl ContourRh {
    pub fn new(contour: Contour, jump: impl Fn(usize, Complex64) -> ComplexMatrix3) -> Result<Self> {
        let disc = contour.discretize()?;
        let jumps = disc.nodes.iter().zip(&disc.piece).map(|(z, p)| jump(*p, *z)).collect();
        Ok(Self { contour, disc, jumps })
    }

    /// Largest ‖v - I‖ at the outer ends of pieces listed in `ray_pieces`.
    pub fn truncation_defect(&self, jump: impl Fn(usize, Complex64) -> ComplexMatrix3, ray_pieces: &[usize]) -> f64 {
        ray_pieces
            .iter()
            .map(|&p| {
                let piece = &self.contour.pieces[p];
                let far = if piece.start.norm() > piece.end.norm() { piece.start } else { piece.end };
                (jump(p, far) - ComplexMatrix3::identity()).max_abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Input of [`solve_rh`].
#[derive(Debug, Clone)]
pub enum RhData {
    Line(LineRh),
    Contour(ContourRh),
}

/// Discrete solution of a Riemann–Hilbert problem.
#[derive(Debug, Clone)]
pub struct RhSolution {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    /// `μ` at the nodes.
    pub mu: Vec<ComplexMatrix3>,
    /// `μ (w⁺ + w⁻)` at the nodes.
    pub density: Vec<ComplexMatrix3>,
    /// Coefficients of `1/z` and `1/z²` in the expansion of `m` at infinity.
    pub m1: ComplexMatrix3,
    pub m2: ComplexMatrix3,
    pub residual: f64,
    pub iterations: usize,
}

impl RhSolution {
    fn from_density(
        nodes: Vec<Complex64>,
        weights: Vec<Complex64>,
        mu: Vec<ComplexMatrix3>,
        density: Vec<ComplexMatrix3>,
        residual: f64,
        iterations: usize,
    ) -> Self {
        let c = -two_pi_i().inv();
        let mut m1 = ComplexMatrix3::zero();
        let mut m2 = ComplexMatrix3::zero();
        for ((z, w), f) in nodes.iter().zip(&weights).zip(&density) {
            m1 += f.scale(*w);
            m2 += f.scale(*w * z);
        }
        Self { nodes, weights, mu, density, m1: m1.scale(c), m2: m2.scale(c), residual, iterations }
    }

    /// `m(z) = I + (1/2πi) ∫ μ(w⁺ + w⁻)/(s - z) ds`, by plain quadrature; valid
    /// for `z` several node spacings away from the contour.
    pub fn m_at(&self, z: Complex64) -> ComplexMatrix3 {
        let mut acc = ComplexMatrix3::zero();
        for ((s, w), f) in self.nodes.iter().zip(&self.weights).zip(&self.density) {
            acc += f.scale(*w / (s - z));
        }
        ComplexMatrix3::identity() + acc.scale(two_pi_i().inv())
    }
}

/// Settings for the discrete solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-12, restart: 60, max_iter: 600 }
    }
}

/// Solves `μ = I + C_w μ` and integrates the density for `m₁`, `m₂`.
pub fn solve_rh(data: &RhData, cfg: &SolverConfig) -> Result<RhSolution> {
    let sol = match data {
        RhData::Line(p) => solve_line(p, cfg)?,
        RhData::Contour(p) => solve_contour(p)?,
    };
    if !(sol.residual <= cfg.tol.max(SOLVER_TOL)) {
        return Err(Error::Accuracy { what: "RH solver residual".into(), value: sol.residual, tolerance: SOLVER_TOL });
    }
    if !sol.m1.is_finite() {
        return Err(Error::Numerical("non-finite m1".into()));
    }
    Ok(sol)
}

fn solve_line(p: &LineRh, cfg: &SolverConfig) -> Result<RhSolution> {
    let line = &p.line;
    let jump = &p.jump;
    let n = line.len();
    let wm: Vec<ComplexMatrix3> = (0..n).map(|j| jump.w_minus(j)).collect();
    let wp: Vec<ComplexMatrix3> = (0..n).map(|j| jump.w_plus(j)).collect();

    // C_w(ν) for a row-vector function stored component-major.
    let apply_cw = |nu: &[Complex64], out: &mut [Complex64]| {
        let mut f = vec![ZERO; n];
        let mut g = vec![ZERO; n];
        for c in 0..3 {
            for j in 0..n {
                let row = [nu[j], nu[n + j], nu[2 * n + j]];
                f[j] = row[0] * wm[j][(0, c)] + row[1] * wm[j][(1, c)] + row[2] * wm[j][(2, c)];
                g[j] = row[0] * wp[j][(0, c)] + row[1] * wp[j][(1, c)] + row[2] * wp[j][(2, c)];
            }
            let fh = line.spectrum(&f);
            let gh = line.spectrum(&g);
            line.combine(&fh, &gh, &mut out[c * n..(c + 1) * n]);
        }
    };

    let mut mu = vec![ComplexMatrix3::identity(); n];
    let mut worst: f64 = 0.0;
    let mut iterations = 0;
    if !jump.is_trivial() {
        for r in 0..3 {
            let mut e = vec![ZERO; 3 * n];
            for j in 0..n {
                e[r * n + j] = ONE;
            }
            let mut b = vec![ZERO; 3 * n];
            apply_cw(&e, &mut b);
            let mut tmp = vec![ZERO; 3 * n];
            let out = gmres(
                |x, y| {
                    apply_cw(x, &mut tmp);
                    for i in 0..y.len() {
                        y[i] = x[i] - tmp[i];
                    }
                },
                &b,
                cfg.tol,
                cfg.restart,
                cfg.max_iter,
            )?;
            worst = worst.max(out.residual);
            iterations += out.iterations;
            for j in 0..n {
                for c in 0..3 {
                    mu[j][(r, c)] += out.x[c * n + j];
                }
            }
        }
    }
    let density: Vec<ComplexMatrix3> = (0..n).map(|j| mu[j] * (wm[j] + wp[j])).collect();
    let nodes = line.nodes.iter().map(|k| Complex64::new(*k, 0.0)).collect();
    let weights = line.weights.iter().map(|w| Complex64::new(*w, 0.0)).collect();
    Ok(RhSolution::from_density(nodes, weights, mu, density, worst, iterations))
}

/// Rank-revealing factorisation `w = P Q`, `P` 3×r, `Q` r×3, by SVD.
fn low_rank(w: &ComplexMatrix3, floor: f64) -> (Vec<[Complex64; 3]>, Vec<[Complex64; 3]>) {
    let m = nalgebra::Matrix3::from_fn(|i, j| w[(i, j)]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut cols = Vec::new();
    let mut rows = Vec::new();
    for r in 0..3 {
        let s = svd.singular_values[r];
        if s > floor {
            cols.push([u[(0, r)] * s, u[(1, r)] * s, u[(2, r)] * s]);
            rows.push([vt[(r, 0)], vt[(r, 1)], vt[(r, 2)]]);
        }
    }
    (cols, rows)
}

fn solve_contour(p: &ContourRh) -> Result<RhSolution> {
    let d = &p.disc;
    let n = d.len();
    let ws: Vec<ComplexMatrix3> = p.jumps.iter().map(|v| *v - ComplexMatrix3::identity()).collect();
    let scale = ws.iter().map(|w| w.max_abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        let mu = vec![ComplexMatrix3::identity(); n];
        let density = vec![ComplexMatrix3::zero(); n];
        return Ok(RhSolution::from_density(d.nodes.clone(), d.weights.clone(), mu, density, 0.0, 0));
    }
    let floor = 1e-15 * scale;
    let factors: Vec<_> = ws.iter().map(|w| low_rank(w, floor)).collect();
    let mut offset = Vec::with_capacity(n + 1);
    offset.push(0);
    for (c, _) in &factors {
        offset.push(offset.last().unwrap() + c.len());
    }
    let size = offset[n];
    let k = d.cauchy_minus_matrix();

    // Unknowns c_i = μ_i P_i; the equation is c_i - Σ_j K_ij c_j Q_j P_i = e P_i.
    let mut a = DMatrix::from_element(size, size, ZERO);
    for i in 0..n {
        let (pi, _) = &factors[i];
        for (ia, pcol) in pi.iter().enumerate() {
            let row = offset[i] + ia;
            a[(row, row)] += ONE;
            for j in 0..n {
                let kij = k[(i, j)];
                if kij == ZERO {
                    continue;
                }
                let (_, qj) = &factors[j];
                for (jb, qrow) in qj.iter().enumerate() {
                    let qp = qrow[0] * pcol[0] + qrow[1] * pcol[1] + qrow[2] * pcol[2];
                    a[(row, offset[j] + jb)] -= kij * qp;
                }
            }
        }
    }
    let mut rhs = DMatrix::from_element(size, 3, ZERO);
    for i in 0..n {
        for (ia, pcol) in factors[i].0.iter().enumerate() {
            for r in 0..3 {
                rhs[(offset[i] + ia, r)] = pcol[r];
            }
        }
    }
    let lu = a.clone().lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical(format!("singular contour system of size {size}")))?;
    let resid = (&a * &sol - &rhs).iter().map(|v| v.norm()).fold(0.0, f64::max)
        / rhs.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let mut density = vec![ComplexMatrix3::zero(); n];
    for i in 0..n {
        let (_, qi) = &factors[i];
        for r in 0..3 {
            let mut f = [ZERO; 3];
            for (ia, qrow) in qi.iter().enumerate() {
                let c = sol[(offset[i] + ia, r)];
                for col in 0..3 {
                    f[col] += c * qrow[col];
                }
            }
            density[i].0[r] = f;
        }
    }
    // μ = I + C₋(μw)
    let mut mu = vec![ComplexMatrix3::identity(); n];
    for i in 0..n {
        for j in 0..n {
            let kij = k[(i, j)];
            if kij != ZERO {
                mu[i] += density[j].scale(kij);
            }
        }
    }
    Ok(RhSolution::from_density(d.nodes.clone(), d.weights.clone(), mu, density, resid, 1))
}

/// `u = 2i (m₁)₁₃`.
pub fn recover_u(sol: &RhSolution) -> Result<Complex64> {
    if !(sol.residual <= SOLVER_TOL) {
        return Err(Error::Accuracy { what: "RH solver residual".into(), value: sol.residual, tolerance: SOLVER_TOL });
    }
    Ok(Complex64::new(0.0, 2.0) * sol.m1[(0, 2)])
}

/// Defects of `m₁ = -m₁†` and `m₁ = -A conj(m₁) A`.
pub fn m1_symmetry_defects(m1: &ComplexMatrix3) -> (f64, f64) {
    ((*m1 + m1.adjoint()).max_abs(), (*m1 + m1.swap_conj()).max_abs())
}

/// JSON form of a reconstruction at one point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhSolutionRecord {
    pub x: f64,
    pub t: f64,
    pub u_re: f64,
    pub u_im: f64,
    pub residual: f64,
    pub m1: ComplexMatrix3,
}

/// Settings for [`reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineConfig {
    pub nodes: usize,
    pub scale: f64,
    pub solver: SolverConfig,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self { nodes: 1024, scale: 3.0, solver: SolverConfig::default() }
    }
}

/// `u(x, t)` from ρ₁ via the real-line problem.
pub fn reconstruct(rho1: &SampledField, x: f64, t: f64, cfg: &LineConfig) -> Result<RhSolutionRecord> {
    let line = RealLine::new(cfg.nodes, cfg.scale)?;
    reconstruct_on(&line, rho1, x, t, &cfg.solver)
}

/// As [`reconstruct`] with a prebuilt grid.
pub fn reconstruct_on(
    line: &RealLine,
    rho1: &SampledField,
    x: f64,
    t: f64,
    solver: &SolverConfig,
) -> Result<RhSolutionRecord> {
    let data = RhData::Line(build_jump_v(x, t, rho1, line)?);
    let sol = solve_rh(&data, solver)?;
    let u = recover_u(&sol)?;
    Ok(RhSolutionRecord { x, t, u_re: u.re, u_im: u.im, residual: sol.residual, m1: sol.m1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dawson's integral by RK4 on D' = 1 - 2xD, D(0) = 0.
    fn dawson(x: f64) -> f64 {
        let steps = 4000;
        let h = x / steps as f64;
        let f = |s: f64, d: f64| 1.0 - 2.0 * s * d;
        let (mut s, mut d) = (0.0, 0.0);
        for _ in 0..steps {
            let k1 = f(s, d);
            let k2 = f(s + h / 2.0, d + h / 2.0 * k1);
            let k3 = f(s + h / 2.0, d + h / 2.0 * k2);
            let k4 = f(s + h, d + h * k3);
            d += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s += h;
        }
        d
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        for p in 0..32 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn cauchy_of_simple_pole() {
        let line = RealLine::new(256, 2.0).unwrap();
        let h: Vec<Complex64> = line.nodes.iter().map(|k| (c(*k, 0.0) - c(0.0, 1.0)).inv()).collect();
        let plus = cauchy_boundary(&line, &h, Side::Plus).unwrap();
        let minus = cauchy_boundary(&line, &h, Side::Minus).unwrap();
        for j in 0..line.len() {
            assert!(plus[j].norm() < 1e-13);
            assert!((minus[j] + h[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn cauchy_of_gaussian_matches_faddeeva() {
        // C₊ e^{-k²} = w(k)/2 = e^{-k²}/2 + i D(k)/√π.
        let line = RealLine::new(512, 3.0).unwrap();
        let h: Vec<Complex64> = line.nodes.iter().map(|k| c((-k * k).exp(), 0.0)).collect();
        let plus = cauchy_boundary(&line, &h, Side::Plus).unwrap();
        for (j, &k) in line.nodes.iter().enumerate() {
            if k.abs() > 6.0 {
                continue;
            }
            let exact = c(0.5 * (-k * k).exp(), dawson(k) / PI.sqrt());
            assert!((plus[j] - exact).norm() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn non_decaying_density_is_rejected() {
        let line = RealLine::new(128, 1.0).unwrap();
        let h = vec![ONE; 128];
        assert!(cauchy_boundary(&line, &h, Side::Plus).is_err());
        let zero = vec![ZERO; 128];
        assert!(cauchy_boundary(&line, &zero, Side::Minus).unwrap().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn gmres_solves_small_system() {
        let a = [[c(4.0, 1.0), c(1.0, 0.0), ZERO], [c(0.5, -1.0), c(3.0, 0.0), c(1.0, 1.0)], [ZERO, c(2.0, 0.0), c(5.0, -2.0)]];
        let xs = [c(1.0, 2.0), c(-1.0, 0.5), c(0.3, -0.7)];
        let b: Vec<Complex64> = (0..3).map(|i| (0..3).map(|j| a[i][j] * xs[j]).sum()).collect();
        let out = gmres(
            |x, y| {
                for i in 0..3 {
                    y[i] = (0..3).map(|j| a[i][j] * x[j]).sum();
                }
            },
            &b,
            1e-14,
            2,
            50,
        )
        .unwrap();
        for i in 0..3 {
            assert!((out.x[i] - xs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn jump_structure() {
        let g = UniformGrid::symmetric(2.0, 5).unwrap();
        let s = c(0.3, -0.4);
        let mut vals = vec![ZERO; 5];
        vals[2] = s;
        let rho = SampledField::new(g, vals).unwrap();
        let line = RealLine::new(64, 1.0).unwrap();
        let data = build_jump_v(0.0, 0.0, &rho, &line).unwrap();
        // node nearest to 0
        let j = line.nodes.iter().enumerate().min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap()).unwrap().0;
        let mut probe = data.jump.clone();
        probe.rho1[j] = s;
        probe.rho2[j] = s.conj();
        probe.phase[j] = ONE;
        let v = probe.v(j);
        assert!((v[(2, 2)] - (1.0 + 2.0 * s.norm_sqr())).norm() < 1e-15);
        assert!((v - v.adjoint()).max_abs() < 1e-15);
        let zero_rho = SampledField::zeros(g);
        let triv = build_jump_v(1.0, 0.5, &zero_rho, &line).unwrap();
        for j in 0..line.len() {
            assert_eq!(triv.jump.v(j), ComplexMatrix3::identity());
        }
    }

    #[test]
    fn trivial_jump_gives_identity() {
        let g = UniformGrid::symmetric(2.0, 5).unwrap();
        let line = RealLine::new(64, 1.0).unwrap();
        let data = RhData::Line(build_jump_v(0.3, 0.0, &SampledField::zeros(g), &line).unwrap());
        let sol = solve_rh(&data, &SolverConfig::default()).unwrap();
        assert_eq!(sol.m1, ComplexMatrix3::zero());
        assert_eq!(recover_u(&sol).unwrap(), ZERO);
    }

    #[test]
    fn oscillation_budget_refuses_large_t() {
        let g = UniformGrid::symmetric(4.0, 81).unwrap();
        let rho = SampledField::from_fn(g, |k| c(0.1 * (-k * k).exp(), 0.0));
        let line = RealLine::new(1024, 3.0).unwrap();
        assert!(build_jump_v(0.0, 0.0, &rho, &line).is_ok());
        assert!(matches!(build_jump_v(0.0, 1e3, &rho, &line), Err(Error::OscillationBudget { .. })));
    }

    #[test]
    fn product_integration_on_a_segment() {
        // C₋ of h(z) = 1/(z - i) restricted to a segment vs the closed form
        // (1/2πi)[h(z) log((b-z)/(a-z)) - h(i) ...]: use a polynomial density instead.
        let contour = Contour { pieces: vec![Piece::new("seg", c(-1.0, 0.0), c(1.0, 0.0), 3)] };
        let d = contour.discretize().unwrap();
        let h: Vec<Complex64> = d.nodes.iter().map(|z| z * z).collect();
        let got = d.cauchy_minus(&h);
        for (i, z) in d.nodes.iter().enumerate() {
            // ∫_{-1}^{1} s²/(s - x) ds = x² log((1-x)/(1+x)) + 2x, minus side adds -iπ x²
            let x = z.re;
            let pv = x * x * ((1.0 - x) / (1.0 + x)).ln() + 2.0 * x;
            let exact = c(pv, -PI * x * x) / two_pi_i();
            assert!((got[i] - exact).norm() < 1e-11, "x = {x}");
        }
    }
}
