//! 3×3 complex matrix algebra and the Lax pair of the Sasa–Satsuma equation.
//!
//! The x-part of the Lax pair is `L = -ikΛ + U(u)` and the t-part is
//! `Z = 4ik³Λ + V(u, u_x, u_xx; k)` with `V = k² V2 + k V1 + V0`.  Both obey
//! `L(k) = -L(k̄)†` and `L(k) = A conj(L(-k̄)) A`, where `A` swaps the first two
//! components.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fd, SampledField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense 3×3 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix3(pub [[Complex64; 3]; 3]);

impl fmt::Debug for ComplexMatrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.0 {
            writeln!(
                f,
                "[{:+.6e}{:+.6e}i, {:+.6e}{:+.6e}i, {:+.6e}{:+.6e}i]",
                row[0].re, row[0].im, row[1].re, row[1].im, row[2].re, row[2].im
            )?;
        }
        Ok(())
    }
}

impl Default for ComplexMatrix3 {
    fn default() -> Self {
        Self::zero()
    }
}

impl ComplexMatrix3 {
    pub const fn zero() -> Self {
        Self([[ZERO; 3]; 3])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]])
    }

    pub fn diag(d: [Complex64; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_real(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = Complex64::new(rows[i][j], 0.0);
            }
        }
        m
    }

    /// `Λ = diag(1, 1, -1)`.
    pub fn lambda() -> Self {
        Self::from_real([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
    }

    /// The swap matrix `A` exchanging the first two components.
    pub fn swap12() -> Self {
        Self::from_real([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        m
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    /// Entry-wise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for v in row.iter_mut() {
                *v = v.conj();
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> Complex64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    pub fn adjugate(&self) -> Self {
        let a = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
        // adj[i][j] = cofactor[j][i]
        Self([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }

    /// Inverse via the adjugate; `None` for a numerically singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        let scale = self.max_abs().powi(3).max(f64::MIN_POSITIVE);
        if !(d.norm() > 1e-300 && d.norm() > 1e-15 * scale) {
            return None;
        }
        Some(self.adjugate().scale(d.inv()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `A conj(M) A`, the swap-conjugation appearing in the symmetry relations.
    pub fn swap_conj(&self) -> Self {
        let a = Self::swap12();
        a * self.conj() * a
    }

    /// Row vector `e_row · self`.
    pub fn row(&self, i: usize) -> [Complex64; 3] {
        self.0[i]
    }

    /// Matrix exponential by scaling and squaring of the Taylor series.
    pub fn exp(&self) -> Self {
        let norm = self.frobenius();
        if norm == 0.0 {
            return Self::identity();
        }
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.scale_re(0.5f64.powi(squarings));
        let mut sum = Self::identity();
        let mut term = Self::identity();
        for n in 1..=30 {
            term = (term * a).scale_re(1.0 / n as f64);
            sum += term;
            if term.max_abs() <= 1e-18 * sum.max_abs() {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }
}

impl Index<(usize, usize)> for ComplexMatrix3 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Add for ComplexMatrix3 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMatrix3 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for ComplexMatrix3 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl SubAssign for ComplexMatrix3 {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
    }
}

impl Neg for ComplexMatrix3 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for ComplexMatrix3 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut c = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Self(c)
    }
}

impl Mul<Complex64> for ComplexMatrix3 {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        self.scale(rhs)
    }
}

/// Row vector times matrix.
pub fn row_mul(v: &[Complex64; 3], m: &ComplexMatrix3) -> [Complex64; 3] {
    let mut out = [ZERO; 3];
    for j in 0..3 {
        out[j] = v[0] * m.0[0][j] + v[1] * m.0[1][j] + v[2] * m.0[2][j];
    }
    out
}

/// Field data at one point of the Lax pair: `u`, its first two x-derivatives
/// and the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxPoint {
    pub u: Complex64,
    pub u_x: Complex64,
    pub u_xx: Complex64,
    pub k: Complex64,
}

/// `U = (0 0 u; 0 0 ū; -ū -u 0)`.
pub fn build_u(u: Complex64) -> ComplexMatrix3 {
    let ub = u.conj();
    ComplexMatrix3([[ZERO, ZERO, u], [ZERO, ZERO, ub], [-ub, -u, ZERO]])
}

/// `V = k² V2 + k V1 + V0` of the time part of the Lax pair.
pub fn build_v(p: &LaxPoint) -> ComplexMatrix3 {
    let u = p.u;
    let ub = u.conj();
    let ux = p.u_x;
    let uxb = ux.conj();
    let m2 = u.norm_sqr();
    let m2c = Complex64::new(m2, 0.0);
    let uu = build_u(u);

    let v2 = uu.scale_re(-4.0);
    let v1 = ComplexMatrix3([
        [m2c, u * u, ux],
        [ub * ub, m2c, uxb],
        [uxb, ux, m2c * -2.0],
    ])
    .scale(Complex64::new(0.0, -2.0));
    let w = u * uxb - ux * ub;
    let v0 = uu.scale_re(4.0 * m2) + build_u(p.u_xx)
        - ComplexMatrix3::diag([w, -w, ZERO]);

    let k = p.k;
    v2.scale(k * k) + v1.scale(k) + v0
}

/// `(L, Z) = (-ikΛ + U, 4ik³Λ + V)`.
pub fn lax_matrices(p: &LaxPoint) -> (ComplexMatrix3, ComplexMatrix3) {
    let lam = ComplexMatrix3::lambda();
    let k = p.k;
    let l = lam.scale(-I * k) + build_u(p.u);
    let z = lam.scale(I * k * k * k * 4.0) + build_v(p);
    (l, z)
}

/// Max-norm of `L_t - Z_x + [L, Z]` over the interior of the grid.
///
/// `before` and `after` are the same field at two times `dt` apart; all
/// quantities are evaluated at the midpoint time with centred second-order
/// differences, so the result is `O(h² + dt²)` for an exact solution.
pub fn zero_curvature_residual(
    before: &SampledField,
    after: &SampledField,
    dt: f64,
    k: Complex64,
) -> Result<f64> {
    if before.grid != after.grid {
        return Err(Error::InvalidInput("the two snapshots live on different grids".into()));
    }
    let n = before.grid.len;
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "zero-curvature check needs at least 8 grid points, got {n}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let h = before.grid.step;
    let order = fd::Order::Second;
    let mid: Vec<Complex64> =
        before.values.iter().zip(&after.values).map(|(a, b)| (a + b) * 0.5).collect();
    let lax_at = |j: usize| LaxPoint {
        u: mid[j],
        u_x: fd::d1(&mid, j, h, order),
        u_xx: fd::d2(&mid, j, h, order),
        k,
    };
    let mut worst: f64 = 0.0;
    for j in 2..n - 2 {
        let u_t = (after.values[j] - before.values[j]) / dt;
        let l_t = build_u(u_t);
        let z_x = (build_v(&lax_at(j + 1)) - build_v(&lax_at(j - 1))).scale_re(0.5 / h);
        let (l, z) = lax_matrices(&lax_at(j));
        let r = l_t - z_x + l.commutator(&z);
        worst = worst.max(r.max_abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn arb_c() -> impl Strategy<Value = Complex64> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn arb_m() -> impl Strategy<Value = ComplexMatrix3> {
        proptest::array::uniform9(arb_c()).prop_map(|e| {
            ComplexMatrix3([[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]])
        })
    }

    #[test]
    fn u_matrix_entries() {
        assert_eq!(build_u(ZERO), ComplexMatrix3::zero());
        let u = build_u(ONE);
        let expect = ComplexMatrix3::from_real([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [-1.0, -1.0, 0.0]]);
        assert_eq!(u, expect);
    }

    #[test]
    fn v_vanishes_for_zero_field() {
        let p = LaxPoint { u: ZERO, u_x: ZERO, u_xx: ZERO, k: c(0.7, -0.2) };
        assert_eq!(build_v(&p), ComplexMatrix3::zero());
    }

    #[test]
    fn v_for_unit_constant_field_at_unit_k() {
        // Hand expansion with u = 1, u_x = u_xx = 0, k = 1:
        // V2 = -4U, V1 = -2i (1 1 0; 1 1 0; 0 0 -2), V0 = 4U.
        let p = LaxPoint { u: ONE, u_x: ZERO, u_xx: ZERO, k: ONE };
        let v = build_v(&p);
        let expect = ComplexMatrix3([
            [c(0.0, -2.0), c(0.0, -2.0), ZERO],
            [c(0.0, -2.0), c(0.0, -2.0), ZERO],
            [ZERO, ZERO, c(0.0, 4.0)],
        ]);
        assert!((v - expect).max_abs() < 1e-15, "{v:?}");
    }

    #[test]
    fn free_lax_matrices() {
        let p = LaxPoint { u: ZERO, u_x: ZERO, u_xx: ZERO, k: ONE };
        let (l, z) = lax_matrices(&p);
        let lam = ComplexMatrix3::lambda();
        assert_eq!(l, lam.scale(-I));
        assert_eq!(z, lam.scale(I * 4.0));
    }

    #[test]
    fn exp_matches_diagonal_and_nilpotent_cases() {
        let d = ComplexMatrix3::diag([c(0.3, 1.0), c(-2.0, 0.5), c(5.0, -7.0)]);
        let e = d.exp();
        for i in 0..3 {
            assert!((e.0[i][i] - d.0[i][i].exp()).norm() < 1e-12 * d.0[i][i].exp().norm());
        }
        let mut n = ComplexMatrix3::zero();
        n.0[0][2] = c(3.0, -1.0);
        n.0[1][2] = c(0.5, 2.0);
        let e = n.exp();
        assert!((e - (ComplexMatrix3::identity() + n)).max_abs() < 1e-15);
    }

    #[test]
    fn zero_curvature_residual_rejects_tiny_grids() {
        let g = UniformGrid::span(0.0, 1.0, 7).unwrap();
        let f = SampledField::zeros(g);
        assert!(zero_curvature_residual(&f, &f, 0.1, ONE).is_err());
        let g = UniformGrid::span(0.0, 1.0, 16).unwrap();
        let f = SampledField::zeros(g);
        assert_eq!(zero_curvature_residual(&f, &f, 0.1, ONE).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn product_inverse_det_identities(a in arb_m(), b in arb_m()) {
            let ab = a * b;
            let lhs = ab.det();
            let rhs = a.det() * b.det();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
            if a.det().norm() > 1e-3 {
                let inv = a.inverse().unwrap();
                let e = (a * inv - ComplexMatrix3::identity()).max_abs();
                prop_assert!(e < 1e-13 / a.det().norm().min(1.0) * 10.0);
            }
            prop_assert!(((a * b).adjoint() - b.adjoint() * a.adjoint()).max_abs() < 1e-13);
        }

        #[test]
        fn u_symmetries(u in arb_c()) {
            let m = build_u(u);
            prop_assert_eq!(m.adjoint(), -m);
            prop_assert_eq!(m.swap_conj(), m);
        }

        #[test]
        fn v_is_anti_hermitian_for_real_k(u in arb_c(), ux in arb_c(), uxx in arb_c(), k in -3.0..3.0f64) {
            let v = build_v(&LaxPoint { u, u_x: ux, u_xx: uxx, k: c(k, 0.0) });
            prop_assert!((v + v.adjoint()).max_abs() < 1e-12);
        }

        #[test]
        fn lax_symmetries(u in arb_c(), ux in arb_c(), uxx in arb_c(), kr in -2.0..2.0f64, ki in -2.0..2.0f64) {
            let k = c(kr, ki);
            let p = LaxPoint { u, u_x: ux, u_xx: uxx, k };
            let (l, z) = lax_matrices(&p);
            let (lb, zb) = lax_matrices(&LaxPoint { k: k.conj(), ..p });
            prop_assert!((l + lb.adjoint()).max_abs() < 1e-12);
            prop_assert!((z + zb.adjoint()).max_abs() < 1e-10);
            let (lm, zm) = lax_matrices(&LaxPoint { k: -k.conj(), ..p });
            prop_assert!((l - lm.swap_conj()).max_abs() < 1e-12);
            prop_assert!((z - zm.swap_conj()).max_abs() < 1e-10);
        }

        #[test]
        fn exp_of_anti_hermitian_is_unitary(a in arb_m()) {
            let h = (a - a.adjoint()).scale_re(2.0);
            let e = h.exp();
            prop_assert!((e * e.adjoint() - ComplexMatrix3::identity()).max_abs() < 1e-13);
            prop_assert!((e.det() - h.trace().exp()).norm() < 1e-12);
        }
    }
}
