//! Uniform one-dimensional grids and complex samples living on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `len` equally spaced points `start, start + step, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !step.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid needs a finite positive step (got start = {start}, step = {step})"
            )));
        }
        if len < 2 {
            return Err(Error::InvalidInput("grid needs at least two points".into()));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering `[lo, hi]` with `len` points, both ends included.
    pub fn span(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 || !(hi > lo) {
            return Err(Error::InvalidInput(format!(
                "cannot span [{lo}, {hi}] with {len} points"
            )));
        }
        Self::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    /// Symmetric grid on `[-half_width, half_width]`; `len` must be odd so 0 is a node.
    pub fn symmetric(half_width: f64, len: usize) -> Result<Self> {
        if len % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "symmetric grid needs an odd node count, got {len}"
            )));
        }
        Self::span(-half_width, half_width, len)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * self.step;
        x >= self.start - tol && x <= self.end() + tol
    }

    /// Index of the node closest to `x` (clamped).
    pub fn nearest(&self, x: f64) -> usize {
        let f = ((x - self.start) / self.step).round();
        f.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// True when node `i` and node `len - 1 - i` are mirror images about 0.
    pub fn is_symmetric(&self) -> bool {
        (self.start + self.end()).abs() <= 1e-12 * self.end().abs().max(1.0)
    }
}

/// Complex samples of a function on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::InvalidInput(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len] }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Local Lagrange interpolation with `order` points (clamped stencil).
    pub fn interpolate_with(&self, x: f64, order: usize) -> Result<Complex64> {
        if !self.grid.contains(x) {
            return Err(Error::Range {
                what: "interpolation abscissa".into(),
                value: x,
                lo: self.grid.start,
                hi: self.grid.end(),
            });
        }
        Ok(lagrange_uniform(&self.grid, &self.values, x, order))
    }

    /// Cubic (4-point) interpolation.
    pub fn interpolate(&self, x: f64) -> Result<Complex64> {
        self.interpolate_with(x, 4)
    }
}

/// Local Lagrange interpolation on a uniform grid; the stencil of `order` nodes
/// is centred on `x` and shifted inwards at the ends.
pub fn lagrange_uniform(grid: &UniformGrid, values: &[Complex64], x: f64, order: usize) -> Complex64 {
    let order = order.clamp(1, grid.len);
    let pos = (x - grid.start) / grid.step;
    let mut first = (pos.floor() as isize) - (order as isize - 1) / 2;
    first = first.clamp(0, (grid.len - order) as isize);
    let first = first as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..order {
        let xi = (first + i) as f64;
        if (pos - xi).abs() < 1e-14 {
            return values[first + i];
        }
        let mut l = 1.0;
        for j in 0..order {
            if j != i {
                let xj = (first + j) as f64;
                l *= (pos - xj) / (xi - xj);
            }
        }
        acc += values[first + i] * l;
    }
    acc
}

/// Centred finite-difference stencils on uniform grids.
pub mod fd {
    use num_complex::Complex64;

    /// Accuracy order of a centred stencil.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Order {
        Second,
        Fourth,
    }

    impl Order {
        /// Half-width of the widest stencil used up to the third derivative.
        pub fn reach(self) -> usize {
            match self {
                Order::Second => 2,
                Order::Fourth => 3,
            }
        }
    }

    pub fn d1(v: &[Complex64], i: usize, h: f64, order: Order) -> Complex64 {
        match order {
            Order::Second => (v[i + 1] - v[i - 1]) / (2.0 * h),
            Order::Fourth => {
                (v[i - 2] - v[i - 1] * 8.0 + v[i + 1] * 8.0 - v[i + 2]) / (12.0 * h)
            }
        }
    }

    pub fn d2(v: &[Complex64], i: usize, h: f64, order: Order) -> Complex64 {
        match order {
            Order::Second => (v[i + 1] - v[i] * 2.0 + v[i - 1]) / (h * h),
            Order::Fourth => {
                (-v[i - 2] + v[i - 1] * 16.0 - v[i] * 30.0 + v[i + 1] * 16.0 - v[i + 2])
                    / (12.0 * h * h)
            }
        }
    }

    pub fn d3(v: &[Complex64], i: usize, h: f64, order: Order) -> Complex64 {
        match order {
            Order::Second => {
                (v[i + 2] - v[i + 1] * 2.0 + v[i - 1] * 2.0 - v[i - 2]) / (2.0 * h * h * h)
            }
            Order::Fourth => {
                (-v[i + 3] + v[i + 2] * 8.0 - v[i + 1] * 13.0 + v[i - 1] * 13.0 - v[i - 2] * 8.0
                    + v[i - 3])
                    / (8.0 * h * h * h)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_grid_contains_zero() {
        let g = UniformGrid::symmetric(12.0, 1025).unwrap();
        assert_eq!(g.point(512), 0.0);
        assert!(g.is_symmetric());
        assert!(UniformGrid::symmetric(1.0, 4).is_err());
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let g = UniformGrid::span(-1.0, 2.0, 31).unwrap();
        let f = |x: f64| Complex64::new(x * x * x - 2.0 * x, 0.5 * x * x);
        let s = SampledField::from_fn(g, f);
        for &x in &[-0.97, 0.013, 1.55, 1.999] {
            assert!((s.interpolate(x).unwrap() - f(x)).norm() < 1e-12);
        }
        assert!(s.interpolate(2.5).is_err());
    }

    #[test]
    fn stencils_differentiate_polynomials() {
        let h = 0.1;
        let v: Vec<Complex64> = (0..9).map(|i| {
            let x = i as f64 * h;
            Complex64::new(x.powi(3), x.powi(2))
        }).collect();
        let x = 4.0 * h;
        for order in [fd::Order::Second, fd::Order::Fourth] {
            // the centred difference of x³ carries the exact error h²
            let bias = if order == fd::Order::Second { h * h } else { 0.0 };
            assert!((fd::d1(&v, 4, h, order) - Complex64::new(3.0 * x * x + bias, 2.0 * x)).norm() < 1e-10);
            assert!((fd::d2(&v, 4, h, order) - Complex64::new(6.0 * x, 2.0)).norm() < 1e-9);
            assert!((fd::d3(&v, 4, h, order) - Complex64::new(6.0, 0.0)).norm() < 1e-8);
        }
    }
}
