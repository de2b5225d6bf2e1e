//! Numerical inverse scattering for the Sasa–Satsuma equation
//!
//! `u_t - u_xxx - 6|u|²u_x - 3u(|u|²)_x = 0`.
//!
//! * [`scattering`]: Jost solutions, scattering matrix and reflection coefficient.
//! * [`rh`]: Cauchy operators and Riemann–Hilbert solvers on the line and on
//!   piecewise straight contours, and reconstruction of `u(x, t)`.
//! * [`painleve`]: the modified Painlevé II transcendent `u'' + yu + 2u|u|² = 0`
//!   through its Riemann–Hilbert problem, plus the model problem that feeds the
//!   long-time asymptotics.
//! * [`pde`]: a Fourier-spectral reference evolver.
//! * [`asympt`]: the leading Painlevé-sector term and its validation against
//!   the evolver.

pub mod algebra;
pub mod asympt;
pub mod error;
pub mod grid;
pub mod io;
pub mod painleve;
pub mod pde;
pub mod rh;
pub mod scattering;

pub use algebra::{ComplexMatrix3, LaxPoint};
pub use error::{Error, Result};
pub use grid::{SampledField, UniformGrid};
pub use num_complex::Complex64;
