//! Star-shaped random particles built by kernel smoothing of an independently
//! scattered Gaussian or gamma measure on the circle or the sphere.
//!
//! The radial function of a particle is the random field
//! `X(u) = ∫ k(∠(v, u)) L(dv)`, optionally floored at a truncation level
//! `c > 0`. The crate covers
//!
//! - the kernel families (von Mises–Fisher, uniform cap, power) and their
//!   moment constants `c₁`, `c₂` ([`kernels`]),
//! - closed-form and quadrature evaluation of the isotropic correlation
//!   function ([`correlation`]),
//! - the fractal index, the limiting constant of the power kernel and the
//!   Hausdorff dimension of the particle surface ([`fractal`]),
//! - equal-area partitions of the sphere and circle ([`partition`]),
//! - sampling of the Lévy basis and parameter inversion ([`levy`]),
//! - moving-average simulation of the radial field ([`simulate`]),
//! - triangulation and OBJ/CSV export ([`geometry`]),
//! - empirical variograms and dimension estimates from simulated ensembles
//!   ([`estimate`]),
//! - the celestial body presets ([`presets`]).

// `!(x > 0.0)` style guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod estimate;
pub mod fractal;
pub mod geometry;
pub mod kernels;
pub mod levy;
pub mod numerics;
pub mod partition;
pub mod presets;
pub mod simulate;

pub use error::{Error, Result};
pub use kernels::{Domain, Kernel, KernelFamily};

/// Unit direction on the sphere; circle directions live on the equator `z = 0`.
pub type Direction = [f64; 3];

#[inline]
pub(crate) fn dot(a: &Direction, b: &Direction) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Great-circle distance between two unit vectors, accurate for tiny and
/// near-antipodal separations.
#[inline]
pub fn angle_between(a: &Direction, b: &Direction) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    2.0 * dot(&d, &d).sqrt().atan2(dot(&s, &s).sqrt())
}

/// Unit vector with the given colatitude and longitude.
#[inline]
pub fn direction(colatitude: f64, longitude: f64) -> Direction {
    let (st, ct) = colatitude.sin_cos();
    let (sp, cp) = longitude.sin_cos();
    [st * cp, st * sp, ct]
}
