//! Special functions, Gauss–Legendre quadrature and log-log regression.

mod quadrature;
mod regression;
mod special;

pub use quadrature::{integrate_1d, GaussLegendre, QuadratureSpec};
pub(crate) use quadrature::{integrate_graded, Grading};
pub use regression::{fit_loglog, log_spaced, LogLogFit, MIN_FIT_POINTS};
pub use special::{bessel_i0, bessel_i0_scaled, log_gamma, sinh_ratio};
