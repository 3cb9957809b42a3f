//! Isotropic kernel families and their moment constants.
//!
//! A kernel is a function `k(θ)` of the angular distance `θ ∈ [0, π]`. On the
//! sphere the moment constants are `c_n = 2π ∫₀^π k(η)ⁿ sin η dη`, on the circle
//! `c_n = 2 ∫₀^π k(η)ⁿ dη`. They fix the mean and variance of the smoothed
//! field through `μ_X = μ c₁` and `σ²_X = σ² c₂`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::numerics::{bessel_i0, integrate_graded, GaussLegendre, Grading, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Circle,
    Sphere,
}

impl Domain {
    /// Total measure: 2π for the circle, 4π for the sphere.
    pub fn measure(self) -> f64 {
        match self {
            Domain::Circle => 2.0 * PI,
            Domain::Sphere => 4.0 * PI,
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::Circle => "circle",
            Domain::Sphere => "sphere",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `k(θ) = exp(a cos θ)`, precision `a > 0`.
    VonMisesFisher,
    /// `k(θ) = 1(θ ≤ r)`, cut-off `r ∈ (0, π/2]`.
    Uniform,
    /// `k(θ) = (θ/π)^{-q} - 1`.
    Power,
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelFamily::VonMisesFisher => "von_mises_fisher",
            KernelFamily::Uniform => "uniform",
            KernelFamily::Power => "power",
        })
    }
}

/// A validated kernel: family, its single parameter (`a`, `r` or `q`) and
/// the domain it lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    family: KernelFamily,
    parameter: f64,
    domain: Domain,
}

impl Kernel {
    pub fn new(family: KernelFamily, parameter: f64, domain: Domain) -> Result<Self> {
        if !parameter.is_finite() {
            return domain_err(format!("kernel parameter must be finite, got {parameter}"));
        }
        match family {
            KernelFamily::VonMisesFisher if parameter <= 0.0 => {
                return domain_err(format!("von Mises–Fisher precision must be > 0, got {parameter}"));
            }
            KernelFamily::Uniform if !(parameter > 0.0 && parameter <= FRAC_PI_2) => {
                return domain_err(format!("uniform cut-off must lie in (0, π/2], got {parameter}"));
            }
            KernelFamily::Power => {
                let ok = match domain {
                    Domain::Sphere => parameter > 0.0 && parameter < 1.0,
                    Domain::Circle => parameter > -0.5 && parameter < 0.5 && parameter != 0.0,
                };
                if !ok {
                    return domain_err(format!(
                        "power exponent {parameter} outside the admissible range on the {domain}"
                    ));
                }
            }
            _ => {}
        }
        Ok(Kernel {
            family,
            parameter,
            domain,
        })
    }

    pub fn von_mises_fisher(a: f64, domain: Domain) -> Result<Self> {
        Self::new(KernelFamily::VonMisesFisher, a, domain)
    }

    pub fn uniform(r: f64, domain: Domain) -> Result<Self> {
        Self::new(KernelFamily::Uniform, r, domain)
    }

    pub fn power(q: f64, domain: Domain) -> Result<Self> {
        Self::new(KernelFamily::Power, q, domain)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn parameter(&self) -> f64 {
        self.parameter
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Kernel value at angle `theta ∈ [0, π]`; the power kernel is `+∞` at 0.
    pub fn eval(&self, theta: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&theta) {
            return domain_err(format!("angle {theta} outside [0, π]"));
        }
        Ok(self.value(theta))
    }

    #[inline]
    pub(crate) fn value(&self, theta: f64) -> f64 {
        match self.family {
            KernelFamily::VonMisesFisher => (self.parameter * theta.cos()).exp(),
            KernelFamily::Uniform => {
                if theta <= self.parameter {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Power => (theta / PI).powf(-self.parameter) - 1.0,
        }
    }
}

/// Kernel value at `theta`; see [`Kernel::eval`].
pub fn eval_kernel(kernel: &Kernel, theta: f64) -> Result<f64> {
    kernel.eval(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMethod {
    ClosedForm,
    /// `c₂` from its Maclaurin series, `c₁` by quadrature (sphere power kernel).
    Series,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub c1: f64,
    pub c2: f64,
    pub method: ConstantsMethod,
}

/// Moment constants `c₁`, `c₂`, in closed form where one exists.
pub fn kernel_constants(kernel: &Kernel, quad: &QuadratureSpec) -> Result<KernelConstants> {
    let a = kernel.parameter;
    let closed = |c1: f64, c2: f64| -> Result<KernelConstants> {
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(Error::Numeric(format!(
                "moment constants overflow for {} with parameter {a}",
                kernel.family
            )));
        }
        Ok(KernelConstants {
            c1,
            c2,
            method: ConstantsMethod::ClosedForm,
        })
    };
    match (kernel.domain, kernel.family) {
        (Domain::Circle, KernelFamily::VonMisesFisher) => {
            closed(2.0 * PI * bessel_i0(a), 2.0 * PI * bessel_i0(2.0 * a))
        }
        (Domain::Circle, KernelFamily::Uniform) => closed(2.0 * a, 2.0 * a),
        (Domain::Circle, KernelFamily::Power) => closed(
            2.0 * PI * a / (1.0 - a),
            4.0 * PI * a * a / (1.0 - 3.0 * a + 2.0 * a * a),
        ),
        (Domain::Sphere, KernelFamily::VonMisesFisher) => closed(
            4.0 * PI * a.sinh() / a,
            2.0 * PI * (2.0 * a).sinh() / a,
        ),
        (Domain::Sphere, KernelFamily::Uniform) => {
            let cap = 2.0 * PI * (1.0 - a.cos());
            closed(cap, cap)
        }
        (Domain::Sphere, KernelFamily::Power) => {
            let c1 = moment_by_quadrature(kernel, 1, quad)?;
            let c2 = power_c2_series(a)?;
            Ok(KernelConstants {
                c1,
                c2,
                method: ConstantsMethod::Series,
            })
        }
    }
}

/// Both constants by direct quadrature of the defining integrals.
pub fn constants_by_quadrature(kernel: &Kernel, quad: &QuadratureSpec) -> Result<KernelConstants> {
    Ok(KernelConstants {
        c1: moment_by_quadrature(kernel, 1, quad)?,
        c2: moment_by_quadrature(kernel, 2, quad)?,
        method: ConstantsMethod::Quadrature,
    })
}

/// `∫ k(∠(v, u))ⁿ dv` over the kernel's domain.
pub fn moment_by_quadrature(kernel: &Kernel, n: i32, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    let rule = GaussLegendre::new(quad.node_count_outer);
    let sphere = kernel.domain == Domain::Sphere;
    let mut f = |eta: f64| {
        let k = kernel.value(eta).powi(n);
        if sphere {
            k * eta.sin()
        } else {
            k
        }
    };
    let total = match kernel.family {
        KernelFamily::Uniform => rule.integrate(0.0, kernel.parameter, &mut f),
        KernelFamily::VonMisesFisher => {
            // e^{a cos η} concentrates within ~1/√a of the origin
            let panels = (4.0 * kernel.parameter.sqrt()).ceil().max(4.0) as usize;
            let width = PI / panels as f64;
            (0..panels)
                .map(|i| rule.integrate(i as f64 * width, (i + 1) as f64 * width, &mut f))
                .sum()
        }
        KernelFamily::Power => {
            let q = kernel.parameter * n as f64;
            let exponent = if sphere { q - 1.0 } else { q };
            integrate_graded(
                &rule,
                0.0,
                PI,
                Grading::Toward { exponent },
                Grading::None,
                &mut f,
            )
        }
    };
    let scale = if sphere { 2.0 * PI } else { 2.0 };
    let value = scale * total;
    if !value.is_finite() {
        return Err(Error::Integration(format!(
            "moment {n} of {} kernel is not finite",
            kernel.family
        )));
    }
    Ok(value)
}

const SERIES_MAX_TERMS: usize = 500;
const SERIES_REL_TOL: f64 = 1e-14;

/// `c₂` of the sphere power kernel from the Maclaurin expansion of `sin λ`,
/// integrated termwise:
/// `c₂ = Σ_j (-1)^j π^{2j+3}/(2j+1)! · q² / (2 (j+1)(j+1-q/2)(j+1-q))`.
pub fn power_c2_series(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return domain_err(format!("power exponent must lie in (0, 1), got {q}"));
    }
    // π^{2j+3} / (2j+1)!
    let mut ratio = PI.powi(3);
    let mut sum = 0.0;
    for j in 0..SERIES_MAX_TERMS {
        let jf = j as f64;
        let denom = 2.0 * (jf + 1.0) * (jf + 1.0 - 0.5 * q) * (jf + 1.0 - q);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * ratio * q * q / denom;
        sum += term;
        if j > 2 && term.abs() < SERIES_REL_TOL * sum.abs() {
            return Ok(sum);
        }
        ratio *= PI * PI / ((2.0 * jf + 2.0) * (2.0 * jf + 3.0));
    }
    Err(Error::Numeric(format!(
        "c2 series did not converge within {SERIES_MAX_TERMS} terms for q = {q}"
    )))
}
