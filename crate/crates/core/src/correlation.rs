//! Isotropic correlation `C(θ)` of the smoothed field.
//!
//! The quadrature routes compute the decorrelation `D(θ) = 1 - C(θ)` directly,
//! as an integral of `k(η)·(k(η) - k(∠))`, so that `D` keeps full relative
//! precision at the small angles used for fractal-index fits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::kernels::{power_c2_series, Domain, Kernel, KernelFamily};
use crate::numerics::{bessel_i0_scaled, integrate_graded, sinh_ratio, GaussLegendre, Grading, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub kernel: Kernel,
    pub method: CorrelationMethod,
}

const SCALE_FLOOR: f64 = 1e-13;

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return domain_err(format!("angle {theta} outside [0, π]"));
    }
    Ok(())
}

/// Closed-form `C(θ)`, or `None` for the power kernel which has none.
pub fn corr_closed_form(kernel: &Kernel, theta: f64) -> Result<Option<f64>> {
    check_angle(theta)?;
    let p = kernel.parameter();
    let value = match (kernel.domain(), kernel.family()) {
        (_, KernelFamily::Power) => return Ok(None),
        (Domain::Sphere, KernelFamily::VonMisesFisher) => sphere_vmf(p, theta),
        (Domain::Sphere, KernelFamily::Uniform) => sphere_uniform(p, theta),
        (Domain::Circle, KernelFamily::VonMisesFisher) => {
            // I₀(a s)/I₀(2a) with s = 2 cos(θ/2); a s - 2a = -4a sin²(θ/4)
            let s = 2.0 * (0.5 * theta).cos();
            let q = (0.25 * theta).sin();
            bessel_i0_scaled(p * s) / bessel_i0_scaled(2.0 * p) * (-4.0 * p * q * q).exp()
        }
        (Domain::Circle, KernelFamily::Uniform) => {
            if theta <= 2.0 * p {
                1.0 - theta / (2.0 * p)
            } else {
                0.0
            }
        }
    };
    Ok(Some(value))
}

fn sphere_vmf(a: f64, theta: f64) -> f64 {
    // s = √(2(1 + cos θ)) = 2 cos(θ/2)
    let s = 2.0 * (0.5 * theta).cos();
    if a <= 20.0 {
        return 2.0 * sinh_ratio(a, s) / (2.0 * a).sinh();
    }
    // 2 sinh(a s) / (s sinh 2a) in factored form, overflow-free
    let q = (0.25 * theta).sin();
    let decay = (-4.0 * a * q * q).exp();
    let ratio = if a * s < 1e-8 {
        2.0 * a
    } else {
        -(-2.0 * a * s).exp_m1() / s
    };
    2.0 * decay * ratio / -(-4.0 * a).exp_m1()
}

/// Normalised overlap area of two spherical caps of radius `r` whose centres
/// are `θ` apart.
fn sphere_uniform(r: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 1.0;
    }
    if theta > 2.0 * r {
        return 0.0;
    }
    let (sr, cr) = r.sin_cos();
    let first = ((theta.cos() - cr * cr) / (sr * sr)).clamp(-1.0, 1.0).acos();
    let second = (cr / sr * (0.5 * theta).tan()).clamp(-1.0, 1.0).acos();
    (PI - first - 2.0 * cr * second) / (PI * (1.0 - cr))
}

/// `k` evaluated at the angle whose squared half-chord is `hav = sin²(angle/2)`,
/// with the von Mises–Fisher kernel scaled by `e^{-a}`.
#[inline]
fn kernel_at_hav(kernel: &Kernel, hav: f64) -> f64 {
    let p = kernel.parameter();
    match kernel.family() {
        KernelFamily::VonMisesFisher => (-2.0 * p * hav).exp(),
        KernelFamily::Uniform => {
            let h = (0.5 * p).sin();
            if hav <= h * h {
                1.0
            } else {
                0.0
            }
        }
        KernelFamily::Power => {
            let angle = 2.0 * hav.clamp(0.0, 1.0).sqrt().asin();
            (angle / PI).powf(-p) - 1.0
        }
    }
}

#[inline]
fn kernel_scaled(kernel: &Kernel, angle: f64) -> f64 {
    let h = (0.5 * angle).sin();
    match kernel.family() {
        KernelFamily::VonMisesFisher => kernel_at_hav(kernel, h * h),
        _ => kernel.value(angle),
    }
}

/// `c₂` consistent with [`kernel_scaled`]: multiplied by `e^{-2a}` for vMF.
fn scaled_c2(kernel: &Kernel) -> Result<f64> {
    let p = kernel.parameter();
    Ok(match (kernel.domain(), kernel.family()) {
        (Domain::Sphere, KernelFamily::VonMisesFisher) => PI * -(-4.0 * p).exp_m1() / p,
        (Domain::Circle, KernelFamily::VonMisesFisher) => 2.0 * PI * bessel_i0_scaled(2.0 * p),
        (Domain::Sphere, KernelFamily::Uniform) => 2.0 * PI * (1.0 - p.cos()),
        (Domain::Circle, KernelFamily::Uniform) => 2.0 * p,
        (Domain::Sphere, KernelFamily::Power) => power_c2_series(p)?,
        (Domain::Circle, KernelFamily::Power) => 4.0 * PI * p * p / (1.0 - 3.0 * p + 2.0 * p * p),
    })
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("non-finite {what}")))
    }
}

/// `C(θ)` on the sphere by quadrature of the defining double integral.
pub fn corr_quadrature_sphere(kernel: &Kernel, theta: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(1.0 - decorrelation_sphere(kernel, theta, quad)?)
}

/// `C(θ)` on the circle by quadrature of the convolution integral.
pub fn corr_quadrature_circle(kernel: &Kernel, theta: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(1.0 - decorrelation_circle(kernel, theta, quad)?)
}

/// `1 - C(θ)` by quadrature on the kernel's own domain.
pub fn decorrelation(kernel: &Kernel, theta: f64, quad: &QuadratureSpec) -> Result<f64> {
    match kernel.domain() {
        Domain::Sphere => decorrelation_sphere(kernel, theta, quad),
        Domain::Circle => decorrelation_circle(kernel, theta, quad),
    }
}

fn require_domain(kernel: &Kernel, domain: Domain) -> Result<()> {
    if kernel.domain() != domain {
        return domain_err(format!("expected a kernel on the {domain}, got one on the {}", kernel.domain()));
    }
    Ok(())
}

/// Number of equal panels needed to resolve a vMF bump of width `1/√a`
/// over an interval of length `len`.
fn vmf_panels(a: f64, len: f64) -> usize {
    ((len * a.sqrt() * 2.0 / PI).ceil() as usize).clamp(1, 256)
}

fn integrate_panels<F: FnMut(f64) -> f64>(rule: &GaussLegendre, lo: f64, hi: f64, n: usize, f: &mut F) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|i| rule.integrate(lo + i as f64 * h, lo + (i + 1) as f64 * h, &mut *f))
        .sum()
}

/// Sorted, deduplicated breakpoints in `[lo, hi]` with their gradings.
fn segments(mut points: Vec<(f64, Grading)>, lo: f64, hi: f64) -> Vec<(f64, Grading)> {
    points.retain(|(x, _)| *x >= lo && *x <= hi);
    points.push((lo, Grading::None));
    points.push((hi, Grading::None));
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, Grading)> = Vec::with_capacity(points.len());
    for (x, g) in points {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= 1e-15 * (1.0 + x.abs()) => {
                if g != Grading::None {
                    last.1 = g;
                }
            }
            _ => out.push((x, g)),
        }
    }
    out
}

fn decorrelation_sphere(kernel: &Kernel, theta: f64, quad: &QuadratureSpec) -> Result<f64> {
    require_domain(kernel, Domain::Sphere)?;
    check_angle(theta)?;
    quad.validate()?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let outer = GaussLegendre::new(quad.node_count_outer);
    let inner = GaussLegendre::new(quad.node_count_inner);
    let st = theta.sin();
    let p = kernel.parameter();

    // φ-integral of k(η) - k(∠(θ, η, φ)) over [0, π]
    let mut g = |eta: f64| -> f64 {
        let k_eta = kernel_scaled(kernel, eta);
        let se = eta.sin();
        let half = (0.5 * (theta - eta)).sin();
        let base = half * half;
        let cross = st * se;
        let inner_integral = match kernel.family() {
            KernelFamily::Uniform => {
                // k(∠) = 1 exactly on φ ∈ [0, φ_b]
                let h = (0.5 * p).sin();
                let t = (h * h - base) / cross.max(f64::MIN_POSITIVE);
                let phi_b = if t >= 1.0 {
                    PI
                } else if t <= 0.0 {
                    0.0
                } else {
                    2.0 * t.sqrt().asin()
                };
                k_eta * PI - phi_b
            }
            _ if cross <= 1e-300 => PI * (k_eta - kernel_at_hav(kernel, base)),
            family => {
                let mut f = |phi: f64| {
                    let s = (0.5 * phi).sin();
                    k_eta - kernel_at_hav(kernel, base + cross * s * s)
                };
                let w = match family {
                    KernelFamily::Power => (theta - eta).abs() / cross.sqrt(),
                    _ => 1.0 / (p * cross).sqrt(),
                };
                if w >= 0.5 * PI {
                    inner.integrate(0.0, PI, &mut f)
                } else {
                    // a genuine φ^{-q} singularity only once the scale has collapsed
                    let mut acc = if w < SCALE_FLOOR {
                        inner.integrate_singular(0.0, SCALE_FLOOR, true, p, &mut f)
                    } else {
                        inner.integrate(0.0, w, &mut f)
                    };
                    let w = w.max(SCALE_FLOOR);
                    let mut lo = w;
                    while lo < PI {
                        let hi = (2.0 * lo).min(PI);
                        acc += inner.integrate(lo, hi, &mut f);
                        lo = hi;
                    }
                    acc
                }
            }
        };
        eta.sin() * k_eta * inner_integral
    };

    let total: f64 = match kernel.family() {
        KernelFamily::VonMisesFisher => {
            let bps = segments(vec![(theta, Grading::None)], 0.0, PI);
            bps.windows(2)
                .map(|w| integrate_panels(&outer, w[0].0, w[1].0, vmf_panels(p, w[1].0 - w[0].0), &mut g))
                .sum()
        }
        KernelFamily::Uniform => {
            let kink = Grading::Toward { exponent: -0.5 };
            let pts = [theta - p, theta + p, p - theta, 2.0 * PI - theta - p, PI - theta]
                .into_iter()
                .map(|x| (x, kink))
                .collect();
            let bps = segments(pts, 0.0, p);
            bps.windows(2)
                .map(|w| integrate_graded(&outer, w[0].0, w[1].0, w[0].1, w[1].1, &mut g))
                .sum()
        }
        KernelFamily::Power => {
            let pts = vec![
                (0.0, Grading::Toward { exponent: 2.0 * p - 1.0 }),
                (theta, Grading::Toward { exponent: p - 1.0 }),
                (PI - theta, Grading::Toward { exponent: -0.5 }),
            ];
            let bps = segments(pts, 0.0, PI);
            bps.windows(2)
                .map(|w| integrate_graded(&outer, w[0].0, w[1].0, w[0].1, w[1].1, &mut g))
                .sum()
        }
    };
    finite(2.0 * total / scaled_c2(kernel)?, "sphere decorrelation")
}

/// Circular distance of `x` to the origin.
#[inline]
fn circular(x: f64) -> f64 {
    let y = x.abs() % (2.0 * PI);
    if y > PI {
        2.0 * PI - y
    } else {
        y
    }
}

fn decorrelation_circle(kernel: &Kernel, theta: f64, quad: &QuadratureSpec) -> Result<f64> {
    require_domain(kernel, Domain::Circle)?;
    check_angle(theta)?;
    quad.validate()?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(quad.node_count_outer);
    let p = kernel.parameter();
    // ∫_{-π}^{π} k(|φ|)·(k(|φ|) - k(|φ - θ|)) dφ
    let mut g = |phi: f64| {
        let k0 = kernel_scaled(kernel, phi.abs());
        k0 * (k0 - kernel_scaled(kernel, circular(phi - theta)))
    };
    let wrap = |x: f64| if x > PI { x - 2.0 * PI } else if x < -PI { x + 2.0 * PI } else { x };
    let kink = Grading::Toward { exponent: -0.5 };
    let mut pts = vec![(0.0, kink), (theta, kink), (theta - PI, kink)];
    match kernel.family() {
        KernelFamily::Power => {
            pts[0].1 = Grading::Toward { exponent: (2.0 * p).max(-0.5) };
            pts[1].1 = Grading::Toward { exponent: p.max(-0.5) };
        }
        KernelFamily::Uniform => {
            for x in [p, -p, theta + p, theta - p] {
                pts.push((wrap(x), Grading::None));
            }
            for pt in pts.iter_mut() {
                pt.1 = Grading::None;
            }
        }
        KernelFamily::VonMisesFisher => {
            for pt in pts.iter_mut() {
                pt.1 = Grading::None;
            }
        }
    }
    let bps = segments(pts, -PI, PI);
    let total: f64 = bps
        .windows(2)
        .map(|w| match kernel.family() {
            KernelFamily::VonMisesFisher => {
                integrate_panels(&rule, w[0].0, w[1].0, vmf_panels(p, w[1].0 - w[0].0), &mut g)
            }
            _ => integrate_graded(&rule, w[0].0, w[1].0, w[0].1, w[1].1, &mut g),
        })
        .sum();
    finite(total / scaled_c2(kernel)?, "circle decorrelation")
}

/// `C(θ)` by closed form when one exists, quadrature otherwise.
pub fn correlation(kernel: &Kernel, theta: f64, quad: &QuadratureSpec) -> Result<(f64, CorrelationMethod)> {
    match corr_closed_form(kernel, theta)? {
        Some(c) => Ok((c, CorrelationMethod::ClosedForm)),
        None => Ok((1.0 - decorrelation(kernel, theta, quad)?, CorrelationMethod::Quadrature)),
    }
}

/// Correlation curve on `thetas`, evaluated in parallel.
pub fn sample_curve(kernel: &Kernel, thetas: &[f64], quad: &QuadratureSpec) -> Result<CorrelationCurve> {
    if thetas.is_empty() {
        return domain_err("empty angle list");
    }
    for t in thetas {
        check_angle(*t)?;
    }
    if thetas.windows(2).any(|w| w[1] <= w[0]) {
        return domain_err("angles must be strictly increasing");
    }
    let method = if corr_closed_form(kernel, thetas[0])?.is_some() {
        CorrelationMethod::ClosedForm
    } else {
        CorrelationMethod::Quadrature
    };
    let values = thetas
        .par_iter()
        .map(|&t| correlation(kernel, t, quad).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve {
        thetas: thetas.to_vec(),
        values,
        kernel: *kernel,
        method,
    })
}
