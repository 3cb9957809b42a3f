//! Fractal index, the local constant `b` in `1 - C(θ) ~ b θ^α`, and the
//! Hausdorff dimension of the particle surface.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationCurve;
use crate::error::{domain_err, Error, Result};
use crate::kernels::{power_c2_series, Domain, Kernel, KernelFamily};
use crate::numerics::{fit_loglog, integrate_graded, log_gamma, log_spaced, GaussLegendre, Grading, LogLogFit, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    ClosedForm,
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalProfile {
    /// Fitted values are reported as fitted and may leave `(0, 2]` slightly.
    pub alpha: f64,
    pub b: Option<f64>,
    pub source: ProfileSource,
    pub domain: Domain,
    /// Computed from `alpha` clamped to `(0, 2]`.
    pub hausdorff_dim: f64,
    pub fit: Option<LogLogFit>,
}

/// Smallest number of small-angle points accepted by [`fit_fractal_index`].
pub const MIN_CURVE_POINTS: usize = 8;
/// Largest angle used by [`fit_fractal_index`].
pub const MAX_FIT_ANGLE: f64 = 0.2;

/// 16 log-spaced angles in `[1e-3, 5e-2]`.
pub fn default_fit_thetas() -> Vec<f64> {
    log_spaced(1e-3, 5e-2, 16)
}

/// `3 - α/2` on the sphere, `2 - α/2` on the circle.
pub fn hausdorff_dimension(alpha: f64, domain: Domain) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return domain_err(format!("fractal index must lie in (0, 2], got {alpha}"));
    }
    Ok(match domain {
        Domain::Sphere => 3.0 - 0.5 * alpha,
        Domain::Circle => 2.0 - 0.5 * alpha,
    })
}

/// Theoretical fractal index; `b` is known only for the sphere power kernel.
pub fn fractal_index_closed(kernel: &Kernel) -> FractalProfile {
    let q = kernel.parameter();
    let (alpha, b) = match (kernel.domain(), kernel.family()) {
        (_, KernelFamily::VonMisesFisher) => (2.0, None),
        (_, KernelFamily::Uniform) => (1.0, None),
        // bq_closed cannot fail on a validated sphere power kernel
        (Domain::Sphere, KernelFamily::Power) => (2.0 - 2.0 * q, bq_closed(q).ok()),
        (Domain::Circle, KernelFamily::Power) => (1.0 - 2.0 * q, None),
    };
    let hausdorff_dim = hausdorff_dimension(alpha, kernel.domain()).expect("closed-form index lies in (0, 2]");
    FractalProfile {
        alpha,
        b,
        source: ProfileSource::ClosedForm,
        domain: kernel.domain(),
        hausdorff_dim,
        fit: None,
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return domain_err(format!("power exponent must lie in (0, 1), got {q}"));
    }
    Ok(())
}

/// `b_q = π^{2q+1} Γ(1-q/2)² Γ(q) / (c₂ (1-q)² Γ(q/2)² Γ(1-q))`.
pub fn bq_closed(q: f64) -> Result<f64> {
    check_q(q)?;
    let c2 = power_c2_series(q)?;
    let log_gammas = 2.0 * log_gamma(1.0 - 0.5 * q)? + log_gamma(q)? - 2.0 * log_gamma(0.5 * q)? - log_gamma(1.0 - q)?;
    Ok(PI.powf(2.0 * q + 1.0) / (c2 * (1.0 - q).powi(2)) * log_gammas.exp())
}

/// Where the numeric outer integral hands over to the analytic tail.
const TAIL_START: f64 = 4.0;
const TAIL_MAX_TERMS: usize = 200;
const SCALE_FLOOR: f64 = 1e-13;

/// `b_q = (2π^{2q}/c₂) ∫₀^∞ x^{1-q} ∫₀^π (x^{-q} - (x² + 1 - 2x cos φ)^{-q/2}) dφ dx`
/// by graded quadrature on `[0, 4]` plus the tail beyond 4 summed from the
/// Gegenbauer expansion of the inner integrand, which converges there.
pub fn bq_numeric(q: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_q(q)?;
    quad.validate()?;
    let outer = GaussLegendre::new(quad.node_count_outer);
    let inner = GaussLegendre::new(quad.node_count_inner);
    let mut g = |x: f64| -> f64 {
        let head = x.powf(-q);
        let d = (x - 1.0) * (x - 1.0);
        let mut f = |phi: f64| {
            let s = (0.5 * phi).sin();
            head - (d + 4.0 * x * s * s).powf(-0.5 * q)
        };
        // the second term varies on the φ-scale |x - 1|/√x
        let w = (x - 1.0).abs() / x.sqrt();
        let inner_integral = if w >= 0.5 * PI {
            inner.integrate(0.0, PI, &mut f)
        } else {
            // a genuine φ^{-q} singularity only once the scale has collapsed
            let mut acc = if w < SCALE_FLOOR {
                inner.integrate_singular(0.0, SCALE_FLOOR, true, q, &mut f)
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
        };
        x.powf(1.0 - q) * inner_integral
    };
    let cusp = Grading::Toward { exponent: q - 1.0 };
    let head = integrate_graded(&outer, 0.0, 0.5, Grading::Toward { exponent: 2.0 * q - 1.0 }, Grading::None, &mut g)
        + integrate_graded(&outer, 0.5, 1.0, Grading::None, cusp, &mut g)
        + integrate_graded(&outer, 1.0, 2.0, cusp, Grading::None, &mut g)
        + integrate_graded(&outer, 2.0, TAIL_START, Grading::None, Grading::None, &mut g);
    let total = head + bq_tail(q, TAIL_START)?;
    let b = 2.0 * PI.powf(2.0 * q) / power_c2_series(q)? * total;
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Numeric(format!("b_q integral gave {b} for q = {q}")));
    }
    Ok(b)
}

/// `∫_X^∞ x^{1-q} f(x) dx = -π Σ_{m≥1} ((q/2)_m / m!)² X^{2-2q-2m} / (2m + 2q - 2)`.
fn bq_tail(q: f64, x: f64) -> Result<f64> {
    let lambda = 0.5 * q;
    let mut coeff = 1.0; // (λ)_m / m!
    let mut power = x.powf(2.0 - 2.0 * q);
    let x2 = x * x;
    let mut sum = 0.0;
    for m in 1..=TAIL_MAX_TERMS {
        let mf = m as f64;
        coeff *= (lambda + mf - 1.0) / mf;
        power /= x2;
        let term = coeff * coeff * power / (2.0 * mf + 2.0 * q - 2.0);
        sum += term;
        if term < 1e-17 * sum {
            return Ok(-PI * sum);
        }
    }
    Err(Error::Numeric(format!("b_q tail series did not converge for q = {q}")))
}

/// Fits `ln(1 - C(θ)) = α ln θ + ln b` over the curve points with
/// `0 < θ ≤ 0.2`.
pub fn fit_fractal_index(curve: &CorrelationCurve) -> Result<FractalProfile> {
    let mut points = Vec::new();
    for (&t, &c) in curve.thetas.iter().zip(&curve.values) {
        if t > 0.0 && t <= MAX_FIT_ANGLE {
            let d = 1.0 - c;
            if !(d > 0.0) {
                return Err(Error::Fit(format!("1 - C(θ) = {d} is not positive at θ = {t}")));
            }
            points.push((t, d));
        }
    }
    if points.len() < MIN_CURVE_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_CURVE_POINTS} points in (0, {MAX_FIT_ANGLE}], got {}",
            points.len()
        )));
    }
    profile_from_fit(fit_loglog(&points)?, curve.kernel.domain())
}

/// Turns a log-log fit of `1 - C` (or of a normalised variogram) into a profile.
pub fn profile_from_fit(fit: LogLogFit, domain: Domain) -> Result<FractalProfile> {
    let alpha = fit.slope;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Fit(format!("fitted fractal index {alpha} is not positive")));
    }
    Ok(FractalProfile {
        alpha,
        b: Some(fit.intercept.exp()),
        source: ProfileSource::Fitted,
        domain,
        hausdorff_dim: hausdorff_dimension(alpha.min(2.0), domain)?,
        fit: Some(fit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{sample_curve, CorrelationMethod};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn closed_profiles() {
        let p = fractal_index_closed(&Kernel::power(0.25, Domain::Sphere).unwrap());
        assert_eq!(p.alpha, 1.5);
        assert_eq!(p.hausdorff_dim, 2.25);
        assert!(p.b.unwrap() > 0.0);
        let v = fractal_index_closed(&Kernel::von_mises_fisher(7.0, Domain::Sphere).unwrap());
        assert_eq!((v.alpha, v.hausdorff_dim, v.b), (2.0, 2.0, None));
        let u = fractal_index_closed(&Kernel::uniform(0.4, Domain::Circle).unwrap());
        assert_eq!((u.alpha, u.hausdorff_dim), (1.0, 1.5));
    }

    #[test]
    fn dimension_map() {
        assert_eq!(hausdorff_dimension(2.0, Domain::Sphere).unwrap(), 2.0);
        assert_eq!(hausdorff_dimension(1.0, Domain::Sphere).unwrap(), 2.5);
        assert_eq!(hausdorff_dimension(1.5, Domain::Circle).unwrap(), 1.25);
        assert!(hausdorff_dimension(0.0, Domain::Sphere).is_err());
        assert!(hausdorff_dimension(2.1, Domain::Circle).is_err());
    }

    #[test]
    fn bq_closed_at_half() {
        // q = 1/2: 4π² Γ(3/4)² / (Γ(1/4)² c₂), with Γ(1/2)²/Γ(1/2) = √π cancelling
        let g34 = log_gamma(0.75).unwrap().exp();
        let g14 = log_gamma(0.25).unwrap().exp();
        let want = 4.0 * PI * PI * g34 * g34 / (g14 * g14 * power_c2_series(0.5).unwrap());
        let got = bq_closed(0.5).unwrap();
        assert!((got - want).abs() < 1e-13 * want);
        assert!(bq_closed(0.0).is_err() && bq_closed(1.0).is_err());
    }

    #[test]
    fn bq_numeric_matches_closed() {
        for q in [0.1, 0.5, 0.9] {
            let a = bq_closed(q).unwrap();
            let b = bq_numeric(q, &QuadratureSpec::default()).unwrap();
            assert!((a - b).abs() < 1e-6 * a, "q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn tail_matches_reference() {
        // ∫_4^∞ x^{1/2} ∫₀^π (x^{-1/2} - (x² + 1 - 2x cos φ)^{-1/4}) dφ dx,
        // evaluated independently with 20-digit adaptive quadrature
        let reference = -0.049_495_542_471_620_76;
        let series = bq_tail(0.5, 4.0).unwrap();
        assert!((series - reference).abs() < 1e-7 * reference.abs(), "{series}");
    }

    #[test]
    fn fit_exact_linear_curve() {
        let k = Kernel::uniform(FRAC_PI_2, Domain::Sphere).unwrap();
        let thetas = default_fit_thetas();
        let curve = CorrelationCurve {
            values: thetas.iter().map(|t| 1.0 - t / PI).collect(),
            thetas,
            kernel: k,
            method: CorrelationMethod::ClosedForm,
        };
        let p = fit_fractal_index(&curve).unwrap();
        assert!((p.alpha - 1.0).abs() < 1e-6);
        assert!((p.b.unwrap() - 1.0 / PI).abs() < 1e-6);
        assert!((p.hausdorff_dim - 2.5).abs() < 1e-6);
    }

    #[test]
    fn fit_power_kernel_curve() {
        let k = Kernel::power(0.5, Domain::Sphere).unwrap();
        let curve = sample_curve(&k, &default_fit_thetas(), &QuadratureSpec::default()).unwrap();
        let p = fit_fractal_index(&curve).unwrap();
        assert!((p.alpha - 1.0).abs() < 0.1, "{p:?}");
        let b = bq_closed(0.5).unwrap();
        assert!((p.b.unwrap() - b).abs() < 0.2 * b);
    }

    #[test]
    fn fit_rejects_bad_curves() {
        let k = Kernel::uniform(1.0, Domain::Sphere).unwrap();
        let thetas = default_fit_thetas();
        let mut values: Vec<f64> = thetas.iter().map(|t| 1.0 - t).collect();
        values[3] = 1.0 + 1e-9;
        let curve = CorrelationCurve { thetas: thetas.clone(), values, kernel: k, method: CorrelationMethod::Quadrature };
        assert!(matches!(fit_fractal_index(&curve), Err(Error::Fit(_))));
        let short = CorrelationCurve { thetas: thetas[..5].to_vec(), values: vec![0.5; 5], kernel: k, method: CorrelationMethod::Quadrature };
        assert!(fit_fractal_index(&short).is_err());
    }

    proptest! {
        #[test]
        fn bq_positive(q in 0.02f64..0.98) {
            prop_assert!(bq_closed(q).unwrap() > 0.0);
        }

        #[test]
        fn sphere_power_dimension_is_two_plus_q(q1 in 0.01f64..0.98, dq in 0.001f64..0.01) {
            let d1 = fractal_index_closed(&Kernel::power(q1, Domain::Sphere).unwrap()).hausdorff_dim;
            let d2 = fractal_index_closed(&Kernel::power(q1 + dq, Domain::Sphere).unwrap()).hausdorff_dim;
            prop_assert!(d2 > d1);
            prop_assert!((d1 - (2.0 + q1)).abs() < 1e-12);
        }
    }
}
