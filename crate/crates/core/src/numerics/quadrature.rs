use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};

/// Node counts and the singular-panel width used by the quadrature routines.
///
/// Node counts are Gauss–Legendre points per panel. The correlation
/// integrals refine their panels geometrically toward singular points, so
/// the per-panel counts stay modest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count_outer: usize,
    pub node_count_inner: usize,
    /// Width of the first panel when an endpoint singularity is declared.
    pub singularity_split: f64,
}

impl QuadratureSpec {
    pub fn new(outer: usize, inner: usize, singularity_split: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            node_count_outer: outer,
            node_count_inner: inner,
            singularity_split,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count_outer < 8 || self.node_count_inner < 8 {
            return domain_err("quadrature node counts must be at least 8");
        }
        if !(self.singularity_split > 0.0 && self.singularity_split <= std::f64::consts::PI) {
            return domain_err("singularity_split must lie in (0, π]");
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            node_count_outer: 24,
            node_count_inner: 24,
            singularity_split: 0.25,
        }
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integral over `[lo, hi]` of an integrand behaving like
    /// `|t - end|^{-exponent}` at one end, after the substitution
    /// `t = end ± h·s^p` that removes the algebraic factor.
    pub fn integrate_singular<F: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        at_lo: bool,
        exponent: f64,
        mut f: F,
    ) -> f64 {
        let p = substitution_power(exponent);
        let h = hi - lo;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let s = 0.5 * (x + 1.0);
            let sp = s.powf(p);
            let jac = h * p * s.powf(p - 1.0);
            let t = if at_lo { lo + h * sp } else { hi - h * sp };
            acc += w * jac * f(t);
        }
        0.5 * acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Power `p` of the map `t = s^p` for an endpoint behaviour `t^{-exponent}`.
///
/// For a genuine singularity (`exponent > 0`) `p = 1/(1-exponent)` makes the
/// transformed integrand bounded; for a bounded non-smooth factor
/// (`exponent < 0`) `p = 2/(1-exponent)` makes it vanish linearly.
fn substitution_power(exponent: f64) -> f64 {
    debug_assert!(exponent < 1.0);
    if exponent > 0.0 {
        1.0 / (1.0 - exponent)
    } else if exponent < 0.0 {
        2.0 / (1.0 - exponent)
    } else {
        1.0
    }
}

/// Composite Gauss–Legendre integral of `f` over `[lo, hi]`.
///
/// Without a singularity a single panel with `node_count_outer` nodes is
/// used. With `singularity = Some(q)` the integrand may behave like
/// `(t - lo)^{-q}` with `q < 1`; the first panel `[lo, lo + split]` is then
/// integrated after the substitution `t = lo + split·s^{1/(1-q)}`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
    singularity: Option<f64>,
) -> Result<f64> {
    spec.validate()?;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return domain_err(format!("invalid integration interval [{lo}, {hi}]"));
    }
    if let Some(q) = singularity {
        if !(q < 1.0) {
            return domain_err(format!("endpoint exponent {q} is not integrable"));
        }
    }
    let rule = GaussLegendre::new(spec.node_count_outer);
    let mut bad = None;
    let mut checked = |t: f64| {
        let v = f(t);
        if !v.is_finite() && bad.is_none() {
            bad = Some(t);
        }
        v
    };
    let total = match singularity {
        None => rule.integrate(lo, hi, &mut checked),
        Some(q) => {
            let split = (lo + spec.singularity_split).min(hi);
            let first = rule.integrate_singular(lo, split, true, q, &mut checked);
            let rest = if split < hi {
                rule.integrate(split, hi, &mut checked)
            } else {
                0.0
            };
            first + rest
        }
    };
    if let Some(t) = bad {
        return Err(Error::Integration(format!("non-finite integrand at t = {t}")));
    }
    Ok(total)
}

/// Endpoint refinement for [`integrate_graded`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Grading {
    None,
    /// Panels shrink geometrically toward the end; the innermost panel uses
    /// the substitution for an `|t - end|^{-exponent}` behaviour.
    Toward { exponent: f64 },
}

const GRADING_RATIO: f64 = 0.2;
const GRADING_LEVELS: usize = 14;

/// Composite integral with geometric refinement toward flagged endpoints.
pub(crate) fn integrate_graded<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    lo: f64,
    hi: f64,
    at_lo: Grading,
    at_hi: Grading,
    f: &mut F,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    match (at_lo, at_hi) {
        (Grading::None, Grading::None) => rule.integrate(lo, hi, &mut *f),
        (Grading::Toward { .. }, Grading::Toward { .. }) => {
            let mid = 0.5 * (lo + hi);
            integrate_graded(rule, lo, mid, at_lo, Grading::None, f)
                + integrate_graded(rule, mid, hi, Grading::None, at_hi, f)
        }
        (Grading::Toward { exponent }, Grading::None) => graded_one_side(rule, lo, hi, true, exponent, f),
        (Grading::None, Grading::Toward { exponent }) => graded_one_side(rule, lo, hi, false, exponent, f),
    }
}

fn graded_one_side<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    lo: f64,
    hi: f64,
    at_lo: bool,
    exponent: f64,
    f: &mut F,
) -> f64 {
    let h = hi - lo;
    let mut acc = 0.0;
    let mut outer = 1.0;
    for _ in 0..GRADING_LEVELS {
        let inner = outer * GRADING_RATIO;
        acc += if at_lo {
            rule.integrate(lo + h * inner, lo + h * outer, &mut *f)
        } else {
            rule.integrate(hi - h * outer, hi - h * inner, &mut *f)
        };
        outer = inner;
    }
    acc + if at_lo {
        rule.integrate_singular(lo, lo + h * outer, true, exponent, &mut *f)
    } else {
        rule.integrate_singular(hi - h * outer, hi, false, exponent, &mut *f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        // degree 19 is exact
        let got = rule.integrate(0.0, 1.0, |x| x.powi(19));
        assert!((got - 1.0 / 20.0).abs() < 1e-15);
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rules_are_accurate() {
        for n in [64, 256, 512] {
            let rule = GaussLegendre::new(n);
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "n = {n}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn sine_over_half_period() {
        let spec = QuadratureSpec::new(64, 64, 0.25).unwrap();
        let got = integrate_1d(f64::sin, 0.0, PI, &spec, None).unwrap();
        assert!((got - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_root_singularity() {
        let spec = QuadratureSpec::default();
        let got = integrate_1d(|t| t.powf(-0.5), 0.0, 1.0, &spec, Some(0.5)).unwrap();
        assert!((got - 2.0).abs() < 1e-8, "{got}");
    }

    #[test]
    fn power_kernel_mass_on_circle() {
        // ∫_0^π ((t/π)^{-1/2} - 1) dt = 2π - π
        let spec = QuadratureSpec::default();
        let got = integrate_1d(|t| (t / PI).powf(-0.5) - 1.0, 0.0, PI, &spec, Some(0.5)).unwrap();
        assert!((got - PI).abs() < 1e-8, "{got}");
    }

    #[test]
    fn nonfinite_sample_is_an_error() {
        let spec = QuadratureSpec::default();
        let err = integrate_1d(|t| if t > 0.5 { f64::NAN } else { t }, 0.0, 1.0, &spec, None);
        assert!(matches!(err, Err(Error::Integration(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(4, 32, 0.1).is_err());
        assert!(QuadratureSpec::new(32, 32, 0.0).is_err());
        assert!(QuadratureSpec::new(32, 32, 4.0).is_err());
        assert!(QuadratureSpec::new(8, 8, PI).is_ok());
    }

    #[test]
    fn graded_handles_both_ends() {
        let rule = GaussLegendre::new(20);
        // t^{-0.7} (1-t)^{-0.4} on [0, 1] = B(0.3, 0.6)
        let mut f = |t: f64| t.powf(-0.7) * (1.0 - t).powf(-0.4);
        let got = integrate_graded(
            &rule,
            0.0,
            1.0,
            Grading::Toward { exponent: 0.7 },
            Grading::Toward { exponent: 0.4 },
            &mut f,
        );
        // B(0.3, 0.6) = Γ(0.3)Γ(0.6)/Γ(0.9)
        let lg = |x| crate::numerics::log_gamma(x).unwrap();
        let beta = (lg(0.3) + lg(0.6) - lg(0.9)).exp();
        assert!((got - beta).abs() < 1e-10 * beta, "{got} vs {beta}");
    }

    proptest! {
        #[test]
        fn integrate_1d_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.5f64..4.0) {
            let spec = QuadratureSpec::new(32, 32, 0.25).unwrap();
            let f = |t: f64| (w * t).cos();
            let g = |t: f64| (t * t + 1.0).ln();
            let lhs = integrate_1d(|t| a * f(t) + b * g(t), 0.0, 2.0, &spec, None).unwrap();
            let rhs = a * integrate_1d(f, 0.0, 2.0, &spec, None).unwrap()
                + b * integrate_1d(g, 0.0, 2.0, &spec, None).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
