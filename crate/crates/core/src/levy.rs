//! Independently scattered Gaussian and gamma measures: sampling on cells,
//! the induced field moments and their inversion.
//!
//! Every cell `n` draws from its own ChaCha8 stream `(seed, n)`, so the
//! sample vector does not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::kernels::KernelConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Gaussian,
    Gamma,
}

/// Law of the basis per unit area: `L(A) ~ N(mean·|A|, variance·|A|)` or
/// `L(A) ~ Gamma(shape·|A|, rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyBasis {
    Gaussian { mean: f64, variance: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl LevyBasis {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return domain_err(format!("gaussian basis needs finite mean and variance > 0, got ({mean}, {variance})"));
        }
        Ok(LevyBasis::Gaussian { mean, variance })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return domain_err(format!("gamma basis needs shape > 0 and rate > 0, got ({shape}, {rate})"));
        }
        Ok(LevyBasis::Gamma { shape, rate })
    }

    pub fn kind(&self) -> BasisKind {
        match self {
            LevyBasis::Gaussian { .. } => BasisKind::Gaussian,
            LevyBasis::Gamma { .. } => BasisKind::Gamma,
        }
    }

    /// Re-checks the invariants, e.g. after deserialisation.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyBasis::Gaussian { mean, variance } => Self::gaussian(mean, variance).map(|_| ()),
            LevyBasis::Gamma { shape, rate } => Self::gamma(shape, rate).map(|_| ()),
        }
    }
}

/// Mean and variance of the smoothed field at any direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMoments {
    pub mean: f64,
    pub variance: f64,
}

/// The generator of cell `cell` under `seed`.
pub fn cell_stream(seed: u64, cell: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    rng
}

/// One draw per cell with the given areas.
pub fn sample_basis(basis: &LevyBasis, areas: &[f64], seed: u64) -> Result<Vec<f64>> {
    basis.validate()?;
    if let Some(a) = areas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return domain_err(format!("cell areas must be positive, got {a}"));
    }
    areas
        .par_iter()
        .enumerate()
        .map(|(n, &area)| sample_cell(basis, area, seed, n as u64))
        .collect()
}

/// The draw for a single cell; identical to the `n`-th entry of [`sample_basis`].
pub fn sample_cell(basis: &LevyBasis, area: f64, seed: u64, cell: u64) -> Result<f64> {
    let mut rng = cell_stream(seed, cell);
    match *basis {
        LevyBasis::Gaussian { mean, variance } => {
            let d = Normal::new(mean * area, (variance * area).sqrt()).map_err(|e| Error::Numeric(e.to_string()))?;
            Ok(d.sample(&mut rng))
        }
        LevyBasis::Gamma { shape, rate } => {
            let d = Gamma::new(shape * area, 1.0 / rate).map_err(|e| Error::Numeric(e.to_string()))?;
            Ok(d.sample(&mut rng))
        }
    }
}

/// `μ_X = μ c₁`, `σ²_X = σ² c₂` (Gaussian); `κ c₁/τ`, `κ c₂/τ²` (gamma).
pub fn field_moments(basis: &LevyBasis, constants: &KernelConstants) -> FieldMoments {
    let (c1, c2) = (constants.c1, constants.c2);
    match *basis {
        LevyBasis::Gaussian { mean, variance } => FieldMoments {
            mean: mean * c1,
            variance: variance * c2,
        },
        LevyBasis::Gamma { shape, rate } => FieldMoments {
            mean: shape * c1 / rate,
            variance: shape * c2 / (rate * rate),
        },
    }
}

/// Basis parameters whose field has the target moments.
pub fn invert_parameters(target: &FieldMoments, constants: &KernelConstants, kind: BasisKind) -> Result<LevyBasis> {
    let (c1, c2) = (constants.c1, constants.c2);
    if !(target.variance > 0.0) {
        return domain_err(format!("target variance must be > 0, got {}", target.variance));
    }
    match kind {
        BasisKind::Gaussian => LevyBasis::gaussian(target.mean / c1, target.variance / c2),
        BasisKind::Gamma => {
            if !(target.mean > 0.0) || !(c1 > 0.0 && c2 > 0.0) {
                return domain_err("gamma basis needs a positive target mean and positive kernel constants");
            }
            let rate = target.mean * c2 / (target.variance * c1);
            LevyBasis::gamma(target.mean * rate / c1, rate)
        }
    }
}
