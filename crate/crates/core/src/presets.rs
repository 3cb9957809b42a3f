//! Celestial bodies as Gaussian particles with the power kernel at `q = 1/2`.
//!
//! The field mean is the mean radius `r₀` and the field variance is the
//! squared topographic range `(d₊ − d₋)²`, all in kilometres.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::kernels::{kernel_constants, Domain, Kernel};
use crate::levy::{invert_parameters, BasisKind, FieldMoments};
use crate::numerics::QuadratureSpec;
use crate::simulate::ParticleSpec;

/// Power-kernel exponent shared by all bodies; surface dimension 2.5.
pub const PRESET_POWER: f64 = 0.5;
/// Sea level used to flood the dry Earth.
pub const SEA_LEVEL_KM: f64 = 6371.0;
pub const DESK_CELLS: usize = 100_000;
pub const FULL_SCALE_CELLS: usize = 1_000_000;
pub const PRESET_GRID: (usize, usize) = (200, 400);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CelestialBody {
    Venus,
    DryEarth,
    WetEarth,
    Moon,
    Mars,
}

impl CelestialBody {
    pub const ALL: [CelestialBody; 5] = [
        CelestialBody::Venus,
        CelestialBody::DryEarth,
        CelestialBody::WetEarth,
        CelestialBody::Moon,
        CelestialBody::Mars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CelestialBody::Venus => "venus",
            CelestialBody::DryEarth => "dry_earth",
            CelestialBody::WetEarth => "wet_earth",
            CelestialBody::Moon => "moon",
            CelestialBody::Mars => "mars",
        }
    }

    pub fn preset(self) -> CelestialPreset {
        let (mean_radius, d_plus, d_minus, truncation) = match self {
            CelestialBody::Venus => (6051.8, 11.0, -3.0, None),
            CelestialBody::DryEarth => (6367.2, 8.8, -11.0, None),
            CelestialBody::WetEarth => (6367.2, 8.8, -11.0, Some(SEA_LEVEL_KM)),
            CelestialBody::Moon => (1737.1, 5.5, -12.0, None),
            CelestialBody::Mars => (3389.5, 21.2, -8.2, None),
        };
        CelestialPreset {
            body: self,
            mean_radius,
            d_plus,
            d_minus,
            power: PRESET_POWER,
            truncation,
        }
    }
}

impl fmt::Display for CelestialBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CelestialBody {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        CelestialBody::ALL
            .into_iter()
            .find(|b| b.name() == key)
            .map_or_else(|| domain_err(format!("unknown body {s:?}; expected one of venus, dry_earth, wet_earth, moon, mars")), Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CelestialPreset {
    pub body: CelestialBody,
    /// Mean radius `r₀`.
    pub mean_radius: f64,
    /// Highest elevation above `r₀`.
    pub d_plus: f64,
    /// Lowest elevation relative to `r₀`; negative.
    pub d_minus: f64,
    pub power: f64,
    pub truncation: Option<f64>,
}

impl CelestialPreset {
    pub fn target_moments(&self) -> FieldMoments {
        let range = self.d_plus - self.d_minus;
        FieldMoments {
            mean: self.mean_radius,
            variance: range * range,
        }
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::power(self.power, Domain::Sphere)
    }

    /// Gaussian particle whose field has the target moments.
    pub fn particle_spec(&self, quad: &QuadratureSpec) -> Result<ParticleSpec> {
        let kernel = self.kernel()?;
        let constants = kernel_constants(&kernel, quad)?;
        let basis = invert_parameters(&self.target_moments(), &constants, BasisKind::Gaussian)?;
        ParticleSpec::new(kernel, basis, self.truncation)
    }
}
