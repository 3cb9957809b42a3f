//! Moving-average simulation of the radial function on a grid of directions:
//! `x(u_m) = max(c, Σ_n k(∠(v_n, u_m)) L_n)` with one basis draw `L_n` per
//! equal-area cell.
//!
//! Ensembles are computed as one product of a kernel matrix (grid × cells)
//! with a basis matrix (cells × seeds). The kernel matrix is built in row
//! blocks whose size depends only on the number of cells, so the result is
//! bit-identical for any number of worker threads.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::kernels::{Domain, Kernel, KernelFamily};
use crate::levy::{sample_basis, LevyBasis};
use crate::partition::EqualAreaPartition;
use crate::{direction, dot, Direction};

/// Upper bound on kernel-matrix entries held per block.
const BLOCK_ENTRIES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec {
    pub kernel: Kernel,
    pub basis: LevyBasis,
    /// Floor `c > 0` applied to the radial function.
    pub truncation: Option<f64>,
}

impl ParticleSpec {
    pub fn new(kernel: Kernel, basis: LevyBasis, truncation: Option<f64>) -> Result<Self> {
        let spec = ParticleSpec {
            kernel,
            basis,
            truncation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        Kernel::new(self.kernel.family(), self.kernel.parameter(), self.kernel.domain())?;
        self.basis.validate()?;
        if let Some(c) = self.truncation {
            if !(c > 0.0 && c.is_finite()) {
                return domain_err(format!("truncation level must be > 0, got {c}"));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        self.kernel.domain()
    }
}

/// Grid and partition sizes. On the circle `m1` is the number of grid points
/// and `m2` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub m1: usize,
    pub m2: usize,
    pub cells: usize,
    pub seed: u64,
    /// Lower bound on the angle fed to the power kernel, in radians.
    /// `None` selects half the largest cell diameter.
    #[serde(default)]
    pub clamp_delta: Option<OrderedAngle>,
}

/// An angle that is finite and non-negative, comparable for `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderedAngle(f64);

impl Eq for OrderedAngle {}

impl OrderedAngle {
    pub fn new(angle: f64) -> Result<Self> {
        if !(angle >= 0.0 && angle.is_finite()) {
            return domain_err(format!("clamp angle must be finite and ≥ 0, got {angle}"));
        }
        Ok(OrderedAngle(angle))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl SimulationConfig {
    pub fn new(m1: usize, m2: usize, cells: usize, seed: u64) -> Self {
        SimulationConfig {
            m1,
            m2,
            cells,
            seed,
            clamp_delta: None,
        }
    }

    pub fn with_clamp(mut self, delta: f64) -> Result<Self> {
        self.clamp_delta = Some(OrderedAngle::new(delta)?);
        Ok(self)
    }

    fn validate(&self, domain: Domain) -> Result<()> {
        if self.m1 == 0 || self.cells == 0 || (domain == Domain::Sphere && self.m2 == 0) {
            return domain_err("grid sizes and cell count must be at least 1");
        }
        Ok(())
    }
}

/// Grid directions with their (colatitude, longitude) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub m1: usize,
    pub m2: usize,
    pub coords: Vec<(f64, f64)>,
    pub directions: Vec<Direction>,
}

/// `θ_i = iπ/M1` for `i < M1`, `φ_j = 2πj/M2` for `j = 1..=M2`, row-major in `i`.
/// The south pole is not part of the grid.
pub fn build_grid_sphere(m1: usize, m2: usize) -> Result<Grid> {
    if m1 == 0 || m2 == 0 {
        return domain_err("grid sizes must be at least 1");
    }
    let mut coords = Vec::with_capacity(m1 * m2);
    for i in 0..m1 {
        for j in 1..=m2 {
            coords.push((i as f64 * PI / m1 as f64, j as f64 * TAU / m2 as f64));
        }
    }
    let directions = coords.iter().map(|&(t, p)| direction(t, p)).collect();
    Ok(Grid {
        domain: Domain::Sphere,
        m1,
        m2,
        coords,
        directions,
    })
}

/// `u_m = 2πm/M` for `m = 1..=M` on the equator.
pub fn build_grid_circle(m: usize) -> Result<Grid> {
    if m == 0 {
        return domain_err("grid size must be at least 1");
    }
    let coords: Vec<(f64, f64)> = (1..=m).map(|k| (FRAC_PI_2, k as f64 * TAU / m as f64)).collect();
    let directions = coords.iter().map(|&(t, p)| direction(t, p)).collect();
    Ok(Grid {
        domain: Domain::Circle,
        m1: m,
        m2: 1,
        coords,
        directions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub spec: ParticleSpec,
    pub config: SimulationConfig,
    /// Clamp actually used for the power kernel (0 for bounded kernels).
    pub clamp_delta: f64,
}

impl RadialField {
    /// Average over the domain. Sphere grid rows are equally spaced in
    /// colatitude, so each point is weighted by `sin θ`.
    pub fn domain_mean(&self) -> f64 {
        match self.grid.domain {
            Domain::Circle => self.values.iter().sum::<f64>() / self.values.len() as f64,
            Domain::Sphere => {
                let (mut num, mut den) = (0.0, 0.0);
                for (&(theta, _), &x) in self.grid.coords.iter().zip(&self.values) {
                    let w = theta.sin();
                    num += w * x;
                    den += w;
                }
                num / den
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Independent realisations on a shared grid, one per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub grid: Grid,
    pub seeds: Vec<u64>,
    /// `values[s][m]`: realisation `s` at grid point `m`.
    pub values: Vec<Vec<f64>>,
    pub spec: ParticleSpec,
    pub config: SimulationConfig,
    pub clamp_delta: f64,
}

impl Ensemble {
    pub fn field(&self, s: usize) -> RadialField {
        RadialField {
            grid: self.grid.clone(),
            values: self.values[s].clone(),
            spec: self.spec,
            config: SimulationConfig {
                seed: self.seeds[s],
                ..self.config
            },
            clamp_delta: self.clamp_delta,
        }
    }
}

/// Kernel as a function of the cosine of the angle, with the clamp applied.
#[derive(Debug, Clone, Copy)]
struct CosineKernel {
    family: KernelFamily,
    parameter: f64,
    cos_cutoff: f64,
    clamp: f64,
}

impl CosineKernel {
    fn new(kernel: &Kernel, clamp: f64) -> Self {
        CosineKernel {
            family: kernel.family(),
            parameter: kernel.parameter(),
            cos_cutoff: kernel.parameter().cos(),
            clamp,
        }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::VonMisesFisher => (self.parameter * t).exp(),
            KernelFamily::Uniform => {
                if t >= self.cos_cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Power => {
                let angle = t.clamp(-1.0, 1.0).acos().max(self.clamp);
                (angle / PI).powf(-self.parameter) - 1.0
            }
        }
    }
}

fn resolve_clamp(spec: &ParticleSpec, config: &SimulationConfig, partition: &EqualAreaPartition) -> f64 {
    match (spec.kernel.family(), config.clamp_delta) {
        (_, Some(d)) => d.get(),
        (KernelFamily::Power, None) => 0.5 * partition.max_cell_diameter(),
        (_, None) => 0.0,
    }
}

/// Realisations for every seed in `seeds` on the grid selected by the domain.
pub fn simulate_ensemble(spec: &ParticleSpec, config: &SimulationConfig, seeds: &[u64]) -> Result<Ensemble> {
    spec.validate()?;
    let domain = spec.domain();
    config.validate(domain)?;
    if seeds.is_empty() {
        return domain_err("at least one seed is required");
    }
    let grid = match domain {
        Domain::Sphere => build_grid_sphere(config.m1, config.m2)?,
        Domain::Circle => build_grid_circle(config.m1)?,
    };
    let partition = EqualAreaPartition::new(domain, config.cells)?;
    let clamp = resolve_clamp(spec, config, &partition);
    let kernel = CosineKernel::new(&spec.kernel, clamp);

    let n = partition.len();
    let s = seeds.len();
    let areas = vec![partition.target_area(); n];
    // basis matrix, cells × seeds, row-major
    let mut basis = vec![0.0; n * s];
    for (col, &seed) in seeds.iter().enumerate() {
        for (row, l) in sample_basis(&spec.basis, &areas, seed)?.into_iter().enumerate() {
            basis[row * s + col] = l;
        }
    }

    let m = grid.directions.len();
    let rows_per_block = (BLOCK_ENTRIES / n).max(1);
    let centers = partition.centers();
    let mut out = vec![0.0; m * s];
    out.par_chunks_mut(rows_per_block * s)
        .enumerate()
        .for_each(|(b, chunk)| {
            let first = b * rows_per_block;
            let rows = chunk.len() / s;
            let mut block = vec![0.0; rows * n];
            for (r, row) in block.chunks_mut(n).enumerate() {
                let u = &grid.directions[first + r];
                for (k, v) in row.iter_mut().zip(centers) {
                    *k = kernel.eval(dot(u, v));
                }
            }
            // SAFETY: slices are sized rows×n, n×s and rows×s with the given
            // row-major strides.
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    n,
                    s,
                    1.0,
                    block.as_ptr(),
                    n as isize,
                    1,
                    basis.as_ptr(),
                    s as isize,
                    1,
                    0.0,
                    chunk.as_mut_ptr(),
                    s as isize,
                    1,
                );
            }
        });

    let floor = spec.truncation.unwrap_or(f64::NEG_INFINITY);
    let mut values = vec![Vec::with_capacity(m); s];
    for row in out.chunks(s) {
        for (col, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite field value; a grid point may coincide with a cell centre under clamp {clamp}"
                )));
            }
            values[col].push(x.max(floor));
        }
    }
    Ok(Ensemble {
        grid,
        seeds: seeds.to_vec(),
        values,
        spec: *spec,
        config: *config,
        clamp_delta: clamp,
    })
}

/// One realisation on the sphere grid, seeded by `config.seed`.
pub fn simulate_field(spec: &ParticleSpec, config: &SimulationConfig) -> Result<RadialField> {
    if spec.domain() != Domain::Sphere {
        return domain_err("simulate_field needs a kernel on the sphere");
    }
    Ok(simulate_ensemble(spec, config, &[config.seed])?.field(0))
}

/// One realisation on the circle grid with `config.m1` points.
pub fn simulate_field_circle(spec: &ParticleSpec, config: &SimulationConfig) -> Result<RadialField> {
    if spec.domain() != Domain::Circle {
        return domain_err("simulate_field_circle needs a kernel on the circle");
    }
    Ok(simulate_ensemble(spec, config, &[config.seed])?.field(0))
}
