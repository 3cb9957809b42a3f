//! Empirical variograms of simulated ensembles and the fractal index and
//! Hausdorff dimension read off their small-angle behaviour.
//!
//! Direction pairs are drawn once for the shared grid and reused for every
//! realisation, so the estimate is a mean over pairs and seeds.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{profile_from_fit, FractalProfile};
use crate::kernels::Domain;
use crate::partition::EqualAreaPartition;
use crate::numerics::{fit_loglog, log_spaced, MIN_FIT_POINTS};
use crate::simulate::RadialField;
use crate::{angle_between, dot};

/// Default cap on sampled direction pairs per bin.
pub const MAX_PAIRS_PER_BIN: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariogramOptions {
    pub max_pairs_per_bin: usize,
    /// Seeds the reservoir selection of pairs.
    pub sampling_seed: u64,
}

impl Default for VariogramOptions {
    fn default() -> Self {
        VariogramOptions {
            max_pairs_per_bin: MAX_PAIRS_PER_BIN,
            sampling_seed: 0,
        }
    }
}

/// Populated bins only; indices of empty bins are listed separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariogramEstimate {
    pub bin_edges: Vec<f64>,
    /// Mean angle of the sampled pairs in each populated bin.
    pub bin_centers: Vec<f64>,
    /// Half mean squared increment; always ≥ 0.
    pub gamma_hat: Vec<f64>,
    /// Sampled direction pairs per populated bin (each used for every field).
    pub pair_counts: Vec<usize>,
    pub empty_bins: Vec<usize>,
    pub fields: usize,
}

/// `count` log-spaced bin edges from `lo` to `hi`.
pub fn log_bins(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 1 {
        return Err(Error::Estimation(format!("invalid bin range [{lo}, {hi}] with {count} bins")));
    }
    Ok(log_spaced(lo, hi, count + 1))
}

fn check_ensemble(fields: &[RadialField]) -> Result<()> {
    let first = fields.first().ok_or_else(|| Error::Estimation("no fields supplied".into()))?;
    if first.values.len() != first.grid.directions.len() {
        return Err(Error::Estimation("field values do not match the grid".into()));
    }
    if fields[1..].iter().any(|f| f.grid != first.grid || f.values.len() != first.values.len()) {
        return Err(Error::Estimation("fields must share one grid".into()));
    }
    Ok(())
}

/// Variogram over direction pairs binned by angle, averaged over all fields.
pub fn empirical_variogram(fields: &[RadialField], edges: &[f64], options: &VariogramOptions) -> Result<VariogramEstimate> {
    check_ensemble(fields)?;
    if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges[edges.len() - 1] > std::f64::consts::PI {
        return Err(Error::Estimation("bin edges must increase within [0, π]".into()));
    }
    if options.max_pairs_per_bin == 0 {
        return Err(Error::Estimation("at least one pair per bin is required".into()));
    }
    let dirs = &fields[0].grid.directions;

    // one index per distinct direction (the pole ring repeats a direction)
    let mut seen = HashSet::new();
    let unique: Vec<usize> = (0..dirs.len())
        .filter(|&m| seen.insert(dirs[m].map(f64::to_bits)))
        .collect();

    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let cos_hi = hi.cos();
    let mut rng = ChaCha8Rng::seed_from_u64(options.sampling_seed);
    let mut reservoirs: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); bins];
    let mut seen_in_bin = vec![0usize; bins];
    for (a, &i) in unique.iter().enumerate() {
        for &j in &unique[a + 1..] {
            // cheap reject before the accurate angle
            if dot(&dirs[i], &dirs[j]) < cos_hi - 1e-12 {
                continue;
            }
            let angle = angle_between(&dirs[i], &dirs[j]);
            if angle < lo || angle >= hi || angle == 0.0 {
                continue;
            }
            let b = edges.partition_point(|&e| e <= angle) - 1;
            seen_in_bin[b] += 1;
            let item = (i as u32, j as u32, angle);
            let res = &mut reservoirs[b];
            if res.len() < options.max_pairs_per_bin {
                res.push(item);
            } else {
                let k = rng.random_range(0..seen_in_bin[b]);
                if k < options.max_pairs_per_bin {
                    res[k] = item;
                }
            }
        }
    }

    // per-field bin sums, merged in field order
    let sums: Vec<Vec<f64>> = fields
        .par_iter()
        .map(|f| {
            reservoirs
                .iter()
                .map(|res| {
                    res.iter()
                        .map(|&(i, j, _)| {
                            let d = f.values[i as usize] - f.values[j as usize];
                            d * d
                        })
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut estimate = VariogramEstimate {
        bin_edges: edges.to_vec(),
        bin_centers: Vec::new(),
        gamma_hat: Vec::new(),
        pair_counts: Vec::new(),
        empty_bins: Vec::new(),
        fields: fields.len(),
    };
    for (b, res) in reservoirs.iter().enumerate() {
        if res.is_empty() {
            estimate.empty_bins.push(b);
            continue;
        }
        let total: f64 = sums.iter().map(|s| s[b]).sum();
        let n = res.len() as f64;
        estimate.bin_centers.push(res.iter().map(|p| p.2).sum::<f64>() / n);
        estimate.gamma_hat.push(0.5 * total / (n * fields.len() as f64));
        estimate.pair_counts.push(res.len());
    }
    Ok(estimate)
}

/// Pointwise variance over realisations averaged over distinct directions;
/// with a single field, the variance over its directions.
pub fn ensemble_variance(fields: &[RadialField]) -> Result<f64> {
    check_ensemble(fields)?;
    let dirs = &fields[0].grid.directions;
    let mut seen = HashSet::new();
    let unique: Vec<usize> = (0..dirs.len())
        .filter(|&m| seen.insert(dirs[m].map(f64::to_bits)))
        .collect();
    let sample_variance = |xs: &mut dyn Iterator<Item = f64>, n: usize| {
        let xs: Vec<f64> = xs.collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
    };
    let s = fields.len();
    let v = if s >= 2 {
        unique
            .iter()
            .map(|&m| sample_variance(&mut fields.iter().map(|f| f.values[m]), s))
            .sum::<f64>()
            / unique.len() as f64
    } else {
        if unique.len() < 2 {
            return Err(Error::Estimation("a single field needs at least two directions".into()));
        }
        sample_variance(&mut unique.iter().map(|&m| fields[0].values[m]), unique.len())
    };
    Ok(v)
}

/// Smallest lag free of discretisation effects: the larger of the cell
/// diameter and twice the kernel clamp, so the clamp discs around the two
/// directions of a pair never overlap.
pub fn default_min_theta(field: &RadialField) -> Result<f64> {
    let partition = EqualAreaPartition::new(field.grid.domain, field.config.cells)?;
    Ok(partition.max_cell_diameter().max(2.0 * field.clamp_delta))
}

/// Fits `ln(γ̂/σ̂²) = α ln θ + ln b` over the first decade of populated bins
/// whose centre is at least `min_theta`. Below that scale (the kernel clamp
/// or the grid spacing) the discrete field is smoother than the model.
pub fn estimate_dimension(v: &VariogramEstimate, sigma2_hat: f64, domain: Domain, min_theta: f64) -> Result<FractalProfile> {
    if !(sigma2_hat > 0.0 && sigma2_hat.is_finite()) {
        return Err(Error::Estimation(format!("variance estimate must be > 0, got {sigma2_hat}")));
    }
    let start = v
        .bin_centers
        .iter()
        .zip(&v.gamma_hat)
        .find(|&(&t, &g)| t >= min_theta && g > 0.0)
        .map(|(&t, _)| t)
        .ok_or_else(|| Error::Estimation(format!("no populated bin above θ = {min_theta}")))?;
    let points: Vec<(f64, f64)> = v
        .bin_centers
        .iter()
        .zip(&v.gamma_hat)
        .filter(|&(&t, &g)| t >= start && t <= 10.0 * start && g > 0.0)
        .map(|(&t, &g)| (t, g / sigma2_hat))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::Estimation(format!(
            "need at least {MIN_FIT_POINTS} populated bins in [{start}, {}], got {}",
            10.0 * start,
            points.len()
        )));
    }
    profile_from_fit(fit_loglog(&points)?, domain)
}
