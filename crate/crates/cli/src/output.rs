//! Output files and run manifests. Manifests hold every parameter needed to
//! rerun a command but no paths, thread counts or timestamps, so identical
//! runs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use starshape::kernels::KernelConstants;
use starshape::levy::{FieldMoments, LevyBasis};
use starshape::numerics::QuadratureSpec;
use starshape::presets::CelestialPreset;
use starshape::simulate::Ensemble;
use starshape::{Domain, Kernel};

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn new(dir: &Path) -> Self {
        OutDir(dir.to_path_buf())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.0.join(path)
        }
    }

    /// Writes `contents` and returns the file name recorded in manifests.
    pub fn write(&self, path: &Path, contents: &[u8]) -> anyhow::Result<String> {
        let full = self.resolve(path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&full, contents).with_context(|| format!("writing {}", full.display()))?;
        Ok(full
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()))
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub kernel: Kernel,
    pub constants: Option<KernelConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<FieldMoments>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<LevyBasis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<CelestialPreset>,
    pub quadrature: QuadratureSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshRecord>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub results: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, kernel: Kernel, quadrature: QuadratureSpec) -> Self {
        Manifest {
            tool: "starshape",
            version: env!("CARGO_PKG_VERSION"),
            command,
            kernel,
            constants: None,
            target: None,
            basis: None,
            truncation: None,
            simulation: None,
            preset: None,
            quadrature,
            mesh: None,
            results: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Serialize)]
pub struct SimulationRecord {
    pub domain: Domain,
    pub m1: usize,
    pub m2: usize,
    pub grid_points: usize,
    pub cells: usize,
    pub seeds: Vec<u64>,
    /// Power-kernel angle floor actually used.
    pub clamp_delta: f64,
    pub fields: Vec<FieldSummary>,
}

#[derive(Debug, Serialize)]
pub struct FieldSummary {
    pub seed: u64,
    /// Area-weighted mean of the values.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct MeshRecord {
    pub file: String,
    pub seed: u64,
    pub vertices: usize,
    pub faces: usize,
    pub notes: Vec<(String, String)>,
}

impl SimulationRecord {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        let fields = (0..e.seeds.len())
            .map(|s| {
                let f = e.field(s);
                FieldSummary {
                    seed: e.seeds[s],
                    mean: f.domain_mean(),
                    min: f.min_value(),
                    max: f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        SimulationRecord {
            domain: e.grid.domain,
            m1: e.grid.m1,
            m2: e.grid.m2,
            grid_points: e.grid.directions.len(),
            cells: e.config.cells,
            seeds: e.seeds.clone(),
            clamp_delta: e.clamp_delta,
            fields,
        }
    }
}

/// `theta,phi,x` for one realisation, `seed,theta,phi,x` for several.
pub fn values_csv(e: &Ensemble) -> String {
    let multi = e.seeds.len() > 1;
    let mut s = String::from(if multi { "seed,theta,phi,x\n" } else { "theta,phi,x\n" });
    for (seed, values) in e.seeds.iter().zip(&e.values) {
        for (&(theta, phi), x) in e.grid.coords.iter().zip(values) {
            if multi {
                let _ = write!(s, "{seed},");
            }
            let _ = writeln!(s, "{theta},{phi},{x}");
        }
    }
    s
}
