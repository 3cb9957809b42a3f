//! TOML run configuration. Every key is optional; command-line flags take
//! precedence over file values.
//!
//! ```toml
//! [kernel]
//! family = "power"
//! parameter = 0.25
//! domain = "sphere"
//!
//! [basis]
//! kind = "gaussian"
//! mean = 100.0
//! variance = 10.0
//!
//! [simulation]
//! m1 = 200
//! m2 = 400
//! n = 100000
//! seed = 7
//! ```

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use starshape::levy::BasisKind;
use starshape::{Domain, KernelFamily};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: Option<KernelFamily>,
    pub parameter: Option<f64>,
    pub domain: Option<Domain>,
}

/// Target field moments; the basis parameters are derived from them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub kind: Option<BasisKind>,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    pub truncation: Option<f64>,
    pub clamp: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub nodes_outer: Option<usize>,
    pub nodes_inner: Option<usize>,
    pub singularity_split: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let cfg: FileConfig = toml::from_str(
            "[kernel]\nfamily = \"von_mises_fisher\"\nparameter = 2.0\n[simulation]\nseed = 3\nn = 500\n",
        )
        .unwrap();
        assert_eq!(cfg.kernel.family, Some(KernelFamily::VonMisesFisher));
        assert_eq!(cfg.simulation.seed, Some(3));
        assert_eq!(cfg.basis, BasisSection::default());
        assert!(toml::from_str::<FileConfig>("[kernel]\nfamliy = \"power\"\n").is_err());
    }
}
