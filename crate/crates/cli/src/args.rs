use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use starshape::levy::BasisKind;
use starshape::presets::CelestialBody;
use starshape::{Domain, KernelFamily};

#[derive(Debug, Parser)]
#[command(name = "starshape", version, about = "Star-shaped random particles on the circle and the sphere")]
pub struct Cli {
    /// Worker threads; outputs do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, env = "STARSHAPE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one field or an ensemble and write values, manifest and mesh.
    Simulate(SimulateArgs),
    /// Tabulate the correlation function of a kernel.
    Corr(CorrArgs),
    /// Report the fractal index and surface dimension of a kernel.
    Fractal(FractalArgs),
    /// List the cells of an equal-area partition.
    Partition(PartitionArgs),
    /// Estimate the surface dimension from a simulated ensemble.
    Estimate(EstimateArgs),
    /// Simulate a celestial body.
    Preset(PresetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    #[value(alias = "von-mises-fisher", alias = "von_mises_fisher")]
    Vmf,
    Uniform,
    Power,
}

impl From<FamilyArg> for KernelFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Vmf => KernelFamily::VonMisesFisher,
            FamilyArg::Uniform => KernelFamily::Uniform,
            FamilyArg::Power => KernelFamily::Power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Sphere,
    Circle,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Sphere => Domain::Sphere,
            DomainArg::Circle => Domain::Circle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Gaussian,
    Gamma,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Gaussian => BasisKind::Gaussian,
            BasisArg::Gamma => BasisKind::Gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Closed form where available, quadrature otherwise.
    Auto,
    Closed,
    Quadrature,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Kernel parameter (precision, cut-off or exponent).
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true, conflicts_with_all = ["a", "r", "q"])]
    pub param: Option<f64>,
    /// Von Mises–Fisher precision.
    #[arg(long, conflicts_with_all = ["r", "q"])]
    pub a: Option<f64>,
    /// Uniform cut-off angle; accepts `pi` expressions such as `pi/2`.
    #[arg(long, value_parser = parse_angle, conflicts_with = "q")]
    pub r: Option<f64>,
    /// Power exponent.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Sphere: colatitude rows; circle: number of grid points.
    #[arg(long, value_parser = parse_count)]
    pub m1: Option<usize>,
    /// Longitude columns (sphere only).
    #[arg(long, value_parser = parse_count)]
    pub m2: Option<usize>,
    /// Number of partition cells.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    /// Seed of the first realisation; required for every simulation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of realisations, seeded `seed, seed+1, …`.
    #[arg(long, value_parser = parse_count)]
    pub ensemble: Option<usize>,
    /// Lower bound on the power-kernel angle (default: half the largest cell diameter).
    #[arg(long, value_parser = parse_angle)]
    pub clamp: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    /// Target mean of the field.
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// Target variance of the field.
    #[arg(long)]
    pub variance: Option<f64>,
    /// Floor applied to the radial function.
    #[arg(long)]
    pub truncation: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    /// Gauss–Legendre nodes per outer panel.
    #[arg(long)]
    pub nodes_outer: Option<usize>,
    /// Gauss–Legendre nodes per inner panel.
    #[arg(long)]
    pub nodes_inner: Option<usize>,
    #[arg(long)]
    pub singularity_split: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Stem of the values CSV and manifest JSON.
    #[arg(long, default_value = "field")]
    pub output: String,
    /// OBJ mesh of the first realisation (sphere).
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
    /// CSV outline of the first realisation (circle).
    #[arg(long)]
    pub outline_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Angles as `lo:hi:count` (inclusive) or a comma list; `pi` is accepted.
    #[arg(long, default_value = "0:pi:50")]
    pub thetas: String,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Stem for CSV and manifest; CSV goes to stdout when absent.
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct FractalArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Also fit the index from a quadrature correlation curve.
    #[arg(long)]
    pub fit: bool,
    /// Stem for the JSON report; stdout when absent.
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    /// Stem for the CSV; stdout when absent.
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, default_value = "estimate")]
    pub output: String,
    /// Number of log-spaced angle bins.
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long, value_parser = parse_angle, default_value = "1e-3")]
    pub theta_lo: f64,
    #[arg(long, value_parser = parse_angle, default_value = "1")]
    pub theta_hi: f64,
    /// Start of the fit window (default: cell diameter or twice the clamp).
    #[arg(long, value_parser = parse_angle)]
    pub min_theta: Option<f64>,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub max_pairs: usize,
    /// Seed of the pair subsampling.
    #[arg(long, default_value_t = 0)]
    pub sampling_seed: u64,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// venus, dry_earth, wet_earth, moon or mars.
    #[arg(value_parser = parse_body)]
    pub body: CelestialBody,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Use 10⁶ cells instead of the default 10⁵.
    #[arg(long, conflicts_with = "n")]
    pub full_scale: bool,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Stem of the values CSV and manifest JSON (default: the body name).
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
}

fn parse_body(s: &str) -> Result<CelestialBody, String> {
    s.parse().map_err(|e: starshape::Error| e.to_string())
}

/// Non-negative integer, also in scientific notation such as `1e5`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x < 1e15 {
        Ok(x as usize)
    } else {
        Err(format!("{s:?} is not a non-negative integer"))
    }
}

/// A number, optionally in multiples of `pi`: `1.2`, `pi`, `pi/2`, `2pi`, `3*pi/4`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || format!("{s:?} is not an angle");
    if let Some((num, den)) = t.split_once('/') {
        let d: f64 = den.trim().parse().map_err(|_| bad())?;
        return Ok(parse_angle(num)? / d);
    }
    if let Some(prefix) = t.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = match prefix {
            "" => 1.0,
            "-" => -1.0,
            p => p.parse::<f64>().map_err(|_| bad())?,
        };
        return Ok(factor * PI);
    }
    t.parse().map_err(|_| bad())
}

/// `lo:hi:count` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_thetas(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (parse_angle(lo)?, parse_angle(hi)?);
            let n = parse_count(count)?;
            match n {
                0 => Err("angle count must be positive".into()),
                1 => Ok(vec![lo]),
                _ => Ok((0..n)
                    .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
                    .collect()),
            }
        }
        [list] => list.split(',').map(parse_angle).collect(),
        _ => Err(format!("{s:?} is neither lo:hi:count nor a comma list")),
    }
}
