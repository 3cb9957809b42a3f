use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use starshape::correlation::{corr_closed_form, corr_quadrature_circle, corr_quadrature_sphere, sample_curve};
use starshape::estimate::{default_min_theta, empirical_variogram, ensemble_variance, estimate_dimension, log_bins, VariogramOptions};
use starshape::fractal::{default_fit_thetas, fit_fractal_index, fractal_index_closed};
use starshape::geometry::{obj_string, outline_csv, polygon_outline, triangulate};
use starshape::kernels::{kernel_constants, KernelConstants};
use starshape::levy::{invert_parameters, BasisKind, FieldMoments};
use starshape::numerics::QuadratureSpec;
use starshape::partition::EqualAreaPartition;
use starshape::presets::{CelestialPreset, DESK_CELLS, FULL_SCALE_CELLS, PRESET_GRID};
use starshape::simulate::{simulate_ensemble, Ensemble, ParticleSpec, SimulationConfig};
use starshape::{Domain, Kernel, KernelFamily};

use crate::args::{
    parse_thetas, Cli, Command, CorrArgs, EstimateArgs, FieldArgs, FractalArgs, GridArgs, KernelArgs, MethodArg,
    PartitionArgs, PresetArgs, QuadArgs, SimulateArgs,
};
use crate::config::{FileConfig, KernelSection, QuadratureSection, SimulationSection};
use crate::output::{values_csv, Manifest, MeshRecord, OutDir, SimulationRecord};
use crate::{usage, UsageError};

const DEFAULT_ESTIMATE_ENSEMBLE: usize = 20;

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| UsageError(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    let out = OutDir::new(&cli.out_dir);
    match &cli.command {
        Command::Simulate(a) => simulate(a, &file, &out),
        Command::Corr(a) => corr(a, &file, &out),
        Command::Fractal(a) => fractal(a, &file, &out),
        Command::Partition(a) => partition(a, &file, &out),
        Command::Estimate(a) => estimate(a, &file, &out),
        Command::Preset(a) => preset(a, &file, &out),
    }
}

/// Invalid user-supplied values are usage errors, not runtime failures.
fn user<T>(r: starshape::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| UsageError(e.to_string()).into())
}

fn resolve_kernel(args: &KernelArgs, file: &KernelSection) -> anyhow::Result<Kernel> {
    let Some(family) = args.family.map(KernelFamily::from).or(file.family) else {
        return usage("missing --family (vmf, uniform or power)");
    };
    let named = [
        (args.a, KernelFamily::VonMisesFisher, "--a"),
        (args.r, KernelFamily::Uniform, "--r"),
        (args.q, KernelFamily::Power, "--q"),
    ];
    for (value, owner, flag) in named {
        if value.is_some() && owner != family {
            return usage(format!("{flag} does not apply to the {family} kernel"));
        }
    }
    let explicit = args.param.or(args.a).or(args.r).or(args.q);
    let Some(parameter) = explicit.or(file.parameter) else {
        return usage("missing kernel parameter (--a, --r, --q or --param)");
    };
    let domain = args.domain.map(Domain::from).or(file.domain).unwrap_or(Domain::Sphere);
    user(Kernel::new(family, parameter, domain))
}

fn resolve_quad(args: &QuadArgs, file: &QuadratureSection) -> anyhow::Result<QuadratureSpec> {
    let d = QuadratureSpec::default();
    user(QuadratureSpec::new(
        args.nodes_outer.or(file.nodes_outer).unwrap_or(d.node_count_outer),
        args.nodes_inner.or(file.nodes_inner).unwrap_or(d.node_count_inner),
        args.singularity_split.or(file.singularity_split).unwrap_or(d.singularity_split),
    ))
}

struct Resolved {
    spec: ParticleSpec,
    config: SimulationConfig,
    seeds: Vec<u64>,
    target: Option<FieldMoments>,
    constants: KernelConstants,
    quad: QuadratureSpec,
}

fn resolve_grid(
    args: &GridArgs,
    file: &SimulationSection,
    domain: Domain,
    defaults: (usize, usize, usize, usize),
) -> anyhow::Result<(SimulationConfig, Vec<u64>)> {
    let (m1, m2, cells, ensemble) = defaults;
    let m1 = args.m1.or(file.m1).unwrap_or(m1);
    let m2 = if domain == Domain::Circle { 1 } else { args.m2.or(file.m2).unwrap_or(m2) };
    let cells = args.n.or(file.n).unwrap_or(cells);
    let Some(seed) = args.seed.or(file.seed) else {
        return usage("--seed is required for simulations");
    };
    let ensemble = args.ensemble.or(file.ensemble).unwrap_or(ensemble);
    if m1 == 0 || m2 == 0 || cells == 0 || ensemble == 0 {
        return usage("--m1, --m2, --n and --ensemble must be at least 1");
    }
    let seeds = (0..ensemble as u64)
        .map(|k| seed.checked_add(k))
        .collect::<Option<Vec<u64>>>()
        .ok_or_else(|| UsageError("seed range overflows u64".into()))?;
    let mut config = SimulationConfig::new(m1, m2, cells, seed);
    if let Some(delta) = args.clamp.or(file.clamp) {
        config = user(config.with_clamp(delta))?;
    }
    Ok((config, seeds))
}

fn resolve_field(args: &FieldArgs, quad: &QuadArgs, file: &FileConfig, ensemble: usize) -> anyhow::Result<Resolved> {
    let kernel = resolve_kernel(&args.kernel, &file.kernel)?;
    let quad = resolve_quad(quad, &file.quadrature)?;
    let constants = kernel_constants(&kernel, &quad)?;
    let kind = args.basis.map(BasisKind::from).or(file.basis.kind).unwrap_or(BasisKind::Gaussian);
    let (Some(mean), Some(variance)) = (args.mean.or(file.basis.mean), args.variance.or(file.basis.variance)) else {
        return usage("missing target moments: pass --mean and --variance");
    };
    let target = FieldMoments { mean, variance };
    let basis = user(invert_parameters(&target, &constants, kind))?;
    let spec = user(ParticleSpec::new(kernel, basis, args.truncation.or(file.simulation.truncation)))?;
    let defaults = match kernel.domain() {
        Domain::Sphere => (200, 400, 100_000, ensemble),
        Domain::Circle => (5000, 1, 100_000, ensemble),
    };
    let (config, seeds) = resolve_grid(&args.grid, &file.simulation, kernel.domain(), defaults)?;
    Ok(Resolved {
        spec,
        config,
        seeds,
        target: Some(target),
        constants,
        quad,
    })
}

fn simulation_manifest(command: &'static str, r: &Resolved, e: &Ensemble) -> Manifest {
    let mut m = Manifest::new(command, r.spec.kernel, r.quad);
    m.constants = Some(r.constants);
    m.target = r.target;
    m.basis = Some(r.spec.basis);
    m.truncation = r.spec.truncation;
    m.simulation = Some(SimulationRecord::from_ensemble(e));
    m
}

fn write_mesh(out: &OutDir, path: &Path, e: &Ensemble, m: &mut Manifest) -> anyhow::Result<()> {
    if e.grid.domain != Domain::Sphere {
        return usage("--mesh-out needs a sphere field; use --outline-out on the circle");
    }
    let mut mesh = triangulate(&e.field(0))?;
    mesh.metadata.insert(0, ("generator".into(), format!("starshape {}", env!("CARGO_PKG_VERSION"))));
    let file = out.write(path, obj_string(&mesh)?.as_bytes())?;
    m.mesh = Some(MeshRecord {
        file: file.clone(),
        seed: e.seeds[0],
        vertices: mesh.vertices.len(),
        faces: mesh.faces.len(),
        notes: mesh.metadata.clone(),
    });
    m.outputs.push(file);
    Ok(())
}

fn finish(out: &OutDir, stem: &str, m: &mut Manifest) -> anyhow::Result<()> {
    let name = format!("{stem}.json");
    m.outputs.push(name.clone());
    out.write(Path::new(&name), m.to_json()?.as_bytes())?;
    eprintln!("wrote {}", m.outputs.join(", "));
    Ok(())
}

fn simulate(a: &SimulateArgs, file: &FileConfig, out: &OutDir) -> anyhow::Result<()> {
    let r = resolve_field(&a.field, &a.quad, file, 1)?;
    let e = simulate_ensemble(&r.spec, &r.config, &r.seeds)?;
    let mut m = simulation_manifest("simulate", &r, &e);
    m.outputs.push(out.write(&PathBuf::from(format!("{}.csv", a.output)), values_csv(&e).as_bytes())?);
    if let Some(path) = &a.mesh_out {
        write_mesh(out, path, &e, &mut m)?;
    }
    if let Some(path) = &a.outline_out {
        if e.grid.domain != Domain::Circle {
            return usage("--outline-out needs a circle field; use --mesh-out on the sphere");
        }
        let poly = polygon_outline(&e.field(0))?;
        m.outputs.push(out.write(path, outline_csv(&poly).as_bytes())?);
    }
    finish(out, &a.output, &mut m)
}

fn preset(a: &PresetArgs, file: &FileConfig, out: &OutDir) -> anyhow::Result<()> {
    let preset: CelestialPreset = a.body.preset();
    let quad = resolve_quad(&a.quad, &file.quadrature)?;
    let spec = preset.particle_spec(&quad)?;
    let cells = if a.full_scale { FULL_SCALE_CELLS } else { DESK_CELLS };
    let (config, seeds) = resolve_grid(&a.grid, &file.simulation, Domain::Sphere, (PRESET_GRID.0, PRESET_GRID.1, cells, 1))?;
    let r = Resolved {
        spec,
        config,
        seeds,
        target: Some(preset.target_moments()),
        constants: kernel_constants(&spec.kernel, &quad)?,
        quad,
    };
    let e = simulate_ensemble(&r.spec, &r.config, &r.seeds)?;
    let mut m = simulation_manifest("preset", &r, &e);
    m.preset = Some(preset);
    let stem = a.output.clone().unwrap_or_else(|| a.body.name().to_string());
    m.outputs.push(out.write(&PathBuf::from(format!("{stem}.csv")), values_csv(&e).as_bytes())?);
    if let Some(path) = &a.mesh_out {
        write_mesh(out, path, &e, &mut m)?;
    }
    finish(out, &stem, &mut m)
}

fn corr(a: &CorrArgs, file: &FileConfig, out: &OutDir) -> anyhow::Result<()> {
    let kernel = resolve_kernel(&a.kernel, &file.kernel)?;
    let quad = resolve_quad(&a.quad, &file.quadrature)?;
    let thetas = parse_thetas(&a.thetas).map_err(UsageError)?;
    if let Some(t) = thetas.iter().find(|t| !(0.0..=std::f64::consts::PI).contains(*t)) {
        return usage(format!("angle {t} outside [0, π]"));
    }
    let values: Vec<f64> = match a.method {
        MethodArg::Auto => sample_curve(&kernel, &thetas, &quad)?.values,
        MethodArg::Closed => {
            if corr_closed_form(&kernel, 0.0)?.is_none() {
                return usage(format!("the {} kernel has no closed-form correlation", kernel.family()));
            }
            thetas
                .iter()
                .map(|&t| corr_closed_form(&kernel, t).map(|c| c.unwrap_or(f64::NAN)))
                .collect::<starshape::Result<_>>()?
        }
        MethodArg::Quadrature => thetas
            .par_iter()
            .map(|&t| match kernel.domain() {
                Domain::Sphere => corr_quadrature_sphere(&kernel, t, &quad),
                Domain::Circle => corr_quadrature_circle(&kernel, t, &quad),
            })
            .collect::<starshape::Result<_>>()?,
    };
    let mut csv = String::from("theta,correlation\n");
    for (t, c) in thetas.iter().zip(&values) {
        let _ = writeln!(csv, "{t},{c}");
    }
    match &a.output {
        None => print!("{csv}"),
        Some(stem) => {
            let mut m = Manifest::new("corr", kernel, quad);
            m.constants = Some(kernel_constants(&kernel, &quad)?);
            m.results = json!({ "method": format!("{:?}", a.method).to_lowercase(), "thetas": a.thetas });
            m.outputs.push(out.write(&PathBuf::from(format!("{stem}.csv")), csv.as_bytes())?);
            finish(out, stem, &mut m)?;
        }
    }
    Ok(())
}

fn fractal(a: &FractalArgs, file: &FileConfig, out: &OutDir) -> anyhow::Result<()> {
    let kernel = resolve_kernel(&a.kernel, &file.kernel)?;
    let quad = resolve_quad(&a.quad, &file.quadrature)?;
    let closed = fractal_index_closed(&kernel);
    let mut report = json!({
        "family": kernel.family(),
        "parameter": kernel.parameter(),
        "domain": kernel.domain(),
        "alpha": closed.alpha,
        "dimension": closed.hausdorff_dim,
        "b": closed.b,
        "source": closed.source,
    });
    if a.fit {
        let curve = sample_curve(&kernel, &default_fit_thetas(), &quad)?;
        let fitted = fit_fractal_index(&curve)?;
        report["fitted"] = json!({
            "alpha": fitted.alpha,
            "dimension": fitted.hausdorff_dim,
            "b": fitted.b,
            "fit": fitted.fit,
        });
    }
    match &a.output {
        None => println!("{}", serde_json::to_string_pretty(&report)?),
        Some(stem) => {
            let mut m = Manifest::new("fractal", kernel, quad);
            m.results = report;
            finish(out, stem, &mut m)?;
        }
    }
    Ok(())
}

fn partition(a: &PartitionArgs, file: &FileConfig, out: &OutDir) -> anyhow::Result<()> {
    let Some(n) = a.n.or(file.simulation.n) else {
        return usage("missing --n");
    };
    let domain = a.domain.map(Domain::from).or(file.kernel.domain).unwrap_or(Domain::Sphere);
    let p = user(EqualAreaPartition::new(domain, n))?;
    let mut csv = String::from("index,colat_lo,colat_hi,lon_lo,lon_hi,x,y,z,area\n");
    for (i, (cell, v)) in p.cells().iter().zip(p.centers()).enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{},{},{}",
            cell.colatitude.0,
            cell.colatitude.1,
            cell.longitude.0,
            cell.longitude.1,
            v[0],
            v[1],
            v[2],
            cell.measure(domain)
        );
    }
    match &a.output {
        None => print!("{csv}"),
        Some(stem) => {
            out.write(&PathBuf::from(format!("{stem}.csv")), csv.as_bytes())?;
            eprintln!("wrote {stem}.csv");
        }
    }
    Ok(())
}

fn estimate(a: &EstimateArgs, file: &FileConfig, out: &OutDir) -> anyhow::Result<()> {
    let r = resolve_field(&a.field, &a.quad, file, DEFAULT_ESTIMATE_ENSEMBLE)?;
    let edges = user(log_bins(a.theta_lo, a.theta_hi.min(std::f64::consts::PI), a.bins))?;
    let e = simulate_ensemble(&r.spec, &r.config, &r.seeds)?;
    let fields: Vec<_> = (0..e.seeds.len()).map(|s| e.field(s)).collect();
    let options = VariogramOptions {
        max_pairs_per_bin: a.max_pairs,
        sampling_seed: a.sampling_seed,
    };
    let v = empirical_variogram(&fields, &edges, &options)?;
    let sigma2 = ensemble_variance(&fields)?;
    let min_theta = match a.min_theta {
        Some(t) => t,
        None => default_min_theta(&fields[0])?,
    };
    let profile = estimate_dimension(&v, sigma2, r.spec.domain(), min_theta)?;
    let closed = fractal_index_closed(&r.spec.kernel);

    let mut csv = String::from("theta,gamma_hat,count\n");
    for ((t, g), c) in v.bin_centers.iter().zip(&v.gamma_hat).zip(&v.pair_counts) {
        let _ = writeln!(csv, "{t},{g},{c}");
    }
    let mut m = simulation_manifest("estimate", &r, &e);
    m.results = json!({
        "alpha": profile.alpha,
        "dimension": profile.hausdorff_dim,
        "b": profile.b,
        "window": profile.fit.map(|f| f.theta_range),
        "r_squared": profile.fit.map(|f| f.r_squared),
        "min_theta": min_theta,
        "sigma2_hat": sigma2,
        "empty_bins": v.empty_bins,
        "variogram": options,
        "closed_alpha": closed.alpha,
        "closed_dimension": closed.hausdorff_dim,
    });
    m.outputs.push(out.write(&PathBuf::from(format!("{}.csv", a.output)), csv.as_bytes())?);
    println!(
        "alpha {:.4}  dimension {:.4}  (closed form: alpha {}, dimension {})",
        profile.alpha, profile.hausdorff_dim, closed.alpha, closed.hausdorff_dim
    );
    finish(out, &a.output, &mut m)
}
