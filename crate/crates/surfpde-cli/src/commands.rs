//! Subcommand drivers: resolve options, call the library, write artifacts,
//! and return the one-line summary printed on success.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use surfpde::analysis::{
    fit_order, spectrum, write_spectrum_csv, SpectrumMode, DENSE_SPECTRUM_CAP,
};
use surfpde::geometry::generators::{surface_by_name, surface_registry, GenParams};
use surfpde::geometry::io::{save_ply, save_xyz_csv, PointCloudFormat};
use surfpde::geometry::SurfaceNodeSet;
use surfpde::moving::{expanding_sphere_conservation, write_series_csv};
use surfpde::operators::{
    advection_matrix, assemble, hyperviscosity_matrix, write_matrix_market, OperatorMatrix,
};
use surfpde::problems::advect::{advect_sphere, advect_torus, SphereInit, TorusInit};
use surfpde::problems::fields::{sphere_velocity, torus_velocity, TestFunction};
use surfpde::problems::heat::{forced_heat_torus, heat_sphere};
use surfpde::problems::poisson::poisson_bvp;
use surfpde::problems::turing::{turing_run, turing_static, TuringParams, TuringPattern};
use surfpde::problems::{resolve_nodes, ProblemRun, Resolution};
use surfpde::rbf::{binomial, surface_operator_weights, LinearOperatorSpec, PhsPolyConfig};

use crate::config::{ensure_out_dir, write_text, Manifest, Opts};
use crate::CliError;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn surface_name(opts: &Opts, default: &str) -> String {
    opts.surface.clone().unwrap_or_else(|| default.to_string())
}

fn known_surfaces() -> String {
    surface_registry()
        .iter()
        .map(|f| f.name())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Generate a node set by family name; `default_n` fills in when neither a
/// node count nor a spacing was requested.
fn generate_nodes(name: &str, opts: &Opts, default_n: Option<usize>) -> Result<SurfaceNodeSet, CliError> {
    let family = surface_by_name(name).ok_or_else(|| {
        usage(format!(
            "unknown surface '{name}' (known: {})",
            known_surfaces()
        ))
    })?;
    let mut params = GenParams {
        n: opts.n,
        h: opts.h,
        big_r: opts.big_r,
        small_r: opts.small_r,
        gamma: opts.gamma,
        k: opts.k,
        r0: opts.r0,
    };
    if params.n.is_none() && params.h.is_none() {
        params.n = default_n;
    }
    Ok(family.generate(&params)?)
}

/// Method parameters: degree-dependent defaults overridden field by field,
/// then validated against the module constraints.
fn method_config(opts: &Opts, default_l: u32, dim: usize) -> Result<PhsPolyConfig, CliError> {
    let l = opts.l.unwrap_or(default_l);
    let mut config = PhsPolyConfig::for_degree(l, dim);
    apply_overrides(&mut config, opts);
    config.validate(dim)?;
    Ok(config)
}

/// Poisson-solve defaults: a thicker off-surface extension and tighter
/// spacing than the generic degree defaults.
fn poisson_config(opts: &Opts, default_l: u32) -> Result<PhsPolyConfig, CliError> {
    let l = opts.l.unwrap_or(default_l);
    let mut config = PhsPolyConfig {
        m: 5,
        l,
        n_s: 2 * binomial(l as usize + 3, 3),
        n_perp: 10,
        eps_normal: 0.05,
    };
    apply_overrides(&mut config, opts);
    config.validate(3)?;
    Ok(config)
}

fn apply_overrides(config: &mut PhsPolyConfig, opts: &Opts) {
    if let Some(m) = opts.m {
        config.m = m;
    }
    if let Some(n_s) = opts.n_s {
        config.n_s = n_s;
    }
    if let Some(n_perp) = opts.n_perp {
        config.n_perp = n_perp;
    }
    if let Some(eps) = opts.eps_normal {
        config.eps_normal = eps;
    }
}

fn resolution(opts: &Opts, default: Resolution) -> Resolution {
    match (opts.n, opts.h) {
        (Some(n), _) => Resolution::NodeCount(n),
        (None, Some(h)) => Resolution::Spacing(h),
        (None, None) => default,
    }
}

fn out_path(opts: &Opts, dir: &Path, default_name: &str) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| dir.join(default_name))
}

/// Node coordinates plus one column per named field.
fn write_fields_csv(run: &ProblemRun, path: &Path) -> Result<(), CliError> {
    let mut text = String::from("x,y,z");
    for (name, _) in &run.fields {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for i in 0..run.nodes.len() {
        let p = run.nodes.points[i];
        text.push_str(&format!("{:e},{:e},{:e}", p.x, p.y, p.z));
        for (_, values) in &run.fields {
            text.push_str(&format!(",{:e}", values[i]));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

fn error_summary(run: &ProblemRun) -> String {
    match (run.error_l2, run.error_linf) {
        (Some(l2), Some(linf)) => format!("rel err L2 = {l2:.3e}, Linf = {linf:.3e}"),
        _ => "no analytic reference".to_string(),
    }
}

fn record_run(manifest: &mut Manifest, run: &ProblemRun) {
    manifest.set("surface", &run.surface);
    manifest.set("n", run.node_count);
    manifest.set_method(&run.config);
    if run.steps > 0 {
        manifest.set("dt", run.dt);
        manifest.set("steps", run.steps);
    }
}

pub fn nodes(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    let node_set = generate_nodes(&name, opts, None)?;
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "nodes.csv");
    match PointCloudFormat::from_path(&path)? {
        PointCloudFormat::XyzCsv => save_xyz_csv(&node_set, &path)?,
        PointCloudFormat::Ply => save_ply(&node_set, &path, &[])?,
    }
    let mut manifest = Manifest::new("nodes", opts);
    manifest.set("surface", &name);
    manifest.set("nodes_generated", node_set.len());
    manifest.set("mean_spacing", format!("{:e}", node_set.h));
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "nodes: {name}, {} nodes, mean spacing {:.4}, wrote {}",
        node_set.len(),
        node_set.h,
        path.display()
    ))
}

pub fn weights(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    let node_set = generate_nodes(&name, opts, Some(2500))?;
    let config = method_config(opts, 4, node_set.dim)?;
    let op_name = opts.op.clone().unwrap_or_else(|| "lap".to_string());
    let spec = point_operator_spec(&op_name)?;
    let node = opts.node.unwrap_or(0);
    if node >= node_set.len() {
        return Err(usage(format!(
            "node index {node} out of range (the set has {} nodes)",
            node_set.len()
        )));
    }
    let (collapsed, diag) = surface_operator_weights(&node_set, node, &config, &spec)?;
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "weights.csv");
    let mut text = String::from("index,weight\n");
    for (j, w) in collapsed.indices.iter().zip(&collapsed.values) {
        text.push_str(&format!("{j},{w:e}\n"));
    }
    write_text(&path, &text)?;
    let sum: f64 = collapsed.values.iter().sum();
    let mut manifest = Manifest::new("weights", opts);
    manifest.set("surface", &name);
    manifest.set("n", node_set.len());
    manifest.set("node", node);
    manifest.set("op", &op_name);
    manifest.set_method(&config);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "weights: node {node} ({op_name}) on {name}: {} stencil weights, row sum {sum:.3e}, cond(A) {:.3e}, wrote {}",
        collapsed.values.len(),
        diag.cond_a,
        path.display()
    ))
}

fn point_operator_spec(op: &str) -> Result<LinearOperatorSpec, CliError> {
    Ok(match op {
        "lap" => LinearOperatorSpec::Laplacian,
        "identity" => LinearOperatorSpec::Identity,
        "grad-x" => LinearOperatorSpec::GradientComponent(0),
        "grad-y" => LinearOperatorSpec::GradientComponent(1),
        "grad-z" => LinearOperatorSpec::GradientComponent(2),
        other => {
            return Err(usage(format!(
                "unknown operator '{other}' (lap, identity, grad-x, grad-y, grad-z)"
            )))
        }
    })
}

/// Build the requested operator matrix: a pointwise spec, hyperviscosity,
/// the built-in advection field, or the combined transport operator
/// -A + H used by the stability studies.
fn build_matrix(
    name: &str,
    node_set: &SurfaceNodeSet,
    config: &PhsPolyConfig,
    opts: &Opts,
    manifest: &mut Manifest,
) -> Result<(OperatorMatrix, f64, String), CliError> {
    let op = opts.op.clone().unwrap_or_else(|| "lap".to_string());
    match op.as_str() {
        "hyper" => {
            let eps = opts.eps_hyper.unwrap_or(1e-3);
            manifest.set("eps_hyper", eps);
            let assembled = hyperviscosity_matrix(node_set, config, eps, None)?;
            Ok((assembled.matrix, assembled.diagnostics.max_cond_a, op))
        }
        "advect" => {
            let velocities = builtin_velocities(name, node_set, opts, manifest)?;
            let assembled = advection_matrix(node_set, config, &velocities)?;
            Ok((assembled.matrix, assembled.diagnostics.max_cond_a, op))
        }
        "transport" => {
            let velocities = builtin_velocities(name, node_set, opts, manifest)?;
            let advect = advection_matrix(node_set, config, &velocities)?;
            let eps = opts.eps_hyper.unwrap_or(1e-3);
            manifest.set("eps_hyper", eps);
            let hyper = hyperviscosity_matrix(node_set, config, eps, None)?;
            let matrix = OperatorMatrix::linear_combination(&[
                (-1.0, &advect.matrix),
                (1.0, &hyper.matrix),
            ])?;
            let cond = advect
                .diagnostics
                .max_cond_a
                .max(hyper.diagnostics.max_cond_a);
            Ok((matrix, cond, op))
        }
        pointwise => {
            let spec = point_operator_spec(pointwise).map_err(|_| {
                usage(format!(
                    "unknown operator '{pointwise}' (lap, identity, grad-x, grad-y, grad-z, advect, hyper, transport)"
                ))
            })?;
            let assembled = assemble(node_set, config, &spec)?;
            Ok((assembled.matrix, assembled.diagnostics.max_cond_a, op))
        }
    }
}

fn builtin_velocities(
    name: &str,
    node_set: &SurfaceNodeSet,
    opts: &Opts,
    manifest: &mut Manifest,
) -> Result<Vec<Vector3<f64>>, CliError> {
    match name {
        "sphere" => {
            let alpha = opts.alpha.unwrap_or(std::f64::consts::FRAC_PI_2);
            manifest.set("alpha", alpha);
            Ok(node_set
                .points
                .iter()
                .map(|p| sphere_velocity(p, alpha))
                .collect())
        }
        "torus" => Ok(node_set.points.iter().map(torus_velocity).collect()),
        other => Err(usage(format!(
            "no built-in velocity field for surface '{other}' (sphere and torus only)"
        ))),
    }
}

pub fn assemble_op(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    let node_set = generate_nodes(&name, opts, Some(2500))?;
    let config = method_config(opts, 3, node_set.dim)?;
    let dir = ensure_out_dir(opts)?;
    let mut manifest = Manifest::new("assemble", opts);
    manifest.set("surface", &name);
    manifest.set("n", node_set.len());
    manifest.set_method(&config);
    let (matrix, cond, op) = build_matrix(&name, &node_set, &config, opts, &mut manifest)?;
    let path = out_path(opts, &dir, "matrix.mtx");
    write_matrix_market(&matrix, &path)?;
    manifest.set("op", &op);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "assemble: {op} on {name}: {n} x {n}, {} nonzeros, max cond(A) {cond:.3e}, wrote {}",
        matrix.nnz(),
        path.display(),
        n = matrix.nrows,
    ))
}

pub fn spectrum_op(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    let node_set = generate_nodes(&name, opts, Some(2500))?;
    let config = method_config(opts, 3, node_set.dim)?;
    let dir = ensure_out_dir(opts)?;
    let mut manifest = Manifest::new("spectrum", opts);
    manifest.set("surface", &name);
    manifest.set("n", node_set.len());
    manifest.set_method(&config);
    let (matrix, _, op) = build_matrix(&name, &node_set, &config, opts, &mut manifest)?;
    let mode = match opts.mode.as_deref() {
        None => {
            if node_set.len() <= DENSE_SPECTRUM_CAP {
                SpectrumMode::DenseFull
            } else {
                SpectrumMode::Extremal
            }
        }
        Some("dense") => SpectrumMode::DenseFull,
        Some("extremal") => SpectrumMode::Extremal,
        Some(other) => {
            return Err(usage(format!(
                "unknown spectrum mode '{other}' (dense, extremal)"
            )))
        }
    };
    let report = spectrum(&matrix, mode)?;
    let path = out_path(opts, &dir, "spectrum.csv");
    write_spectrum_csv(&report, &path)?;
    manifest.set("op", &op);
    manifest.set("mode", report.method);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "spectrum: {op} on {name}, N = {}, {} eigenvalues ({}), max Re = {:.6e}, wrote {}",
        node_set.len(),
        report.eigenvalues.len(),
        report.method,
        report.max_real,
        path.display()
    ))
}

pub fn poisson(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    let test_name = opts.test.clone().unwrap_or_else(|| "u2".to_string());
    let test = TestFunction::by_name(&test_name)
        .ok_or_else(|| usage(format!("unknown test function '{test_name}' (u1, u2)")))?;
    let config = poisson_config(opts, 2)?;
    let res = resolution(opts, Resolution::NodeCount(2500));
    let run = poisson_bvp(&name, test, &config, &res)?;
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "solution.csv");
    write_fields_csv(&run, &path)?;
    let mut manifest = Manifest::new("poisson", opts);
    record_run(&mut manifest, &run);
    manifest.set("test", &test_name);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "poisson: {name} {test_name}, N = {}, {}, max cond(A) {:.3e}, {:.1}s",
        run.node_count,
        error_summary(&run),
        run.stat("max_cond_a").unwrap_or(f64::NAN),
        run.wall_seconds
    ))
}

pub fn heat(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    if opts.h.is_some() {
        return Err(usage(
            "the heat benchmark selects resolution by node count; use --n",
        ));
    }
    let run = match name.as_str() {
        "sphere" => heat_sphere(opts.l.unwrap_or(4), opts.n.unwrap_or(2500))?,
        "torus" => forced_heat_torus(opts.l.unwrap_or(4), opts.n.unwrap_or(2000))?,
        other => {
            return Err(usage(format!(
                "the heat benchmark runs on sphere or torus, not '{other}'"
            )))
        }
    };
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "solution.csv");
    write_fields_csv(&run, &path)?;
    let mut manifest = Manifest::new("heat", opts);
    record_run(&mut manifest, &run);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "heat: {name}, N = {}, {}, {} steps of dt = {:.3e}, {:.1}s",
        run.node_count,
        error_summary(&run),
        run.steps,
        run.dt,
        run.wall_seconds
    ))
}

pub fn advect(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    if opts.h.is_some() {
        return Err(usage(
            "the transport benchmark selects resolution by node count; use --n",
        ));
    }
    let init_name = opts.init.clone().unwrap_or_else(|| "cosine".to_string());
    let l = opts.l.unwrap_or(3);
    let run = match (name.as_str(), init_name.as_str()) {
        ("sphere", "cosine") => advect_sphere(SphereInit::CosineBell, l, opts.n.unwrap_or(2500))?,
        ("sphere", "gaussian") => {
            advect_sphere(SphereInit::GaussianBell, l, opts.n.unwrap_or(2500))?
        }
        ("torus", "cosine") => advect_torus(TorusInit::CosineBells, l, opts.n.unwrap_or(2000))?,
        ("torus", "gaussian") => advect_torus(TorusInit::GaussianBells, l, opts.n.unwrap_or(2000))?,
        ("sphere" | "torus", other) => {
            return Err(usage(format!(
                "unknown initial profile '{other}' (cosine, gaussian)"
            )))
        }
        (other, _) => {
            return Err(usage(format!(
                "the transport benchmark runs on sphere or torus, not '{other}'"
            )))
        }
    };
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "solution.csv");
    write_fields_csv(&run, &path)?;
    let mut manifest = Manifest::new("advect", opts);
    record_run(&mut manifest, &run);
    manifest.set("init", &init_name);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "advect: {name} {init_name} bell, N = {}, {}, max growth {:.3}, {} steps, {:.1}s",
        run.node_count,
        error_summary(&run),
        run.stat("max_growth").unwrap_or(f64::NAN),
        run.steps,
        run.wall_seconds
    ))
}

pub fn turing(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "torus");
    let pattern_name = opts.pattern.clone().unwrap_or_else(|| "spots".to_string());
    let pattern = match pattern_name.as_str() {
        "spots" => TuringPattern::Spots,
        "stripes" => TuringPattern::Stripes,
        other => return Err(usage(format!("unknown pattern '{other}' (spots, stripes)"))),
    };
    let seed = opts.seed.unwrap_or(0);
    let res = resolution(opts, Resolution::NodeCount(4000));
    let custom = opts.dt.is_some()
        || opts.t_final.is_some()
        || opts.m.is_some()
        || opts.l.is_some()
        || opts.n_s.is_some()
        || opts.n_perp.is_some()
        || opts.eps_normal.is_some();
    let run = if custom {
        let mut params = match pattern {
            TuringPattern::Spots => TuringParams::spots(),
            TuringPattern::Stripes => TuringParams::stripes(),
        };
        if let Some(t_final) = opts.t_final {
            params.final_time = t_final;
        }
        let l = opts.l.unwrap_or(6);
        let mut config = PhsPolyConfig {
            m: 5,
            l,
            n_s: 2 * binomial(l as usize + 3, 3),
            n_perp: 10,
            eps_normal: 0.1,
        };
        apply_overrides(&mut config, opts);
        config.validate(3)?;
        let node_set = resolve_nodes(&name, &res)?;
        turing_run(&name, node_set, &params, &config, opts.dt.unwrap_or(0.02), seed)?
    } else {
        turing_static(&name, &res, pattern, seed)?
    };
    let dir = ensure_out_dir(opts)?;
    let csv_path = out_path(opts, &dir, "solution.csv");
    write_fields_csv(&run, &csv_path)?;
    let ply_path = dir.join("pattern.ply");
    let u = run.field("u").expect("reaction-diffusion run stores u");
    let v = run.field("v").expect("reaction-diffusion run stores v");
    save_ply(&run.nodes, &ply_path, &[("u", u), ("v", v)])?;
    let mut manifest = Manifest::new("turing", opts);
    record_run(&mut manifest, &run);
    manifest.set("pattern", &pattern_name);
    manifest.set("seed", seed);
    manifest.set("out", csv_path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "turing: {pattern_name} on {name}, N = {}, {} steps of dt = {}, u in [{:.3}, {:.3}], std(u) = {:.3}, {:.1}s",
        run.node_count,
        run.steps,
        run.dt,
        run.stat("u_min").unwrap_or(f64::NAN),
        run.stat("u_max").unwrap_or(f64::NAN),
        run.stat("u_std").unwrap_or(f64::NAN),
        run.wall_seconds
    ))
}

pub fn moving(opts: &Opts) -> Result<String, CliError> {
    let dx = opts.dx.unwrap_or(0.2);
    let moving_run = expanding_sphere_conservation(dx)?;
    let dir = ensure_out_dir(opts)?;
    write_series_csv(&moving_run.series, &dir.join("series.csv"))?;
    let path = out_path(opts, &dir, "solution.csv");
    write_fields_csv(&moving_run.run, &path)?;
    let run = &moving_run.run;
    let mut manifest = Manifest::new("moving", opts);
    record_run(&mut manifest, run);
    manifest.set("dx", dx);
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "moving: expanding sphere, dx = {dx}, final N = {}, final radius {:.4}, {}, {:.1}s",
        run.node_count,
        run.stat("final_radius").unwrap_or(f64::NAN),
        error_summary(run),
        run.wall_seconds
    ))
}

pub fn converge(target: &str, opts: &Opts) -> Result<String, CliError> {
    match target {
        "poisson" => converge_poisson(opts),
        "heat" => converge_heat(opts),
        "moving" => converge_moving(opts),
        other => Err(usage(format!(
            "unknown convergence target '{other}' (poisson, heat, moving)"
        ))),
    }
}

/// resolution,error,eoc ladder CSV; no timings, so reruns are byte-identical.
fn write_ladder_csv(path: &Path, resolutions: &[f64], errors: &[f64]) -> Result<(), CliError> {
    let mut text = String::from("resolution,error,eoc\n");
    for i in 0..resolutions.len() {
        let eoc = if i == 0 || errors[i] <= 0.0 || errors[i - 1] <= 0.0 {
            String::new()
        } else {
            format!(
                "{:.4}",
                (errors[i - 1] / errors[i]).ln() / (resolutions[i - 1] / resolutions[i]).ln()
            )
        };
        text.push_str(&format!("{:e},{:e},{eoc}\n", resolutions[i], errors[i]));
    }
    write_text(path, &text)
}

fn fitted_order(errors: &[f64], resolutions: &[f64]) -> String {
    if errors.iter().any(|&e| e <= 0.0) {
        return "n/a".to_string();
    }
    match fit_order(errors, resolutions) {
        Ok(order) => format!("{order:.2}"),
        Err(_) => "n/a".to_string(),
    }
}

fn converge_poisson(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    let test_name = opts.test.clone().unwrap_or_else(|| "u1".to_string());
    let test = TestFunction::by_name(&test_name)
        .ok_or_else(|| usage(format!("unknown test function '{test_name}' (u1, u2)")))?;
    let config = poisson_config(opts, 2)?;
    let ladder = [0.1, 0.07, 0.05, 0.035];
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    let mut counts = Vec::new();
    for &h in &ladder {
        let run = poisson_bvp(&name, test, &config, &Resolution::Spacing(h))?;
        spacings.push(run.spacing);
        errors.push(run.error_linf.expect("poisson solve reports Linf error"));
        counts.push(run.node_count);
    }
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "convergence.csv");
    write_ladder_csv(&path, &spacings, &errors)?;
    let mut manifest = Manifest::new("converge", opts);
    manifest.set("target", "poisson");
    manifest.set("surface", &name);
    manifest.set("test", &test_name);
    manifest.set_method(&config);
    manifest.set("levels", ladder.len());
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "converge poisson: {name} {test_name}, l = {}, N = {}..{}, rel err Linf {:.3e} -> {:.3e}, fitted order {}",
        config.l,
        counts[0],
        counts[counts.len() - 1],
        errors[0],
        errors[errors.len() - 1],
        fitted_order(&errors, &spacings)
    ))
}

fn converge_heat(opts: &Opts) -> Result<String, CliError> {
    let name = surface_name(opts, "sphere");
    if name != "sphere" {
        return Err(usage("the heat convergence ladder runs on the sphere"));
    }
    let l = opts.l.unwrap_or(4);
    let ladder = [900usize, 1600, 2500];
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in &ladder {
        let run = heat_sphere(l, n)?;
        spacings.push(run.spacing);
        errors.push(run.error_linf.expect("heat run reports Linf error"));
    }
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "convergence.csv");
    let resolutions: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    write_ladder_csv(&path, &resolutions, &errors)?;
    let mut manifest = Manifest::new("converge", opts);
    manifest.set("target", "heat");
    manifest.set("surface", &name);
    manifest.set("l", l);
    manifest.set("levels", ladder.len());
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "converge heat: sphere l = {l}, N = {}..{}, rel err Linf {:.3e} -> {:.3e}, fitted order {}",
        ladder[0],
        ladder[ladder.len() - 1],
        errors[0],
        errors[errors.len() - 1],
        fitted_order(&errors, &spacings)
    ))
}

fn converge_moving(opts: &Opts) -> Result<String, CliError> {
    let ladder = [0.4, 0.2, 0.1];
    let mut errors = Vec::new();
    let mut final_counts = Vec::new();
    for &dx in &ladder {
        let moving_run = expanding_sphere_conservation(dx)?;
        errors.push(
            moving_run
                .run
                .error_linf
                .expect("moving run reports Linf error"),
        );
        final_counts.push(moving_run.run.node_count);
    }
    let dir = ensure_out_dir(opts)?;
    let path = out_path(opts, &dir, "convergence.csv");
    write_ladder_csv(&path, &ladder, &errors)?;
    let mut manifest = Manifest::new("converge", opts);
    manifest.set("target", "moving");
    manifest.set("levels", ladder.len());
    manifest.set("out", path.display());
    manifest.write(&dir)?;
    Ok(format!(
        "converge moving: expanding sphere, dx = {} .. {}, rel err Linf {:.3e} -> {:.3e}, fitted order {}",
        ladder[0],
        ladder[ladder.len() - 1],
        errors[0],
        errors[errors.len() - 1],
        fitted_order(&errors, &ladder)
    ))
}
