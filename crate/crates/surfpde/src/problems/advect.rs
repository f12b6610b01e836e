//! Surface advection benchmarks: bells carried once around a closed orbit on
//! the sphere and the torus by steady tangent fields, stabilized with
//! hyperviscosity, and compared against the initial condition.

use super::fields::{
    sample, sphere_cosine_bell, sphere_gaussian_bell, sphere_velocity, torus_cosine_bells,
    torus_gaussian_bells, torus_velocity, validate_field, TORUS_VELOCITY_MAX,
};
use super::{resolve_nodes, ProblemRun, Resolution};
use crate::analysis::{rel_error, ErrorNorm};
use crate::error::{Result, SurfError};
use crate::geometry::SurfaceNodeSet;
use crate::operators::{advection_matrix, hyperviscosity_k, hyperviscosity_matrix, OperatorMatrix};
use crate::rbf::{binomial, PhsPolyConfig};
use crate::timestep::rk4_advance_matrix;
use nalgebra::Vector3;
use std::f64::consts::PI;
use std::time::Instant;

/// Initial bell profile for the sphere transport test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SphereInit {
    CosineBell,
    GaussianBell,
}

/// Initial bell pair for the torus transport test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusInit {
    CosineBells,
    GaussianBells,
}

/// Integrate dq/dt = -A q + H q with RK4, watching for instability: the run
/// aborts as soon as the max norm exceeds ten times its initial value.
/// Returns the final field and the largest growth ratio seen.
pub fn advect_run(
    nodes: &SurfaceNodeSet,
    velocities: &[Vector3<f64>],
    q0: &[f64],
    dt: f64,
    steps: usize,
    config: &PhsPolyConfig,
    eps_hyper: f64,
) -> Result<(Vec<f64>, f64)> {
    validate_field("initial condition", q0)?;
    if q0.len() != nodes.len() {
        return Err(SurfError::invalid(format!(
            "{} initial values for {} nodes",
            q0.len(),
            nodes.len()
        )));
    }
    let a = advection_matrix(nodes, config, velocities)?;
    let h = hyperviscosity_matrix(nodes, config, eps_hyper, None)?;
    let m = OperatorMatrix::linear_combination(&[(-1.0, &a.matrix), (1.0, &h.matrix)])?;

    let norm0 = q0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut q = q0.to_vec();
    let mut max_growth: f64 = 1.0;
    for step in 0..steps {
        q = rk4_advance_matrix(&m, &q, dt, 1)?;
        if norm0 > 0.0 {
            let norm = q.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let growth = norm / norm0;
            max_growth = max_growth.max(growth);
            if growth > 10.0 {
                return Err(SurfError::Instability {
                    step: step + 1,
                    growth,
                });
            }
        }
    }
    Ok((q, max_growth))
}

/// Carry a bell once around the sphere (period 2 pi) by solid-body rotation
/// over the poles and compare against the initial field.
pub fn advect_sphere(init: SphereInit, l: u32, n: usize) -> Result<ProblemRun> {
    let start = Instant::now();
    let nodes = resolve_nodes("sphere", &Resolution::NodeCount(n))?;
    let config = PhsPolyConfig {
        m: 3,
        l,
        n_s: 3 * binomial(l as usize + 3, 3) / 2,
        n_perp: 14,
        eps_normal: 0.2,
    };
    let alpha = 0.5 * PI;
    let velocities: Vec<Vector3<f64>> = nodes
        .points
        .iter()
        .map(|p| sphere_velocity(p, alpha))
        .collect();
    let bell: fn(&Vector3<f64>) -> f64 = match init {
        SphereInit::CosineBell => sphere_cosine_bell,
        SphereInit::GaussianBell => sphere_gaussian_bell,
    };
    let q0 = sample(&nodes.points, bell);
    let steps = (10.0 * (nodes.len() as f64).sqrt()).ceil() as usize;
    let dt = 2.0 * PI / steps as f64;
    let (q, max_growth) = advect_run(&nodes, &velocities, &q0, dt, steps, &config, 1e-3)?;
    finish_transport_run(start, "sphere", nodes, config, dt, steps, q, q0, max_growth)
}

/// Carry a bell pair around the (3,2)-knot orbit on the torus (period 2 pi)
/// and compare against the initial field.
pub fn advect_torus(init: TorusInit, l: u32, n: usize) -> Result<ProblemRun> {
    let start = Instant::now();
    let nodes = resolve_nodes("torus", &Resolution::NodeCount(n))?;
    let config = PhsPolyConfig {
        m: 3,
        l,
        n_s: (2.2 * binomial(l as usize + 3, 3) as f64).floor() as usize,
        n_perp: 14,
        eps_normal: 0.5,
    };
    let velocities: Vec<Vector3<f64>> = nodes.points.iter().map(torus_velocity).collect();
    let bell: fn(&Vector3<f64>) -> f64 = match init {
        TorusInit::CosineBells => torus_cosine_bells,
        TorusInit::GaussianBells => torus_gaussian_bells,
    };
    let q0 = sample(&nodes.points, bell);
    let steps = (10.0 * TORUS_VELOCITY_MAX * (nodes.len() as f64).sqrt()).ceil() as usize;
    let dt = 2.0 * PI / steps as f64;
    let (q, max_growth) = advect_run(&nodes, &velocities, &q0, dt, steps, &config, 1e-2)?;
    finish_transport_run(start, "torus", nodes, config, dt, steps, q, q0, max_growth)
}

#[allow(clippy::too_many_arguments)]
fn finish_transport_run(
    start: Instant,
    surface: &str,
    nodes: SurfaceNodeSet,
    config: PhsPolyConfig,
    dt: f64,
    steps: usize,
    q: Vec<f64>,
    q0: Vec<f64>,
    max_growth: f64,
) -> Result<ProblemRun> {
    let error_l2 = rel_error(&q, &q0, ErrorNorm::L2)?;
    let error_linf = rel_error(&q, &q0, ErrorNorm::Linf)?;
    Ok(ProblemRun {
        surface: surface.to_string(),
        node_count: nodes.len(),
        spacing: nodes.h,
        config,
        dt,
        steps,
        error_l2: Some(error_l2),
        error_linf: Some(error_linf),
        stats: vec![
            ("max_growth".to_string(), max_growth),
            ("hyper_k".to_string(), hyperviscosity_k(config.n_s) as f64),
        ],
        fields: vec![("q".to_string(), q), ("q_initial".to_string(), q0)],
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
