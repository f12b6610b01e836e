//! Two-species Turing reaction-diffusion system integrated semi-implicitly
//! (diffusion implicit, reactions explicit) with SBDF time stepping from a
//! small random perturbation of the trivial equilibrium.

use super::{resolve_nodes, ProblemRun, Resolution};
use crate::error::{Result, SurfError};
use crate::geometry::SurfaceNodeSet;
use crate::operators::assemble;
use crate::rbf::{LinearOperatorSpec, PhsPolyConfig};
use crate::timestep::{DirectLu, LinearSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Coefficients of the reaction-diffusion system
/// u_t = delta_u lap u + alpha u (1 - tau1 v^2) + v (1 - tau2 u),
/// v_t = delta_v lap v + beta v + alpha tau1 u v^2 + u (gamma + tau2 v).
#[derive(Clone, Copy, Debug)]
pub struct TuringParams {
    pub delta_u: f64,
    pub delta_v: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub final_time: f64,
}

impl TuringParams {
    /// Parameter set that selects spot patterns.
    pub fn spots() -> Self {
        let delta_v = 4.5e-3;
        TuringParams {
            delta_u: 0.516 * delta_v,
            delta_v,
            alpha: 0.899,
            beta: -0.91,
            gamma: -0.899,
            tau1: 0.02,
            tau2: 0.2,
            final_time: 600.0,
        }
    }

    /// Parameter set that selects stripe patterns.
    pub fn stripes() -> Self {
        let delta_v = 2.1e-3;
        TuringParams {
            delta_u: 0.516 * delta_v,
            delta_v,
            alpha: 0.899,
            beta: -0.91,
            gamma: -0.899,
            tau1: 3.5,
            tau2: 0.0,
            final_time: 6000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_u > 0.0 && self.delta_v > 0.0) {
            return Err(SurfError::invalid(format!(
                "diffusivities must be positive, got delta_u = {}, delta_v = {}",
                self.delta_u, self.delta_v
            )));
        }
        if !(self.final_time > 0.0) {
            return Err(SurfError::invalid(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        Ok(())
    }

    fn reaction_u(&self, u: f64, v: f64) -> f64 {
        self.alpha * u * (1.0 - self.tau1 * v * v) + v * (1.0 - self.tau2 * u)
    }

    fn reaction_v(&self, u: f64, v: f64) -> f64 {
        self.beta * v + self.alpha * self.tau1 * u * v * v + u * (self.gamma + self.tau2 * v)
    }
}

/// Which preset pattern regime to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TuringPattern {
    Spots,
    Stripes,
}

/// Run a preset pattern simulation on a static surface with the standard
/// discretization (degree 6, 168 surface neighbors, dt = 0.02) from a
/// seeded uniform perturbation in [-1/2, 1/2] per species.
pub fn turing_static(
    surface: &str,
    resolution: &Resolution,
    pattern: TuringPattern,
    seed: u64,
) -> Result<ProblemRun> {
    let nodes = resolve_nodes(surface, resolution)?;
    let params = match pattern {
        TuringPattern::Spots => TuringParams::spots(),
        TuringPattern::Stripes => TuringParams::stripes(),
    };
    let config = PhsPolyConfig {
        m: 5,
        l: 6,
        n_s: 168,
        n_perp: 10,
        eps_normal: 0.1,
    };
    turing_run(surface, nodes, &params, &config, 0.02, seed)
}

/// Run the system from a seeded random initial perturbation.
pub fn turing_run(
    surface: &str,
    nodes: SurfaceNodeSet,
    params: &TuringParams,
    config: &PhsPolyConfig,
    dt: f64,
    seed: u64,
) -> Result<ProblemRun> {
    let n = nodes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    turing_with_init(surface, nodes, params, config, dt, u0, v0)
}

/// Run the system from caller-provided initial fields. The first step is
/// SBDF1, every later step SBDF2; both implicit systems are factored once
/// per species up front.
pub fn turing_with_init(
    surface: &str,
    nodes: SurfaceNodeSet,
    params: &TuringParams,
    config: &PhsPolyConfig,
    dt: f64,
    u0: Vec<f64>,
    v0: Vec<f64>,
) -> Result<ProblemRun> {
    let start = Instant::now();
    params.validate()?;
    if !(dt > 0.0) {
        return Err(SurfError::invalid("time step must be positive"));
    }
    let n = nodes.len();
    if u0.len() != n || v0.len() != n {
        return Err(SurfError::invalid(format!(
            "initial fields have {} and {} entries for {} nodes",
            u0.len(),
            v0.len(),
            n
        )));
    }
    let steps = ((params.final_time / dt).round() as usize).max(1);
    let dt = params.final_time / steps as f64;

    let lap = assemble(&nodes, config, &LinearOperatorSpec::Laplacian)?;
    let solver = DirectLu;
    let fac1_u = solver.factor(&lap.matrix.shifted_identity(dt * params.delta_u)?)?;
    let fac1_v = solver.factor(&lap.matrix.shifted_identity(dt * params.delta_v)?)?;
    let (fac2_u, fac2_v) = if steps > 1 {
        (
            Some(solver.factor(&lap.matrix.shifted_identity(2.0 * dt / 3.0 * params.delta_u)?)?),
            Some(solver.factor(&lap.matrix.shifted_identity(2.0 * dt / 3.0 * params.delta_v)?)?),
        )
    } else {
        (None, None)
    };

    let mut u_prev = u0;
    let mut v_prev = v0;
    let mut ru_prev: Vec<f64> = (0..n)
        .map(|i| params.reaction_u(u_prev[i], v_prev[i]))
        .collect();
    let mut rv_prev: Vec<f64> = (0..n)
        .map(|i| params.reaction_v(u_prev[i], v_prev[i]))
        .collect();

    // SBDF1 bootstrap step.
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        rhs[i] = u_prev[i] + dt * ru_prev[i];
    }
    let mut u = fac1_u.solve(&rhs)?;
    for i in 0..n {
        rhs[i] = v_prev[i] + dt * rv_prev[i];
    }
    let mut v = fac1_v.solve(&rhs)?;
    check_pair(&u, &v, 0)?;

    for step in 1..steps {
        let ru: Vec<f64> = (0..n).map(|i| params.reaction_u(u[i], v[i])).collect();
        let rv: Vec<f64> = (0..n).map(|i| params.reaction_v(u[i], v[i])).collect();
        for i in 0..n {
            rhs[i] = (4.0 * u[i] - u_prev[i]) / 3.0 + (2.0 * dt / 3.0) * (2.0 * ru[i] - ru_prev[i]);
        }
        let u_next = fac2_u.as_ref().unwrap().solve(&rhs)?;
        for i in 0..n {
            rhs[i] = (4.0 * v[i] - v_prev[i]) / 3.0 + (2.0 * dt / 3.0) * (2.0 * rv[i] - rv_prev[i]);
        }
        let v_next = fac2_v.as_ref().unwrap().solve(&rhs)?;
        u_prev = std::mem::replace(&mut u, u_next);
        v_prev = std::mem::replace(&mut v, v_next);
        ru_prev = ru;
        rv_prev = rv;
        check_pair(&u, &v, step)?;
    }

    let stats = vec![
        ("u_min".to_string(), fold_min(&u)),
        ("u_max".to_string(), fold_max(&u)),
        ("u_std".to_string(), std_dev(&u)),
        ("v_min".to_string(), fold_min(&v)),
        ("v_max".to_string(), fold_max(&v)),
        ("v_std".to_string(), std_dev(&v)),
        ("max_cond_a".to_string(), lap.diagnostics.max_cond_a),
    ];
    Ok(ProblemRun {
        surface: surface.to_string(),
        node_count: n,
        spacing: nodes.h,
        config: *config,
        dt,
        steps,
        error_l2: None,
        error_linf: None,
        stats,
        fields: vec![("u".to_string(), u), ("v".to_string(), v)],
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn check_pair(u: &[f64], v: &[f64], step: usize) -> Result<()> {
    let bad = |x: &f64| !x.is_finite() || x.abs() > 1e3;
    if u.iter().any(bad) || v.iter().any(bad) {
        return Err(SurfError::BlowUp { step });
    }
    Ok(())
}

fn fold_min(x: &[f64]) -> f64 {
    x.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

fn fold_max(x: &[f64]) -> f64 {
    x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> PhsPolyConfig {
        PhsPolyConfig {
            m: 5,
            l: 4,
            n_s: 70,
            n_perp: 10,
            eps_normal: 0.1,
        }
    }

    #[test]
    fn presets_are_consistent() {
        for p in [TuringParams::spots(), TuringParams::stripes()] {
            p.validate().unwrap();
            assert!((p.delta_u - 0.516 * p.delta_v).abs() <= 1e-12);
            // (0, 0) is an equilibrium of the reactions.
            assert_eq!(p.reaction_u(0.0, 0.0), 0.0);
            assert_eq!(p.reaction_v(0.0, 0.0), 0.0);
        }
        let mut bad = TuringParams::spots();
        bad.delta_v = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn equilibrium_stays_exactly_at_zero() {
        let nodes = resolve_nodes("torus", &Resolution::NodeCount(600)).unwrap();
        let mut params = TuringParams::spots();
        params.final_time = 0.1;
        let n = nodes.len();
        let run = turing_with_init(
            "torus",
            nodes,
            &params,
            &small_config(),
            0.02,
            vec![0.0; n],
            vec![0.0; n],
        )
        .unwrap();
        assert!(run.field("u").unwrap().iter().all(|&x| x == 0.0));
        assert!(run.field("v").unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn short_run_is_finite_and_deterministic() {
        let mut params = TuringParams::spots();
        params.final_time = 2.0;
        let run_once = |seed| {
            let nodes = resolve_nodes("torus", &Resolution::NodeCount(600)).unwrap();
            turing_run("torus", nodes, &params, &small_config(), 0.02, seed).unwrap()
        };
        let a = run_once(7);
        assert_eq!(a.steps, 100);
        assert!(a.stat("u_max").unwrap() <= 10.0);
        assert!(a.stat("u_max").unwrap() > a.stat("u_min").unwrap());
        let b = run_once(7);
        assert_eq!(a.field("u").unwrap(), b.field("u").unwrap());
        assert_eq!(a.field("v").unwrap(), b.field("v").unwrap());
        let c = run_once(8);
        assert_ne!(a.field("u").unwrap(), c.field("u").unwrap());
    }
}
