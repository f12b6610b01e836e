//! Time-dependent diffusion benchmarks: free decay on the unit sphere
//! against a spherical-harmonic series, and forced diffusion on the torus
//! against a closed-form polynomial solution.

use super::fields::{heat_sphere_exact, TorusHeatSolution};
use super::{diffusion_config, resolve_nodes, ProblemRun, Resolution};
use crate::analysis::{rel_error, ErrorNorm};
use crate::error::Result;
use crate::rbf::LinearOperatorSpec;
use crate::timestep::{rk4_advance, rk4_advance_matrix};
use std::time::Instant;

/// Diffuse the spherical-harmonic benchmark field on the unit sphere to
/// t = 1/2 with RK4 and compare against the exact series. The step count
/// equals the node count, so dt = 1 / (2 n).
pub fn heat_sphere(l: u32, n: usize) -> Result<ProblemRun> {
    let start = Instant::now();
    let nodes = resolve_nodes("sphere", &Resolution::NodeCount(n))?;
    let config = diffusion_config(l, 14, 0.2);
    let lap = crate::operators::assemble(&nodes, &config, &LinearOperatorSpec::Laplacian)?;

    let u0: Vec<f64> = nodes.points.iter().map(|p| heat_sphere_exact(p, 0.0)).collect();
    let t_final = 0.5;
    let steps = n.max(1);
    let dt = t_final / steps as f64;
    let u = rk4_advance_matrix(&lap.matrix, &u0, dt, steps)?;
    let exact: Vec<f64> = nodes
        .points
        .iter()
        .map(|p| heat_sphere_exact(p, t_final))
        .collect();

    let error_l2 = rel_error(&u, &exact, ErrorNorm::L2)?;
    let error_linf = rel_error(&u, &exact, ErrorNorm::Linf)?;
    Ok(ProblemRun {
        surface: "sphere".to_string(),
        node_count: nodes.len(),
        spacing: nodes.h,
        config,
        dt,
        steps,
        error_l2: Some(error_l2),
        error_linf: Some(error_linf),
        stats: vec![("max_cond_a".to_string(), lap.diagnostics.max_cond_a)],
        fields: vec![("u".to_string(), u), ("u_exact".to_string(), exact)],
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Forced diffusion u_t = lap_S u + f on the torus, integrated with RK4 to
/// t = 1/5 and compared against the exact decaying polynomial solution.
pub fn forced_heat_torus(l: u32, n: usize) -> Result<ProblemRun> {
    let start = Instant::now();
    let nodes = resolve_nodes("torus", &Resolution::NodeCount(n))?;
    let config = diffusion_config(l, 14, 0.2);
    let lap = crate::operators::assemble(&nodes, &config, &LinearOperatorSpec::Laplacian)?;

    let sol = TorusHeatSolution::new();
    let u0: Vec<f64> = nodes.points.iter().map(|p| sol.value(0.0, p)).collect();
    let profile: Vec<f64> = nodes.points.iter().map(|p| sol.forcing_profile(p)).collect();
    let t_final = 0.2;
    let steps = ((0.4 * nodes.len() as f64).round() as usize).max(1);
    let dt = t_final / steps as f64;
    let u = rk4_advance(
        |t, u, out| {
            lap.matrix.matvec_into(u, out);
            let decay = (-5.0 * t).exp();
            for (o, g) in out.iter_mut().zip(profile.iter()) {
                *o += decay * g;
            }
        },
        &u0,
        dt,
        steps,
    )?;
    let exact: Vec<f64> = nodes.points.iter().map(|p| sol.value(t_final, p)).collect();

    let error_l2 = rel_error(&u, &exact, ErrorNorm::L2)?;
    let error_linf = rel_error(&u, &exact, ErrorNorm::Linf)?;
    Ok(ProblemRun {
        surface: "torus".to_string(),
        node_count: nodes.len(),
        spacing: nodes.h,
        config,
        dt,
        steps,
        error_l2: Some(error_l2),
        error_linf: Some(error_linf),
        stats: vec![("max_cond_a".to_string(), lap.diagnostics.max_cond_a)],
        fields: vec![("u".to_string(), u), ("u_exact".to_string(), exact)],
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{eoc, fit_order};
    use crate::problems::fields::torus_point;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_initial_data_stays_exactly_zero() {
        let nodes = resolve_nodes("sphere", &Resolution::NodeCount(300)).unwrap();
        let config = diffusion_config(2, 4, 0.2);
        let lap = crate::operators::assemble(&nodes, &config, &LinearOperatorSpec::Laplacian)
            .unwrap();
        let u = rk4_advance_matrix(&lap.matrix, &vec![0.0; nodes.len()], 0.01, 20).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn torus_solution_value_at_outer_equator() {
        // At (4/3, 0, 0) the initial field reduces to (4/3)^7 / 8.
        let sol = TorusHeatSolution::new();
        let p = Vector3::new(4.0 / 3.0, 0.0, 0.0);
        assert!((sol.value(0.0, &p) - 2048.0 / 2187.0).abs() <= 1e-14);
        assert!((sol.value(0.2, &p) - (-1.0f64).exp() * 2048.0 / 2187.0).abs() <= 1e-14);
    }

    #[test]
    fn torus_forcing_matches_closest_point_extension() {
        // Independent oracle for the forcing: the closest-point extension of
        // the solution is constant along torus normals, so its plain ambient
        // FD Laplacian at a surface point equals the surface Laplacian.
        let sol = TorusHeatSolution::new();
        let cp = |q: &Vector3<f64>| {
            let rho = (q.x * q.x + q.y * q.y).sqrt();
            let c = Vector3::new(q.x / rho, q.y / rho, 0.0);
            let d = q - c;
            c + d / d.norm() / 3.0
        };
        let u_ext = |q: &Vector3<f64>| sol.value(0.0, &cp(q));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pts: Vec<Vector3<f64>> = (0..100)
            .map(|_| {
                torus_point(
                    rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                    rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                )
            })
            .collect();
        let gmax = pts
            .iter()
            .map(|p| sol.forcing_profile(p).abs())
            .fold(0.0f64, f64::max);
        let d = 5e-3;
        for p in &pts {
            let mut lap = 0.0;
            for axis in 0..3 {
                let f = |s: f64| {
                    let mut q = *p;
                    q[axis] = s;
                    u_ext(&q)
                };
                let x = p[axis];
                lap += (-f(x + 2.0 * d) + 16.0 * f(x + d) - 30.0 * f(x)
                    + 16.0 * f(x - d)
                    - f(x - 2.0 * d))
                    / (12.0 * d * d);
            }
            let g_fd = -5.0 * sol.value(0.0, p) - lap;
            let g = sol.forcing_profile(p);
            assert!(
                (g - g_fd).abs() <= 2e-4 * gmax,
                "forcing mismatch at {p:?}: analytic {g}, FD {g_fd}"
            );
        }
    }

    #[test]
    fn sphere_diffusion_converges() {
        // Pairwise rates wobble on scattered nodes; the least-squares slope
        // over three refinements is the stable measurement.
        let runs: Vec<_> = [900, 1600, 2500]
            .iter()
            .map(|&n| heat_sphere(4, n).unwrap())
            .collect();
        let errors: Vec<f64> = runs.iter().map(|r| r.error_l2.unwrap()).collect();
        let hs: Vec<f64> = runs.iter().map(|r| r.spacing).collect();
        assert!(
            errors.windows(2).all(|w| w[1] < w[0]),
            "errors not monotone: {errors:?}"
        );
        let order = fit_order(&errors, &hs).unwrap();
        assert!(order >= 3.0, "fitted order {order} (errors {errors:?})");
    }

    #[test]
    fn torus_order_tracks_polynomial_degree() {
        let run = |l, n| {
            let r = forced_heat_torus(l, n).unwrap();
            (r.error_l2.unwrap(), r.spacing)
        };
        let (e3a, h3a) = run(3, 1000);
        let (e3b, h3b) = run(3, 2000);
        let (e6a, h6a) = run(6, 1000);
        let (e6b, h6b) = run(6, 2000);
        let r3 = eoc(&[e3a, e3b], &[h3a, h3b]).unwrap()[0];
        let r6 = eoc(&[e6a, e6b], &[h6a, h6b]).unwrap()[0];
        assert!(
            r6 - r3 >= 1.0,
            "degree 6 order {r6} should clearly beat degree 3 order {r3}"
        );
    }
}
