//! Steady surface Poisson boundary-value problems with manufactured
//! solutions: -lap_S u = f on the upper half of the surface (z >= 0), with
//! Dirichlet data on the lower half.

use super::fields::{SurfaceGeom, TestFunction};
use super::{resolve_nodes, ProblemRun, Resolution};
use crate::analysis::{rel_error, ErrorNorm};
use crate::error::{Result, SurfError};
use crate::operators::{assemble, OperatorMatrix};
use crate::rbf::{LinearOperatorSpec, PhsPolyConfig};
use crate::timestep::default_solver;
use std::time::Instant;

/// Solve the manufactured boundary-value problem on one of the experiment
/// surfaces and report errors against the exact field.
pub fn poisson_bvp(
    surface: &str,
    test_function: TestFunction,
    config: &PhsPolyConfig,
    resolution: &Resolution,
) -> Result<ProblemRun> {
    let start = Instant::now();
    let geom = SurfaceGeom::by_name(surface).ok_or_else(|| {
        SurfError::invalid(format!(
            "no analytic geometry for surface '{surface}' (expected sphere, torus, or tooth)"
        ))
    })?;
    let nodes = resolve_nodes(surface, resolution)?;
    let n = nodes.len();
    let lap = assemble(&nodes, config, &LinearOperatorSpec::Laplacian)?;

    let mut rows = Vec::with_capacity(n);
    let mut rhs = vec![0.0; n];
    let mut exact = vec![0.0; n];
    let mut pde_rows = 0usize;
    for i in 0..n {
        let p = nodes.points[i];
        let (u, grad, hess) = test_function.jet(&p);
        exact[i] = u;
        if p.z >= 0.0 {
            let (cols, vals) = lap.matrix.row(i);
            rows.push((cols.to_vec(), vals.iter().map(|v| -v).collect()));
            rhs[i] = -geom.surface_laplacian(&p, &grad, &hess);
            pde_rows += 1;
        } else {
            rows.push((vec![i], vec![1.0]));
            rhs[i] = u;
        }
    }
    if pde_rows == 0 || pde_rows == n {
        return Err(SurfError::degenerate(
            "the z = 0 split left one side of the boundary-value problem empty",
        ));
    }
    let system = OperatorMatrix::from_rows(n, rows)?;
    let solver = default_solver(n);
    let u = solver.factor(&system)?.solve(&rhs)?;

    let error_l2 = rel_error(&u, &exact, ErrorNorm::L2)?;
    let error_linf = rel_error(&u, &exact, ErrorNorm::Linf)?;
    Ok(ProblemRun {
        surface: surface.to_string(),
        node_count: n,
        spacing: nodes.h,
        config: *config,
        dt: 0.0,
        steps: 0,
        error_l2: Some(error_l2),
        error_linf: Some(error_linf),
        stats: vec![
            ("pde_rows".to_string(), pde_rows as f64),
            ("max_cond_a".to_string(), lap.diagnostics.max_cond_a),
        ],
        fields: vec![("u".to_string(), u), ("u_exact".to_string(), exact)],
        nodes,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
