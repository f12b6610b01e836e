//! Time integrators and sparse linear solvers.

use crate::error::{Result, SurfError};
use crate::operators::OperatorMatrix;
use faer::prelude::SpSolver;
use std::sync::atomic::{AtomicUsize, Ordering};

/// A factored (or preconditioned) linear system ready for repeated solves.
pub trait Factorized: Send + Sync {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;
    /// Iteration count of the most recent solve; `None` for direct methods.
    fn iterations(&self) -> Option<usize>;
}

/// A linear-solver strategy: factors a sparse matrix once, solves many times.
pub trait LinearSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn factor(&self, matrix: &OperatorMatrix) -> Result<Box<dyn Factorized>>;
}

/// Sparse direct LU.
pub struct DirectLu;

struct DirectLuFactors {
    lu: faer::sparse::linalg::solvers::Lu<u32, f64>,
    matrix: OperatorMatrix,
}

impl LinearSolver for DirectLu {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn factor(&self, matrix: &OperatorMatrix) -> Result<Box<dyn Factorized>> {
        if matrix.nrows != matrix.ncols {
            return Err(SurfError::invalid("linear solver needs a square matrix"));
        }
        let triplets: Vec<(u32, u32, f64)> = (0..matrix.nrows)
            .flat_map(|i| {
                let (cols, vals) = matrix.row(i);
                cols.iter()
                    .zip(vals.iter())
                    .map(move |(&j, &v)| (i as u32, j as u32, v))
                    .collect::<Vec<_>>()
            })
            .collect();
        let sp = faer::sparse::SparseColMat::<u32, f64>::try_new_from_triplets(
            matrix.nrows,
            matrix.ncols,
            &triplets,
        )
        .map_err(|e| SurfError::SolverFailure(format!("sparse assembly: {e:?}")))?;
        // The factorization panics on an exactly zero pivot; contain that so a
        // singular matrix reports as a solver error instead of aborting.
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| sp.sp_lu()))
            .map_err(|_| {
                SurfError::SolverFailure("sparse LU hit a zero pivot (matrix singular?)".into())
            })?
            .map_err(|e| SurfError::SolverFailure(format!("sparse LU: {e:?}")))?;
        Ok(Box::new(DirectLuFactors {
            lu,
            matrix: matrix.clone(),
        }))
    }
}

impl Factorized for DirectLuFactors {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.nrows;
        if b.len() != n {
            return Err(SurfError::invalid("right-hand side length mismatch"));
        }
        let mut rhs = faer::Mat::<f64>::zeros(n, 1);
        for (i, &v) in b.iter().enumerate() {
            rhs[(i, 0)] = v;
        }
        self.lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        // A singular or near-singular factorization silently produces garbage;
        // verify the residual so failure surfaces as an error.
        let ax = self.matrix.matvec(&x);
        let mut r: f64 = 0.0;
        let mut bn: f64 = 0.0;
        let mut xn: f64 = 0.0;
        for i in 0..n {
            r = r.max((ax[i] - b[i]).abs());
            bn = bn.max(b[i].abs());
            xn = xn.max(x[i].abs());
        }
        let row_norm = (0..n)
            .map(|i| self.matrix.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        if !(r <= 1e-8 * (bn + row_norm * xn).max(1e-300)) {
            return Err(SurfError::SolverFailure(format!(
                "direct solve residual {r:.2e} exceeds tolerance (matrix singular?)"
            )));
        }
        Ok(x)
    }

    fn iterations(&self) -> Option<usize> {
        None
    }
}

/// BiCGSTAB with ILU(0) preconditioning, tolerance 1e-11 on the relative
/// residual, iteration cap 10 N.
pub struct BicgstabIlu0 {
    pub tol: f64,
}

impl Default for BicgstabIlu0 {
    fn default() -> Self {
        BicgstabIlu0 { tol: 1e-11 }
    }
}

struct Ilu0 {
    matrix: OperatorMatrix,
    /// Factor values on the matrix pattern: strictly-lower entries hold L
    /// (unit diagonal implied), diagonal and upper hold U.
    lu_values: Vec<f64>,
    diag_pos: Vec<usize>,
    last_iterations: AtomicUsize,
    tol: f64,
}

impl LinearSolver for BicgstabIlu0 {
    fn name(&self) -> &'static str {
        "bicgstab"
    }

    fn factor(&self, matrix: &OperatorMatrix) -> Result<Box<dyn Factorized>> {
        if matrix.nrows != matrix.ncols {
            return Err(SurfError::invalid("linear solver needs a square matrix"));
        }
        let n = matrix.nrows;
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (a, b) = (matrix.row_ptr[i], matrix.row_ptr[i + 1]);
            for k in a..b {
                if matrix.col_idx[k] == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(SurfError::SolverFailure(format!(
                    "ILU(0) needs a structurally present diagonal; row {i} has none"
                )));
            }
        }
        let mut lu = matrix.values.clone();
        // Standard IKJ ILU(0) restricted to the sparsity pattern.
        for i in 0..n {
            let (ra, rb) = (matrix.row_ptr[i], matrix.row_ptr[i + 1]);
            for kk in ra..rb {
                let k = matrix.col_idx[kk];
                if k >= i {
                    break;
                }
                let ukk = lu[diag_pos[k]];
                if ukk == 0.0 {
                    return Err(SurfError::SolverFailure(format!(
                        "zero pivot in ILU(0) at row {k}"
                    )));
                }
                let lik = lu[kk] / ukk;
                lu[kk] = lik;
                // Subtract lik * U(k, j) for j in this row's pattern beyond k.
                let (ka, kb) = (matrix.row_ptr[k], matrix.row_ptr[k + 1]);
                let mut p = kk + 1;
                for kj in ka..kb {
                    let j = matrix.col_idx[kj];
                    if j <= k {
                        continue;
                    }
                    // Advance within row i (columns sorted) to find j.
                    while p < rb && matrix.col_idx[p] < j {
                        p += 1;
                    }
                    if p < rb && matrix.col_idx[p] == j {
                        lu[p] -= lik * lu[kj];
                    }
                }
            }
            if lu[diag_pos[i]] == 0.0 {
                return Err(SurfError::SolverFailure(format!(
                    "zero pivot in ILU(0) at row {i}"
                )));
            }
        }
        Ok(Box::new(Ilu0 {
            matrix: matrix.clone(),
            lu_values: lu,
            diag_pos,
            last_iterations: AtomicUsize::new(0),
            tol: self.tol,
        }))
    }
}

impl Ilu0 {
    /// Apply the preconditioner: solve L U z = r.
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.matrix.nrows;
        // Forward: L y = r (unit diagonal).
        for i in 0..n {
            let (a, b) = (self.matrix.row_ptr[i], self.matrix.row_ptr[i + 1]);
            let mut acc = r[i];
            for k in a..b {
                let j = self.matrix.col_idx[k];
                if j >= i {
                    break;
                }
                acc -= self.lu_values[k] * z[j];
            }
            z[i] = acc;
        }
        // Backward: U z = y.
        for i in (0..n).rev() {
            let b = self.matrix.row_ptr[i + 1];
            let mut acc = z[i];
            for k in (self.diag_pos[i] + 1)..b {
                acc -= self.lu_values[k] * z[self.matrix.col_idx[k]];
            }
            z[i] = acc / self.lu_values[self.diag_pos[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Factorized for Ilu0 {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.nrows;
        if b.len() != n {
            return Err(SurfError::invalid("right-hand side length mismatch"));
        }
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            self.last_iterations.store(0, Ordering::Relaxed);
            return Ok(vec![0.0; n]);
        }
        let cap = 10 * n;
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let r_hat = r.clone();
        let mut rho = 1.0f64;
        let mut alpha = 1.0f64;
        let mut omega = 1.0f64;
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut p_hat = vec![0.0; n];
        let mut s_hat = vec![0.0; n];
        let mut t = vec![0.0; n];
        for it in 1..=cap {
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < 1e-300 {
                return Err(SurfError::SolverFailure(format!(
                    "BiCGSTAB breakdown (rho) at iteration {it}"
                )));
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            self.apply(&p, &mut p_hat);
            self.matrix.matvec_into(&p_hat, &mut v);
            let denom = dot(&r_hat, &v);
            if denom.abs() < 1e-300 {
                return Err(SurfError::SolverFailure(format!(
                    "BiCGSTAB breakdown (r_hat . v) at iteration {it}"
                )));
            }
            alpha = rho / denom;
            // s = r - alpha v (reuse r).
            for i in 0..n {
                r[i] -= alpha * v[i];
            }
            if norm2(&r) <= self.tol * b_norm {
                for i in 0..n {
                    x[i] += alpha * p_hat[i];
                }
                self.last_iterations.store(it, Ordering::Relaxed);
                return Ok(x);
            }
            self.apply(&r, &mut s_hat);
            self.matrix.matvec_into(&s_hat, &mut t);
            let tt = dot(&t, &t);
            if tt < 1e-300 {
                return Err(SurfError::SolverFailure(format!(
                    "BiCGSTAB breakdown (t . t) at iteration {it}"
                )));
            }
            omega = dot(&t, &r) / tt;
            for i in 0..n {
                x[i] += alpha * p_hat[i] + omega * s_hat[i];
                r[i] -= omega * t[i];
            }
            if norm2(&r) <= self.tol * b_norm {
                self.last_iterations.store(it, Ordering::Relaxed);
                return Ok(x);
            }
            if omega.abs() < 1e-300 {
                return Err(SurfError::SolverFailure(format!(
                    "BiCGSTAB breakdown (omega) at iteration {it}"
                )));
            }
        }
        Err(SurfError::SolverFailure(format!(
            "BiCGSTAB did not converge within {cap} iterations"
        )))
    }

    fn iterations(&self) -> Option<usize> {
        Some(self.last_iterations.load(Ordering::Relaxed))
    }
}

/// All available solver strategies.
pub fn solver_registry() -> Vec<Box<dyn LinearSolver>> {
    vec![Box::new(DirectLu), Box::new(BicgstabIlu0::default())]
}

pub fn solver_by_name(name: &str) -> Option<Box<dyn LinearSolver>> {
    solver_registry().into_iter().find(|s| s.name() == name)
}

/// Default strategy: direct factorization up to 20,000 unknowns, iterative
/// beyond.
pub fn default_solver(n: usize) -> Box<dyn LinearSolver> {
    if n <= 20_000 {
        Box::new(DirectLu)
    } else {
        Box::new(BicgstabIlu0::default())
    }
}

/// One-shot solve by method name ("direct" or "bicgstab").
pub fn linear_solve(
    matrix: &OperatorMatrix,
    b: &[f64],
    method: &str,
    tol: f64,
) -> Result<Vec<f64>> {
    let solver: Box<dyn LinearSolver> = match method {
        "direct" => Box::new(DirectLu),
        "bicgstab" => Box::new(BicgstabIlu0 { tol }),
        other => {
            return Err(SurfError::invalid(format!(
                "unknown solver '{other}' (expected 'direct' or 'bicgstab')"
            )))
        }
    };
    solver.factor(matrix)?.solve(b)
}

fn check_finite(u: &[f64], step: usize) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SurfError::BlowUp { step })
    }
}

/// Classical four-stage Runge-Kutta on du/dt = rhs(t, u); returns the state
/// after `steps` steps of size `dt`.
pub fn rk4_advance<F>(mut rhs: F, u0: &[f64], dt: f64, steps: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(SurfError::invalid("time step must be positive"));
    }
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    for step in 0..steps {
        let t = step as f64 * dt;
        rhs(t, &u, &mut k1);
        for i in 0..n {
            stage[i] = u[i] + 0.5 * dt * k1[i];
        }
        rhs(t + 0.5 * dt, &stage, &mut k2);
        for i in 0..n {
            stage[i] = u[i] + 0.5 * dt * k2[i];
        }
        rhs(t + 0.5 * dt, &stage, &mut k3);
        for i in 0..n {
            stage[i] = u[i] + dt * k3[i];
        }
        rhs(t + dt, &stage, &mut k4);
        for i in 0..n {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(&u, step)?;
    }
    Ok(u)
}

/// RK4 on the autonomous linear system du/dt = M u.
pub fn rk4_advance_matrix(
    matrix: &OperatorMatrix,
    u0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    rk4_advance(
        |_t, u, out| matrix.matvec_into(u, out),
        u0,
        dt,
        steps,
    )
}

/// Semi-implicit BDF advance for du/dt = A u + f(t, u) with A implicit.
/// `order` 1 runs SBDF1 throughout; `order` 2 takes one SBDF1 bootstrap step
/// and then SBDF2.
pub fn sbdf_advance<F>(
    a: &OperatorMatrix,
    mut f_explicit: F,
    u0: &[f64],
    dt: f64,
    steps: usize,
    order: usize,
    solver: &dyn LinearSolver,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(SurfError::invalid("time step must be positive"));
    }
    if order != 1 && order != 2 {
        return Err(SurfError::invalid(format!(
            "SBDF order must be 1 or 2, got {order}"
        )));
    }
    let n = u0.len();
    let sys1 = a.shifted_identity(dt)?;
    let fac1 = solver.factor(&sys1)?;
    let fac2 = if order == 2 && steps > 1 {
        Some(solver.factor(&a.shifted_identity(2.0 * dt / 3.0)?)?)
    } else {
        None
    };
    let mut u_prev = u0.to_vec();
    let mut f_prev = vec![0.0; n];
    f_explicit(0.0, &u_prev, &mut f_prev);
    if steps == 0 {
        return Ok(u_prev);
    }
    // SBDF1 step (bootstrap for order 2).
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        rhs[i] = u_prev[i] + dt * f_prev[i];
    }
    let mut u = fac1.solve(&rhs)?;
    check_finite(&u, 0)?;
    let mut f_cur = vec![0.0; n];
    for step in 1..steps {
        let t = step as f64 * dt;
        f_explicit(t, &u, &mut f_cur);
        match order {
            1 => {
                for i in 0..n {
                    rhs[i] = u[i] + dt * f_cur[i];
                }
                let next = fac1.solve(&rhs)?;
                u_prev.copy_from_slice(&u);
                u = next;
            }
            _ => {
                for i in 0..n {
                    rhs[i] = (4.0 * u[i] - u_prev[i]) / 3.0
                        + (2.0 * dt / 3.0) * (2.0 * f_cur[i] - f_prev[i]);
                }
                let next = fac2.as_ref().unwrap().solve(&rhs)?;
                u_prev.copy_from_slice(&u);
                u = next;
            }
        }
        f_prev.copy_from_slice(&f_cur);
        check_finite(&u, step)?;
    }
    Ok(u)
}

/// First-order IMEX Euler for du/dt = A u + g(t, u) with A implicit:
/// (I - dt A) u^{n+1} = u^n + dt g(t_n, u^n).
pub fn imex_euler_advance<G>(
    a: &OperatorMatrix,
    mut g_explicit: G,
    u0: &[f64],
    dt: f64,
    steps: usize,
    solver: &dyn LinearSolver,
) -> Result<Vec<f64>>
where
    G: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(SurfError::invalid("time step must be positive"));
    }
    let n = u0.len();
    let sys = a.shifted_identity(dt)?;
    let fac = solver.factor(&sys)?;
    let mut u = u0.to_vec();
    let mut g = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for step in 0..steps {
        let t = step as f64 * dt;
        g_explicit(t, &u, &mut g);
        for i in 0..n {
            rhs[i] = u[i] + dt * g[i];
        }
        u = fac.solve(&rhs)?;
        check_finite(&u, step)?;
    }
    Ok(u)
}

/// Concatenate four blocks into the implicit system
/// [I - dt A11, -dt A12; -dt A21, I - dt A22].
fn block_system(
    a11: &OperatorMatrix,
    a12: &OperatorMatrix,
    a21: &OperatorMatrix,
    a22: &OperatorMatrix,
    dt: f64,
) -> Result<OperatorMatrix> {
    let n = a11.nrows;
    for (name, m) in [("A11", a11), ("A12", a12), ("A21", a21), ("A22", a22)] {
        if m.nrows != n || m.ncols != n {
            return Err(SurfError::invalid(format!(
                "block {name} is {}x{}, expected {n}x{n}",
                m.nrows, m.ncols
            )));
        }
    }
    let mut rows: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (c1, v1) = a11.row(i);
        let (c2, v2) = a12.row(i);
        let mut cols: Vec<usize> = Vec::with_capacity(c1.len() + c2.len() + 1);
        let mut vals: Vec<f64> = Vec::with_capacity(cols.capacity());
        let mut has_diag = false;
        for (&j, &v) in c1.iter().zip(v1.iter()) {
            let mut val = -dt * v;
            if j == i {
                val += 1.0;
                has_diag = true;
            }
            cols.push(j);
            vals.push(val);
        }
        if !has_diag {
            cols.push(i);
            vals.push(1.0);
        }
        for (&j, &v) in c2.iter().zip(v2.iter()) {
            cols.push(n + j);
            vals.push(-dt * v);
        }
        rows.push((cols, vals));
    }
    for i in 0..n {
        let (c1, v1) = a21.row(i);
        let (c2, v2) = a22.row(i);
        let mut cols: Vec<usize> = Vec::with_capacity(c1.len() + c2.len() + 1);
        let mut vals: Vec<f64> = Vec::with_capacity(cols.capacity());
        for (&j, &v) in c1.iter().zip(v1.iter()) {
            cols.push(j);
            vals.push(-dt * v);
        }
        let mut has_diag = false;
        for (&j, &v) in c2.iter().zip(v2.iter()) {
            let mut val = -dt * v;
            if j == i {
                val += 1.0;
                has_diag = true;
            }
            cols.push(n + j);
            vals.push(val);
        }
        if !has_diag {
            cols.push(n + i);
            vals.push(1.0);
        }
        rows.push((cols, vals));
    }
    OperatorMatrix::from_rows(2 * n, rows)
}

/// First-order IMEX Euler for the coupled system
/// du/dt = A11 u + A12 w + g1(t, u, w), dw/dt = A21 u + A22 w + g2(t, u, w),
/// solved monolithically as a 2N x 2N system per step.
#[allow(clippy::too_many_arguments)]
pub fn imex_block_advance<G1, G2>(
    a11: &OperatorMatrix,
    a12: &OperatorMatrix,
    a21: &OperatorMatrix,
    a22: &OperatorMatrix,
    mut g1: G1,
    mut g2: G2,
    u0: &[f64],
    w0: &[f64],
    dt: f64,
    steps: usize,
    solver: &dyn LinearSolver,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    G1: FnMut(f64, &[f64], &[f64], &mut [f64]),
    G2: FnMut(f64, &[f64], &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(SurfError::invalid("time step must be positive"));
    }
    let n = u0.len();
    if w0.len() != n {
        return Err(SurfError::invalid("component length mismatch"));
    }
    let sys = block_system(a11, a12, a21, a22, dt)?;
    let fac = solver.factor(&sys)?;
    let mut u = u0.to_vec();
    let mut w = w0.to_vec();
    let mut gu = vec![0.0; n];
    let mut gw = vec![0.0; n];
    let mut rhs = vec![0.0; 2 * n];
    for step in 0..steps {
        let t = step as f64 * dt;
        g1(t, &u, &w, &mut gu);
        g2(t, &u, &w, &mut gw);
        for i in 0..n {
            rhs[i] = u[i] + dt * gu[i];
            rhs[n + i] = w[i] + dt * gw[i];
        }
        let sol = fac.solve(&rhs)?;
        u.copy_from_slice(&sol[..n]);
        w.copy_from_slice(&sol[n..]);
        check_finite(&u, step)?;
        check_finite(&w, step)?;
    }
    Ok((u, w))
}

/// RK4 amplification factor |R(z)| for z = dt * lambda.
pub fn rk4_amplification(re: f64, im: f64) -> f64 {
    // R(z) = 1 + z + z^2/2 + z^3/6 + z^4/24 via Horner in complex arithmetic.
    let (mut ar, mut ai) = (1.0 / 24.0, 0.0);
    for c in [1.0 / 6.0, 0.5, 1.0, 1.0] {
        let nr = ar * re - ai * im + c;
        let ni = ar * im + ai * re;
        ar = nr;
        ai = ni;
    }
    (ar * ar + ai * ai).sqrt()
}

/// Outcome of checking a spectrum against the RK4 stability region.
#[derive(Clone, Copy, Debug)]
pub struct StabilityReport {
    pub all_inside: bool,
    /// The eigenvalue (already scaled by dt) with the largest amplification.
    pub worst_z: (f64, f64),
    pub worst_modulus: f64,
}

/// Check dt-scaled eigenvalues against |R(z)| <= 1.
pub fn rk4_stability_check(eigenvalues: &[(f64, f64)], dt: f64) -> StabilityReport {
    let mut worst_z = (0.0, 0.0);
    let mut worst = 0.0f64;
    for &(re, im) in eigenvalues {
        let z = (dt * re, dt * im);
        let a = rk4_amplification(z.0, z.1);
        if a > worst {
            worst = a;
            worst_z = z;
        }
    }
    StabilityReport {
        all_inside: worst <= 1.0,
        worst_z,
        worst_modulus: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_to_operator(a: &DMatrix<f64>) -> OperatorMatrix {
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..a.nrows())
            .map(|i| {
                let cols: Vec<usize> = (0..a.ncols()).collect();
                let vals: Vec<f64> = (0..a.ncols()).map(|j| a[(i, j)]).collect();
                (cols, vals)
            })
            .collect();
        OperatorMatrix::from_rows(a.ncols(), rows).unwrap()
    }

    /// Matrix exponential by scaling and squaring with a Taylor series.
    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let norm = a.iter().map(|v| v.abs()).fold(0.0f64, f64::max) * a.nrows() as f64;
        let s = (norm.log2().ceil().max(0.0)) as usize + 1;
        let scaled = a / 2f64.powi(s as i32);
        let n = a.nrows();
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = DMatrix::<f64>::identity(n, n);
        for k in 1..30 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * sum.clone();
        }
        sum
    }

    #[test]
    fn rk4_zero_rhs_keeps_state() {
        let u0 = vec![1.0, -2.0, 3.5];
        let u = rk4_advance(|_t, _u, out| out.fill(0.0), &u0, 0.1, 25).unwrap();
        assert_eq!(u, u0);
    }

    #[test]
    fn rk4_scalar_exponential() {
        let m = dense_to_operator(&DMatrix::from_element(1, 1, -1.0));
        let u = rk4_advance_matrix(&m, &[1.0], 0.1, 10).unwrap();
        assert!((u[0] - (-1.0f64).exp()).abs() <= 1e-5);
    }

    #[test]
    fn rk4_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 5;
        let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        // Stable: symmetric negative definite plus a small skew part.
        let a = -(&b * b.transpose()) - DMatrix::identity(n, n) * 0.5
            + (&b - b.transpose()) * 0.3;
        let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = dense_to_operator(&a);
        let got = rk4_advance_matrix(&m, &u0, 0.01, 100).unwrap();
        let want = expm(&a) * DMatrix::from_column_slice(n, 1, &u0);
        for i in 0..n {
            assert!(
                (got[i] - want[(i, 0)]).abs() <= 1e-6,
                "component {i}: {} vs {}",
                got[i],
                want[(i, 0)]
            );
        }
    }

    #[test]
    fn rk4_blowup_reports_step() {
        let m = dense_to_operator(&DMatrix::from_element(1, 1, 1e4));
        match rk4_advance_matrix(&m, &[1.0], 1.0, 100) {
            Err(SurfError::BlowUp { step }) => assert!(step < 100),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn sbdf_constant_when_inert() {
        let a = dense_to_operator(&DMatrix::zeros(3, 3));
        let u0 = vec![4.0, 5.0, 6.0];
        let u = sbdf_advance(&a, |_t, _u, f| f.fill(0.0), &u0, 0.1, 20, 2, &DirectLu).unwrap();
        for (x, y) in u.iter().zip(u0.iter()) {
            assert!((x - y).abs() <= 1e-13);
        }
    }

    #[test]
    fn sbdf2_second_order_on_exponential() {
        let a = dense_to_operator(&DMatrix::from_element(1, 1, -1.0));
        let exact = (-1.0f64).exp();
        let mut errs = Vec::new();
        for steps in [50usize, 100, 200] {
            let dt = 1.0 / steps as f64;
            let u = sbdf_advance(&a, |_t, _u, f| f.fill(0.0), &[1.0], dt, steps, 2, &DirectLu)
                .unwrap();
            errs.push((u[0] - exact).abs());
        }
        let e1 = (errs[0] / errs[1]).log2();
        let e2 = (errs[1] / errs[2]).log2();
        assert!((1.8..=2.2).contains(&e1), "e.o.c. {e1}");
        assert!((1.8..=2.2).contains(&e2), "e.o.c. {e2}");
    }

    #[test]
    fn sbdf1_first_order_on_exponential() {
        let a = dense_to_operator(&DMatrix::from_element(1, 1, -1.0));
        let exact = (-1.0f64).exp();
        let mut errs = Vec::new();
        for steps in [50usize, 100] {
            let dt = 1.0 / steps as f64;
            let u = sbdf_advance(&a, |_t, _u, f| f.fill(0.0), &[1.0], dt, steps, 1, &DirectLu)
                .unwrap();
            errs.push((u[0] - exact).abs());
        }
        let e = (errs[0] / errs[1]).log2();
        assert!((0.8..=1.2).contains(&e), "e.o.c. {e}");
    }

    #[test]
    fn imex_euler_identity_and_order() {
        let a = dense_to_operator(&DMatrix::zeros(2, 2));
        let u0 = vec![1.5, -2.5];
        let u = imex_euler_advance(&a, |_t, _u, g| g.fill(0.0), &u0, 0.3, 1, &DirectLu).unwrap();
        for (x, y) in u.iter().zip(u0.iter()) {
            assert!((x - y).abs() <= 1e-14);
        }
        let a = dense_to_operator(&DMatrix::from_element(1, 1, -1.0));
        let exact = (-1.0f64).exp();
        let mut errs = Vec::new();
        for steps in [50usize, 100] {
            let dt = 1.0 / steps as f64;
            let u = imex_euler_advance(&a, |_t, _u, g| g.fill(0.0), &[1.0], dt, steps, &DirectLu)
                .unwrap();
            errs.push((u[0] - exact).abs());
        }
        let e = (errs[0] / errs[1]).log2();
        assert!((0.8..=1.2).contains(&e), "e.o.c. {e}");
    }

    #[test]
    fn imex_block_decouples_when_offdiagonal_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let d = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                -rng.gen_range(0.5..2.0)
            } else {
                0.0
            }
        });
        let zero = DMatrix::<f64>::zeros(n, n);
        let a11 = dense_to_operator(&d);
        let a22 = dense_to_operator(&(&d * 0.7));
        let z = dense_to_operator(&zero);
        let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (u, w) = imex_block_advance(
            &a11,
            &z,
            &z,
            &a22,
            |_t, _u, _w, g| g.fill(0.0),
            |_t, _u, _w, g| g.fill(0.0),
            &u0,
            &w0,
            0.05,
            40,
            &DirectLu,
        )
        .unwrap();
        let u_ref =
            imex_euler_advance(&a11, |_t, _u, g| g.fill(0.0), &u0, 0.05, 40, &DirectLu).unwrap();
        let w_ref =
            imex_euler_advance(&a22, |_t, _u, g| g.fill(0.0), &w0, 0.05, 40, &DirectLu).unwrap();
        for i in 0..n {
            assert!((u[i] - u_ref[i]).abs() <= 1e-12);
            assert!((w[i] - w_ref[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn imex_block_first_order_on_cross_diffusion() {
        // 2x2 constant-coefficient system with known exponential solution.
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.2, -0.8]);
        let a11 = dense_to_operator(&DMatrix::from_element(1, 1, a[(0, 0)]));
        let a12 = dense_to_operator(&DMatrix::from_element(1, 1, a[(0, 1)]));
        let a21 = dense_to_operator(&DMatrix::from_element(1, 1, a[(1, 0)]));
        let a22 = dense_to_operator(&DMatrix::from_element(1, 1, a[(1, 1)]));
        let want = expm(&a) * DMatrix::from_column_slice(2, 1, &[1.0, -0.5]);
        let mut errs = Vec::new();
        for steps in [100usize, 200] {
            let dt = 1.0 / steps as f64;
            let (u, w) = imex_block_advance(
                &a11,
                &a12,
                &a21,
                &a22,
                |_t, _u, _w, g| g.fill(0.0),
                |_t, _u, _w, g| g.fill(0.0),
                &[1.0],
                &[-0.5],
                dt,
                steps,
                &DirectLu,
            )
            .unwrap();
            let e = (u[0] - want[(0, 0)]).abs().max((w[0] - want[(1, 0)]).abs());
            errs.push(e);
        }
        let e = (errs[0] / errs[1]).log2();
        assert!((0.8..=1.2).contains(&e), "e.o.c. {e}");
    }

    #[test]
    fn linear_solve_identity_and_oracle() {
        let n = 100;
        let id = dense_to_operator(&DMatrix::identity(n, n));
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = linear_solve(&id, &b, "direct", 1e-11).unwrap();
        for (u, v) in x.iter().zip(b.iter()) {
            assert!((u - v).abs() <= 1e-12);
        }
        // SPD tridiagonal: iterative vs direct.
        let tri = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                2.5
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let m = dense_to_operator_sparse(&tri);
        let xd = linear_solve(&m, &b, "direct", 1e-11).unwrap();
        let xi = linear_solve(&m, &b, "bicgstab", 1e-11).unwrap();
        for i in 0..n {
            assert!((xd[i] - xi[i]).abs() <= 1e-10, "{} vs {}", xd[i], xi[i]);
        }
        assert!(linear_solve(&m, &b, "cholesky", 1e-11).is_err());
    }

    /// Dense-to-sparse keeping only structural nonzeros (plus the diagonal).
    fn dense_to_operator_sparse(a: &DMatrix<f64>) -> OperatorMatrix {
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..a.nrows())
            .map(|i| {
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for j in 0..a.ncols() {
                    if a[(i, j)] != 0.0 || i == j {
                        cols.push(j);
                        vals.push(a[(i, j)]);
                    }
                }
                (cols, vals)
            })
            .collect();
        OperatorMatrix::from_rows(a.ncols(), rows).unwrap()
    }

    #[test]
    fn singular_system_errors_not_garbage() {
        // Second row identically zero.
        let mut a = DMatrix::<f64>::identity(4, 4);
        a[(1, 1)] = 0.0;
        let m = dense_to_operator_sparse(&a);
        let b = vec![1.0, 1.0, 1.0, 1.0];
        assert!(linear_solve(&m, &b, "direct", 1e-11).is_err());
        assert!(linear_solve(&m, &b, "bicgstab", 1e-11).is_err());
    }

    #[test]
    fn bicgstab_reports_iterations() {
        let n = 60;
        let tri = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                3.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let m = dense_to_operator_sparse(&tri);
        let fac = BicgstabIlu0::default().factor(&m).unwrap();
        let b = vec![1.0; n];
        let x = fac.solve(&b).unwrap();
        let it = fac.iterations().unwrap();
        assert!(it >= 1, "iterations {it}");
        let r = m.matvec(&x);
        let res: f64 = r
            .iter()
            .zip(b.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-11 * bn * 10.0, "residual {res}");
    }

    #[test]
    fn solve_residual_contract_each_step() {
        // One implicit solve on a small diffusion-like system, residual
        // verified against the advertised tolerance.
        let n = 50;
        let tri = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                -2.0
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let a = dense_to_operator_sparse(&tri);
        let sys = a.shifted_identity(0.02).unwrap();
        let fac = DirectLu.factor(&sys).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let x = fac.solve(&b).unwrap();
        let ax = sys.matvec(&x);
        let r = ax
            .iter()
            .zip(b.iter())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0f64, f64::max);
        let bn = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(r <= 1e-11 * bn, "residual {r} vs {bn}");
    }

    #[test]
    fn registry_and_default_solver() {
        let names: Vec<&str> = solver_registry().iter().map(|s| s.name()).collect();
        assert!(names.contains(&"direct"));
        assert!(names.contains(&"bicgstab"));
        assert!(solver_by_name("direct").is_some());
        assert!(solver_by_name("qr").is_none());
        assert_eq!(default_solver(100).name(), "direct");
        assert_eq!(default_solver(100_000).name(), "bicgstab");
    }

    #[test]
    fn rk4_stability_oracles() {
        assert!(rk4_amplification(0.0, 0.0) <= 1.0);
        let inside = rk4_amplification(-2.7, 0.0);
        assert!((inside - 0.879).abs() <= 5e-3, "got {inside}");
        let outside = rk4_amplification(-2.9, 0.0);
        assert!((outside - 1.187).abs() <= 5e-3, "got {outside}");
        let imag = rk4_amplification(0.0, 3.0);
        assert!((imag - 1.505).abs() <= 5e-3, "got {imag}");

        let rep = rk4_stability_check(&[(-1.0, 0.5), (-2.7, 0.0)], 1.0);
        assert!(rep.all_inside);
        let rep = rk4_stability_check(&[(-1.0, 0.5), (-2.9, 0.0)], 1.0);
        assert!(!rep.all_inside);
        assert_eq!(rep.worst_z, (-2.9, 0.0));
        assert!((rep.worst_modulus - 1.187).abs() <= 5e-3);
    }
}
