//! Error norms, empirical convergence orders, and spectrum diagnostics.

use crate::error::{Result, SurfError};
use crate::operators::OperatorMatrix;
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

/// Which norm a relative error is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorNorm {
    L2,
    Linf,
}

/// Relative error ||u_num - u_exact|| / ||u_exact||.
pub fn rel_error(u_num: &[f64], u_exact: &[f64], norm: ErrorNorm) -> Result<f64> {
    if u_num.len() != u_exact.len() {
        return Err(SurfError::invalid("field length mismatch in rel_error"));
    }
    let (num, den) = match norm {
        ErrorNorm::L2 => {
            let num: f64 = u_num
                .iter()
                .zip(u_exact.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = u_exact.iter().map(|v| v * v).sum::<f64>().sqrt();
            (num, den)
        }
        ErrorNorm::Linf => {
            let num = u_num
                .iter()
                .zip(u_exact.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let den = u_exact.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            (num, den)
        }
    };
    if den == 0.0 {
        return Err(SurfError::invalid(
            "relative error undefined: exact solution has zero norm",
        ));
    }
    Ok(num / den)
}

/// Empirical orders of convergence between consecutive resolutions:
/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return Err(SurfError::invalid("errors and spacings differ in length"));
    }
    if errors.len() < 2 {
        return Err(SurfError::invalid(
            "order of convergence needs at least two resolutions",
        ));
    }
    for w in hs.windows(2) {
        if !(w[1] < w[0]) {
            return Err(SurfError::invalid("spacings must decrease strictly"));
        }
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(SurfError::invalid(
            "order of convergence undefined for non-positive errors",
        ));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Least-squares slope of log(error) against log(h): a single fitted order
/// over all resolutions.
pub fn fit_order(errors: &[f64], hs: &[f64]) -> Result<f64> {
    eoc(errors, hs)?; // reuse the validation
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    Ok(sxy / sxx)
}

/// Spectrum of an operator matrix: full (dense path) or an extremal subset.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Eigenvalues as (re, im) pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    pub max_real: f64,
    pub method: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMode {
    /// Dense eigensolve of the full matrix; capped at N = 6,000.
    DenseFull,
    /// Rightmost eigenvalues via shifted Arnoldi iteration.
    Extremal,
}

/// Hard cap on the dense eigensolver size.
pub const DENSE_SPECTRUM_CAP: usize = 6_000;

pub fn spectrum(matrix: &OperatorMatrix, mode: SpectrumMode) -> Result<SpectrumReport> {
    if matrix.nrows != matrix.ncols {
        return Err(SurfError::invalid("spectrum needs a square matrix"));
    }
    let eigenvalues = match mode {
        SpectrumMode::DenseFull => dense_spectrum(matrix)?,
        SpectrumMode::Extremal => extremal_spectrum(matrix)?,
    };
    if eigenvalues.iter().any(|(re, im)| !re.is_finite() || !im.is_finite()) {
        return Err(SurfError::EigenFailure(
            "eigensolver produced non-finite values".into(),
        ));
    }
    let max_real = eigenvalues
        .iter()
        .map(|&(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        max_real,
        method: match mode {
            SpectrumMode::DenseFull => "dense_full",
            SpectrumMode::Extremal => "extremal",
        },
    })
}

fn dense_spectrum(matrix: &OperatorMatrix) -> Result<Vec<(f64, f64)>> {
    let n = matrix.nrows;
    if n > DENSE_SPECTRUM_CAP {
        return Err(SurfError::invalid(format!(
            "dense spectrum capped at {DENSE_SPECTRUM_CAP} rows, got {n}; use the extremal mode"
        )));
    }
    let mut dense = faer::Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let (cols, vals) = matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            dense[(i, j)] = v;
        }
    }
    let evs: Vec<faer::complex_native::c64> = dense.eigenvalues();
    Ok(evs.into_iter().map(|z| (z.re, z.im)).collect())
}

/// How many rightmost eigenvalues the extremal mode reports.
const EXTREMAL_COUNT: usize = 10;

/// Shifted Arnoldi with explicit restarts: iterate on B = A - sigma I with
/// sigma the leftmost Gershgorin bound, so the rightmost eigenvalues of A
/// become the dominant ones of B. Ritz residuals come from the standard
/// h_{m+1,m} |e_m^T y| identity; a cycle that has not converged restarts
/// from the combination of the current rightmost Ritz vectors. Spectra whose
/// right edge is strongly clustered relative to the matrix scale can exhaust
/// the cycle budget, which reports as an eigensolver failure.
fn extremal_spectrum(matrix: &OperatorMatrix) -> Result<Vec<(f64, f64)>> {
    let n = matrix.nrows;
    if n < 2 {
        return dense_spectrum(matrix);
    }
    // Leftmost Gershgorin bound: min_i (a_ii - sum_{j != i} |a_ij|).
    let mut sigma = f64::INFINITY;
    let mut scale = 0.0f64;
    for i in 0..n {
        let (cols, vals) = matrix.row(i);
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut row_abs = 0.0;
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            row_abs += v.abs();
            if j == i {
                diag = v;
            } else {
                off += v.abs();
            }
        }
        sigma = sigma.min(diag - off);
        scale = scale.max(row_abs);
    }
    let scale = scale.max(1e-300);
    let m = 300.min(n);
    let tol = 1e-6 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v0);

    let mut last_worst = f64::INFINITY;
    for cycle in 0..8 {
        // One Arnoldi cycle from v0.
        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut steps = m;
        let mut w = vec![0.0; n];
        for j in 0..m {
            matrix.matvec_into(&basis[j], &mut w);
            for i in 0..n {
                w[i] -= sigma * basis[j][i];
            }
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _pass in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c: f64 = q.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                    h[(i, j)] += c;
                    for k in 0..n {
                        w[k] -= c * q[k];
                    }
                }
            }
            let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            h[(j + 1, j)] = beta;
            if beta <= 1e-13 * scale {
                steps = j + 1;
                break;
            }
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let hm = h.view((0, 0), (steps, steps)).into_owned();
        let h_last = h[(steps, steps - 1)];
        let mut ritz: Vec<Complex<f64>> = hm.complex_eigenvalues().iter().copied().collect();
        // Only the rightmost candidates need eigenvectors and residuals.
        ritz.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        ritz.truncate(EXTREMAL_COUNT);
        let hc = hm.map(Complex::from);
        // Ritz value, residual, and eigenvector of H for each candidate.
        let mut pairs: Vec<((f64, f64), f64, DVector<Complex<f64>>)> = Vec::new();
        for lam in ritz.iter() {
            let shift = lam + Complex::new(1e-12 * scale.max(lam.norm()), 1e-13 * scale);
            let shifted = &hc - DMatrix::from_diagonal_element(steps, steps, shift);
            let lu = shifted.lu();
            let mut y = DVector::<Complex<f64>>::from_fn(steps, |i, _| {
                Complex::new(((i + 1) as f64).sin(), ((i + 2) as f64).cos())
            });
            y /= Complex::new(y.norm(), 0.0);
            let mut ok = true;
            for _ in 0..2 {
                match lu.solve(&y) {
                    Some(z) => {
                        let nz = z.norm();
                        if nz == 0.0 || !nz.is_finite() {
                            ok = false;
                            break;
                        }
                        y = z / Complex::new(nz, 0.0);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            // A singular shift means the Ritz value is exact to working
            // precision; treat as converged.
            let residual = if ok {
                h_last.abs() * y[steps - 1].norm()
            } else {
                0.0
            };
            pairs.push(((lam.re + sigma, lam.im), residual, y));
        }
        pairs.sort_by(|a, b| (b.0).0.partial_cmp(&(a.0).0).unwrap());
        pairs.truncate(EXTREMAL_COUNT);
        // Converged prefix: the reported subset must be the rightmost values,
        // with nothing unconverged sorting to the right of it.
        let prefix = pairs
            .iter()
            .position(|p| p.1 > tol)
            .unwrap_or(pairs.len());
        if prefix == pairs.len() || (cycle >= 3 && prefix >= 1) {
            pairs.truncate(prefix);
            return Ok(pairs.into_iter().map(|(z, _, _)| z).collect());
        }
        last_worst = pairs.iter().map(|p| p.1).fold(0.0f64, f64::max);
        // Restart from the combined rightmost Ritz vectors V y.
        let mut next = vec![0.0f64; n];
        for (_, _, y) in pairs.iter() {
            for (j, q) in basis.iter().take(steps).enumerate() {
                let c = y[j].re + y[j].im;
                for k in 0..n {
                    next[k] += c * q[k];
                }
            }
        }
        // Tiny perturbation keeps the restart from collapsing onto an
        // exactly invariant but incomplete subspace.
        for x in next.iter_mut() {
            *x += 1e-10 * rng.gen_range(-1.0..1.0);
        }
        normalize(&mut next);
        v0 = next;
    }
    Err(SurfError::EigenFailure(format!(
        "Arnoldi did not converge: worst Ritz residual {last_worst:.3e} above {tol:.3e} \
         after all restart cycles"
    )))
}

fn normalize(v: &mut [f64]) {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    v.iter_mut().for_each(|x| *x /= nrm);
}

/// Write a spectrum as CSV with an `re,im` row per eigenvalue.
pub fn write_spectrum_csv(report: &SpectrumReport, path: &Path) -> Result<()> {
    let mut out = String::from("re,im\n");
    for (re, im) in &report.eigenvalues {
        out.push_str(&format!("{re:e},{im:e}\n"));
    }
    write_text(path, &out)
}

/// One resolution row of a convergence study.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    /// Node count or spacing, whichever indexes the study.
    pub resolution: f64,
    pub error: f64,
    /// Order against the previous row; absent on the first row.
    pub order: Option<f64>,
    pub wall_seconds: f64,
}

/// Write a convergence table as CSV: resolution, error, e.o.c., wall time.
pub fn write_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut out = String::from("resolution,error,eoc,wall_seconds\n");
    for r in rows {
        let o = r.order.map(|v| format!("{v:.4}")).unwrap_or_default();
        out.push_str(&format!(
            "{:e},{:e},{},{:.3}\n",
            r.resolution, r.error, o, r.wall_seconds
        ));
    }
    write_text(path, &out)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| SurfError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(text.as_bytes()).map_err(|e| SurfError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
