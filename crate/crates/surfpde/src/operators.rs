//! Global sparse differentiation matrices assembled from per-node collapsed
//! RBF-FD weights.

use crate::error::{Result, SurfError};
use crate::geometry::SurfaceNodeSet;
use crate::rbf::{
    full_stencil_weights, implicit_interpolation_collapse, surface_operator_weights_indexed,
    LinearOperatorSpec, PhsPolyConfig, WeightDiagnostics,
};
use crate::stencil::{build_neighbor_index, build_stencil_indexed, build_target_stencil};
use nalgebra::Vector3;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// Row-compressed sparse matrix with a fixed number of entries per row and
/// strictly increasing column indices within each row.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl OperatorMatrix {
    /// Build from per-row (columns, values) pairs; each row is sorted by
    /// column index. Duplicate columns within a row are rejected.
    pub fn from_rows(ncols: usize, rows: Vec<(Vec<usize>, Vec<f64>)>) -> Result<Self> {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0usize);
        let nnz: usize = rows.iter().map(|(c, _)| c.len()).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (i, (cols, vals)) in rows.into_iter().enumerate() {
            if cols.len() != vals.len() {
                return Err(SurfError::invalid(format!(
                    "row {i}: {} columns but {} values",
                    cols.len(),
                    vals.len()
                )));
            }
            let mut pairs: Vec<(usize, f64)> = cols.into_iter().zip(vals).collect();
            pairs.sort_unstable_by_key(|(c, _)| *c);
            for w in pairs.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(SurfError::invalid(format!(
                        "row {i}: duplicate column {}",
                        w[0].0
                    )));
                }
            }
            for (c, v) in pairs {
                if c >= ncols {
                    return Err(SurfError::invalid(format!(
                        "row {i}: column {c} out of range {ncols}"
                    )));
                }
                if !v.is_finite() {
                    return Err(SurfError::invalid(format!(
                        "row {i}: non-finite value at column {c}"
                    )));
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(OperatorMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn matvec_into(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.ncols);
        assert_eq!(out.len(), self.nrows);
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for k in a..b {
                acc += self.values[k] * u[self.col_idx[k]];
            }
            *o = acc;
        });
    }

    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        self.matvec_into(u, &mut out);
        out
    }

    /// Linear combination of structurally identical matrices.
    pub fn linear_combination(terms: &[(f64, &OperatorMatrix)]) -> Result<OperatorMatrix> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| SurfError::invalid("empty linear combination"))?;
        for (_, m) in &terms[1..] {
            if m.nrows != first.nrows
                || m.ncols != first.ncols
                || m.row_ptr != first.row_ptr
                || m.col_idx != first.col_idx
            {
                return Err(SurfError::invalid(
                    "linear combination requires identical sparsity patterns",
                ));
            }
        }
        let mut values = vec![0.0; first.nnz()];
        for (c, m) in terms {
            for (v, mv) in values.iter_mut().zip(m.values.iter()) {
                *v += c * mv;
            }
        }
        Ok(OperatorMatrix {
            nrows: first.nrows,
            ncols: first.ncols,
            row_ptr: first.row_ptr.clone(),
            col_idx: first.col_idx.clone(),
            values,
        })
    }

    /// `I - c * self` for a square matrix; inserts missing diagonal entries.
    pub fn shifted_identity(&self, c: f64) -> Result<OperatorMatrix> {
        if self.nrows != self.ncols {
            return Err(SurfError::invalid("shifted identity needs a square matrix"));
        }
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let mut c_out: Vec<usize> = Vec::with_capacity(cols.len() + 1);
                let mut v_out: Vec<f64> = Vec::with_capacity(cols.len() + 1);
                let mut has_diag = false;
                for (&j, &v) in cols.iter().zip(vals.iter()) {
                    let mut val = -c * v;
                    if j == i {
                        val += 1.0;
                        has_diag = true;
                    }
                    c_out.push(j);
                    v_out.push(val);
                }
                if !has_diag {
                    c_out.push(i);
                    v_out.push(1.0);
                }
                (c_out, v_out)
            })
            .collect();
        OperatorMatrix::from_rows(self.ncols, rows)
    }
}

/// Aggregate assembly diagnostics across all rows.
#[derive(Clone, Copy, Debug, Default)]
pub struct AssemblyDiagnostics {
    pub max_cond_a: f64,
    pub mean_cond_a: f64,
    pub svd_fallbacks: usize,
}

impl AssemblyDiagnostics {
    fn from_rows(diags: &[WeightDiagnostics]) -> Self {
        if diags.is_empty() {
            return AssemblyDiagnostics::default();
        }
        let max = diags.iter().map(|d| d.cond_a).fold(0.0f64, f64::max);
        let mean = diags.iter().map(|d| d.cond_a).sum::<f64>() / diags.len() as f64;
        let svd = diags.iter().filter(|d| d.used_svd).count();
        AssemblyDiagnostics {
            max_cond_a: max,
            mean_cond_a: mean,
            svd_fallbacks: svd,
        }
    }
}

/// A differentiation matrix together with its assembly diagnostics.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub matrix: OperatorMatrix,
    pub diagnostics: AssemblyDiagnostics,
}

fn assemble_rows<F>(
    node_set: &SurfaceNodeSet,
    config: &PhsPolyConfig,
    op_for_node: F,
) -> Result<AssembledOperator>
where
    F: Fn(usize) -> LinearOperatorSpec + Sync,
{
    config.validate(node_set.dim)?;
    let index = build_neighbor_index(node_set);
    let n = node_set.len();
    let rows: Result<Vec<((Vec<usize>, Vec<f64>), WeightDiagnostics)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (cw, diag) = surface_operator_weights_indexed(
                node_set,
                &index,
                i,
                config,
                &op_for_node(i),
                None,
            )?;
            Ok(((cw.indices, cw.values), diag))
        })
        .collect();
    let rows = rows?;
    let diags: Vec<WeightDiagnostics> = rows.iter().map(|(_, d)| *d).collect();
    let matrix =
        OperatorMatrix::from_rows(n, rows.into_iter().map(|(r, _)| r).collect())?;
    Ok(AssembledOperator {
        matrix,
        diagnostics: AssemblyDiagnostics::from_rows(&diags),
    })
}

/// Assemble the global matrix of a single operator: row i holds the collapsed
/// stencil weights at node i.
pub fn assemble(
    node_set: &SurfaceNodeSet,
    config: &PhsPolyConfig,
    op: &LinearOperatorSpec,
) -> Result<AssembledOperator> {
    op.validate(node_set.dim)?;
    let op = op.clone();
    assemble_rows(node_set, config, |_| op.clone())
}

/// Advection matrix for a frozen per-node velocity field: row i is the
/// directional derivative along `velocities[i]`.
pub fn advection_matrix(
    node_set: &SurfaceNodeSet,
    config: &PhsPolyConfig,
    velocities: &[Vector3<f64>],
) -> Result<AssembledOperator> {
    if velocities.len() != node_set.len() {
        return Err(SurfError::invalid(format!(
            "{} velocities for {} nodes",
            velocities.len(),
            node_set.len()
        )));
    }
    for (i, v) in velocities.iter().enumerate() {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(SurfError::invalid(format!(
                "non-finite velocity at node {i}"
            )));
        }
    }
    assemble_rows(node_set, config, |i| {
        LinearOperatorSpec::DirectionalDerivative(velocities[i])
    })
}

/// Hyperviscosity Laplacian power: k = floor(ln n_s) unless overridden.
pub fn hyperviscosity_k(n_s: usize) -> usize {
    (n_s as f64).ln().floor() as usize
}

/// Hyperviscosity matrix gamma_k * (Delta_h)^k with
/// gamma_k = epsilon_hyper * (-1)^(k+1) * h^(2k+1). The kernel for the
/// Laplacian-power solve uses its own PHS exponent 2k+1 (the configured m is
/// generally too small for high powers); the polynomial degree must satisfy
/// l >= k for that exponent to be admissible.
pub fn hyperviscosity_matrix(
    node_set: &SurfaceNodeSet,
    config: &PhsPolyConfig,
    epsilon_hyper: f64,
    k_override: Option<usize>,
) -> Result<AssembledOperator> {
    config.validate(node_set.dim)?;
    let k = k_override.unwrap_or_else(|| hyperviscosity_k(config.n_s));
    if k < 1 {
        return Err(SurfError::invalid(format!(
            "hyperviscosity power k = {k} (n_s = {}) must be at least 1",
            config.n_s
        )));
    }
    if k as u32 > config.l {
        return Err(SurfError::invalid(format!(
            "hyperviscosity power k = {k} needs PHS exponent {} and therefore \
             polynomial degree l >= {k}, got l = {}",
            2 * k + 1,
            config.l
        )));
    }
    let h = node_set.h;
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let gamma_k = epsilon_hyper * sign * h.powi(2 * k as i32 + 1);

    if epsilon_hyper == 0.0 {
        // Zero matrix on the standard stencil pattern; no solves needed.
        let index = build_neighbor_index(node_set);
        let rows: Result<Vec<(Vec<usize>, Vec<f64>)>> = (0..node_set.len())
            .into_par_iter()
            .map(|i| {
                let st = build_stencil_indexed(node_set, &index, i, config, None)?;
                let nz = st.surface_indices.len();
                Ok((st.surface_indices, vec![0.0; nz]))
            })
            .collect();
        return Ok(AssembledOperator {
            matrix: OperatorMatrix::from_rows(node_set.len(), rows?)?,
            diagnostics: AssemblyDiagnostics::default(),
        });
    }

    let hyper_config = PhsPolyConfig {
        m: 2 * k as u32 + 1,
        ..*config
    };
    hyper_config.validate(node_set.dim)?;
    let mut out = assemble_rows(node_set, &hyper_config, |_| {
        LinearOperatorSpec::PolyLaplacianPower(k)
    })?;
    for v in out.matrix.values.iter_mut() {
        *v *= gamma_k;
    }
    Ok(out)
}

/// Interpolation matrix from a source node set onto arbitrary near-surface
/// targets given as (point, unit normal) pairs. Row j holds identity-operator
/// weights over source nodes, collapsed for the constant-along-normal
/// extension at the target.
pub fn interpolation_matrix(
    source: &SurfaceNodeSet,
    config: &PhsPolyConfig,
    targets: &[(Vector3<f64>, Vector3<f64>)],
    min_sep: Option<f64>,
) -> Result<AssembledOperator> {
    config.validate(source.dim)?;
    let index = build_neighbor_index(source);
    let rows: Result<Vec<((Vec<usize>, Vec<f64>), WeightDiagnostics)>> = targets
        .par_iter()
        .enumerate()
        .map(|(j, (point, normal))| {
            let st = build_target_stencil(source, &index, point, normal, config, min_sep)?;
            let (w_s, w_perp, diag) =
                full_stencil_weights(source, &st, config, &LinearOperatorSpec::Identity)?;
            let values = implicit_interpolation_collapse(&w_s, &w_perp, j)?;
            Ok(((st.surface_indices, values), diag))
        })
        .collect();
    let rows = rows?;
    let diags: Vec<WeightDiagnostics> = rows.iter().map(|(_, d)| *d).collect();
    let matrix =
        OperatorMatrix::from_rows(source.len(), rows.into_iter().map(|(r, _)| r).collect())?;
    Ok(AssembledOperator {
        matrix,
        diagnostics: AssemblyDiagnostics::from_rows(&diags),
    })
}

/// Write a matrix in Matrix-Market coordinate format (1-based indices).
pub fn write_matrix_market(matrix: &OperatorMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!(
        "{} {} {}\n",
        matrix.nrows,
        matrix.ncols,
        matrix.nnz()
    ));
    for i in 0..matrix.nrows {
        let (cols, vals) = matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            out.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| SurfError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(out.as_bytes()).map_err(|e| SurfError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generators::fibonacci_sphere_nodes;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(l: u32) -> PhsPolyConfig {
        let mut c = PhsPolyConfig::for_degree(l, 3);
        c.n_perp = 10;
        c.eps_normal = 0.1;
        c
    }

    #[test]
    fn identity_matrix_is_cardinal() {
        let ns = fibonacci_sphere_nodes(600).unwrap();
        let a = assemble(&ns, &config(2), &LinearOperatorSpec::Identity).unwrap();
        assert_eq!(a.matrix.nrows, 600);
        for i in 0..ns.len() {
            let (cols, vals) = a.matrix.row(i);
            assert_eq!(cols.len(), config(2).n_s, "exactly n_s entries per row");
            for (&j, &v) in cols.iter().zip(vals.iter()) {
                let want = if j == i { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-9, "row {i} col {j}: {v}");
            }
        }
    }

    #[test]
    fn laplacian_rows_annihilate_constants() {
        let ns = fibonacci_sphere_nodes(900).unwrap();
        let a = assemble(&ns, &config(3), &LinearOperatorSpec::Laplacian).unwrap();
        let ones = vec![1.0; ns.len()];
        let out = a.matrix.matvec(&ones);
        for i in 0..ns.len() {
            let (_, vals) = a.matrix.row(i);
            let norm1: f64 = vals.iter().map(|v| v.abs()).sum();
            assert!(out[i].abs() <= 1e-9 * norm1, "row {i}: {} vs {norm1}", out[i]);
        }
    }

    #[test]
    fn laplacian_of_xy_on_sphere() {
        let ns = fibonacci_sphere_nodes(2500).unwrap();
        let a = assemble(&ns, &config(4), &LinearOperatorSpec::Laplacian).unwrap();
        let f: Vec<f64> = ns.points.iter().map(|p| p.x * p.y).collect();
        let got = a.matrix.matvec(&f);
        let mut worst = 0.0f64;
        for (i, p) in ns.points.iter().enumerate() {
            let want = -6.0 * p.x * p.y;
            worst = worst.max((got[i] - want).abs());
        }
        let scale = f
            .iter()
            .map(|v| 6.0 * v.abs())
            .fold(0.0f64, f64::max)
            .max(1.0);
        assert!(
            worst <= 1e-8 * scale,
            "relative Linf error {}",
            worst / scale
        );
    }

    #[test]
    fn advection_zero_velocity_is_zero_matrix() {
        let ns = fibonacci_sphere_nodes(500).unwrap();
        let v = vec![Vector3::zeros(); ns.len()];
        let a = advection_matrix(&ns, &config(2), &v).unwrap();
        assert!(a.matrix.values.iter().all(|&x| x.abs() <= 1e-12));
    }

    #[test]
    fn advection_annihilates_constants_and_zonal_functions() {
        let ns = fibonacci_sphere_nodes(2500).unwrap();
        // Solid-body rotation about the z axis.
        let v: Vec<Vector3<f64>> = ns
            .points
            .iter()
            .map(|p| Vector3::new(-p.y, p.x, 0.0))
            .collect();
        let a = advection_matrix(&ns, &config(4), &v).unwrap();
        let ones = vec![1.0; ns.len()];
        let out = a.matrix.matvec(&ones);
        for i in 0..ns.len() {
            let (_, vals) = a.matrix.row(i);
            let norm1: f64 = vals.iter().map(|x| x.abs()).sum();
            assert!(out[i].abs() <= 1e-10 * norm1);
        }
        // A zonally symmetric function is invariant under the rotation flow.
        let f: Vec<f64> = ns.points.iter().map(|p| p.z * p.z).collect();
        let out = a.matrix.matvec(&f);
        let worst = out.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(worst <= 1e-6, "Linf {worst}");
    }

    #[test]
    fn hyperviscosity_power_arithmetic() {
        assert_eq!(hyperviscosity_k(37), 3);
        assert_eq!(hyperviscosity_k(20), 2);
        assert_eq!(hyperviscosity_k(168), 5);
        assert_eq!(hyperviscosity_k(3), 1);
    }

    #[test]
    fn hyperviscosity_zero_epsilon_gives_zero_matrix() {
        let ns = fibonacci_sphere_nodes(400).unwrap();
        let c = config(3);
        let h = hyperviscosity_matrix(&ns, &c, 0.0, None).unwrap();
        assert_eq!(h.matrix.nnz(), 400 * c.n_s);
        assert!(h.matrix.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hyperviscosity_annihilates_constants_and_scales_linearly() {
        let ns = fibonacci_sphere_nodes(700).unwrap();
        let mut c = config(3);
        c.n_s = 40;
        let h1 = hyperviscosity_matrix(&ns, &c, 0.001, Some(3)).unwrap();
        let ones = vec![1.0; ns.len()];
        let out = h1.matrix.matvec(&ones);
        for i in 0..ns.len() {
            let (_, vals) = h1.matrix.row(i);
            let norm1: f64 = vals.iter().map(|x| x.abs()).sum();
            assert!(out[i].abs() <= 1e-9 * norm1);
        }
        let h2 = hyperviscosity_matrix(&ns, &c, 0.002, Some(3)).unwrap();
        for (a, b) in h1.matrix.values.iter().zip(h2.matrix.values.iter()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-30));
        }
        // Power too large for the polynomial degree.
        assert!(hyperviscosity_matrix(&ns, &c, 0.001, Some(4)).is_err());
    }

    #[test]
    fn interpolation_cardinal_constant_and_polynomial() {
        let ns = fibonacci_sphere_nodes(1500).unwrap();
        let c = config(2);
        // Targets: a handful of source nodes themselves plus rotated points.
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(0.3, 1.0, -0.2)),
            0.012,
        );
        let mut targets: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::new();
        for &i in &[0usize, 99, 1200] {
            targets.push((ns.points[i], ns.normals[i]));
        }
        for &i in &[7usize, 250, 800, 1411] {
            let p = rot * ns.points[i];
            targets.push((p, p));
        }
        let a = interpolation_matrix(&ns, &c, &targets, None).unwrap();
        // Cardinal rows for on-node targets.
        for (row, &src) in [0usize, 99, 1200].iter().enumerate().map(|(r, s)| (r, s)) {
            let (cols, vals) = a.matrix.row(row);
            for (&j, &v) in cols.iter().zip(vals.iter()) {
                let want = if j == src { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-8, "target {row} col {j}: {v}");
            }
        }
        // Constants are reproduced everywhere.
        let ones = vec![1.0; ns.len()];
        let out = a.matrix.matvec(&ones);
        for v in &out {
            assert!((v - 1.0).abs() <= 1e-10);
        }
        // Degree-l polynomial restricted to the sphere interpolates exactly.
        let f: Vec<f64> = ns.points.iter().map(|p| p.x * p.y).collect();
        let out = a.matrix.matvec(&f);
        for (row, (p, _)) in targets.iter().enumerate() {
            let want = p.x * p.y;
            assert!(
                (out[row] - want).abs() <= 1e-8,
                "target {row}: {} vs {want}",
                out[row]
            );
        }
    }

    #[test]
    fn assembly_is_permutation_equivariant() {
        let ns = fibonacci_sphere_nodes(350).unwrap();
        let c = config(2);
        let a = assemble(&ns, &c, &LinearOperatorSpec::Laplacian).unwrap();
        let mut perm: Vec<usize> = (0..ns.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        perm.shuffle(&mut rng);
        let mut inv = vec![0usize; ns.len()];
        for (new_i, &old_i) in perm.iter().enumerate() {
            inv[old_i] = new_i;
        }
        let permuted = SurfaceNodeSet::new(
            perm.iter().map(|&i| ns.points[i]).collect(),
            perm.iter().map(|&i| ns.normals[i]).collect(),
            3,
        )
        .unwrap();
        let b = assemble(&permuted, &c, &LinearOperatorSpec::Laplacian).unwrap();
        for old_i in 0..ns.len() {
            let (ca, va) = a.matrix.row(old_i);
            let (cb, vb) = b.matrix.row(inv[old_i]);
            let mut mapped: Vec<(usize, f64)> = ca
                .iter()
                .zip(va.iter())
                .map(|(&j, &v)| (inv[j], v))
                .collect();
            mapped.sort_unstable_by_key(|(j, _)| *j);
            let scale: f64 = va.iter().map(|v| v.abs()).sum();
            assert_eq!(
                mapped.iter().map(|(j, _)| *j).collect::<Vec<_>>(),
                cb.to_vec(),
                "row {old_i} columns"
            );
            for ((_, x), &y) in mapped.iter().zip(vb.iter()) {
                assert!((x - y).abs() <= 1e-10 * scale, "row {old_i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn linear_combination_and_shifted_identity() {
        let ns = fibonacci_sphere_nodes(400).unwrap();
        let c = config(2);
        let lap = assemble(&ns, &c, &LinearOperatorSpec::Laplacian).unwrap();
        let idt = assemble(&ns, &c, &LinearOperatorSpec::Identity).unwrap();
        let combo =
            OperatorMatrix::linear_combination(&[(2.0, &lap.matrix), (-1.0, &idt.matrix)])
                .unwrap();
        let f: Vec<f64> = ns.points.iter().map(|p| p.x * p.y).collect();
        let got = combo.matvec(&f);
        let a = lap.matrix.matvec(&f);
        let b = idt.matrix.matvec(&f);
        for i in 0..ns.len() {
            assert!((got[i] - (2.0 * a[i] - b[i])).abs() <= 1e-12);
        }
        // Pattern mismatch is rejected.
        let mut c9 = c;
        c9.n_s = c.n_s + 2;
        let other = assemble(&ns, &c9, &LinearOperatorSpec::Laplacian).unwrap();
        assert!(
            OperatorMatrix::linear_combination(&[(1.0, &lap.matrix), (1.0, &other.matrix)])
                .is_err()
        );

        let shifted = lap.matrix.shifted_identity(0.25).unwrap();
        let got = shifted.matvec(&f);
        for i in 0..ns.len() {
            assert!((got[i] - (f[i] - 0.25 * a[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn matrix_market_round_trip() {
        let ns = fibonacci_sphere_nodes(120).unwrap();
        let c = config(2);
        let a = assemble(&ns, &c, &LinearOperatorSpec::Laplacian).unwrap();
        let dir = std::env::temp_dir().join("surfpde_mm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("lap.mtx");
        write_matrix_market(&a.matrix, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real general"
        );
        let header: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(header, vec![120, 120, a.matrix.nnz()]);
        let mut count = 0;
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (i, j): (usize, usize) = (toks[0].parse().unwrap(), toks[1].parse().unwrap());
            let v: f64 = toks[2].parse().unwrap();
            let (cols, vals) = a.matrix.row(i - 1);
            let pos = cols.iter().position(|&cc| cc == j - 1).unwrap();
            assert!((vals[pos] - v).abs() <= 1e-12 * v.abs().max(1e-300));
            count += 1;
        }
        assert_eq!(count, a.matrix.nnz());
        std::fs::remove_dir_all(&dir).ok();
    }
}
