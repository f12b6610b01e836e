//! Surface node sets: generation, ingestion, and characterization.

pub mod generators;
pub mod io;

use crate::error::{Result, SurfError};
use crate::stencil::NeighborIndex;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A point cloud sampling a codimension-1 surface: N points with outward unit
/// normals and the average internodal distance `h`.
///
/// Planar curves (`dim == 2`) are stored with a zero z coordinate.
#[derive(Clone, Debug)]
pub struct SurfaceNodeSet {
    pub points: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    /// Mean nearest-neighbor distance.
    pub h: f64,
    /// Embedding dimension, 2 or 3.
    pub dim: usize,
}

impl SurfaceNodeSet {
    /// Validate points and normals, normalize the normals, and compute `h`.
    pub fn new(
        points: Vec<Vector3<f64>>,
        normals: Vec<Vector3<f64>>,
        dim: usize,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(SurfError::invalid(format!("dim must be 2 or 3, got {dim}")));
        }
        if points.len() < 2 {
            return Err(SurfError::degenerate(
                "a surface node set needs at least 2 points",
            ));
        }
        if points.len() != normals.len() {
            return Err(SurfError::invalid(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(SurfError::degenerate(format!(
                    "non-finite coordinate at point {i}"
                )));
            }
        }
        let mut unit_normals = Vec::with_capacity(normals.len());
        for (i, n) in normals.iter().enumerate() {
            let norm = n.norm();
            if !norm.is_finite() || norm < 1e-14 {
                return Err(SurfError::degenerate(format!(
                    "normal at point {i} is zero or non-finite"
                )));
            }
            // Pass already-unit normals through unchanged so exact analytic
            // normals are not perturbed by a redundant rescale.
            if (norm - 1.0).abs() <= 1e-12 {
                unit_normals.push(*n);
            } else {
                unit_normals.push(n / norm);
            }
        }
        let h = average_spacing(&points)?;
        Ok(SurfaceNodeSet {
            points,
            normals: unit_normals,
            h,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Smooth implicit surface `F(x) = 0` with an analytic gradient, plus a
/// bounding box enclosing the zero level set for node seeding.
pub struct ImplicitSurface {
    pub name: String,
    f: Box<dyn Fn(&Vector3<f64>) -> f64 + Send + Sync>,
    grad: Box<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>,
    pub bbox_min: Vector3<f64>,
    pub bbox_max: Vector3<f64>,
}

impl ImplicitSurface {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&Vector3<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
        bbox_min: Vector3<f64>,
        bbox_max: Vector3<f64>,
    ) -> Self {
        ImplicitSurface {
            name: name.into(),
            f: Box::new(f),
            grad: Box::new(grad),
            bbox_min,
            bbox_max,
        }
    }

    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        (self.f)(p)
    }

    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (self.grad)(p)
    }

    /// Unit sphere x^2 + y^2 + z^2 - 1.
    pub fn unit_sphere() -> Self {
        ImplicitSurface::new(
            "sphere",
            |p| p.norm_squared() - 1.0,
            |p| 2.0 * p,
            Vector3::new(-1.1, -1.1, -1.1),
            Vector3::new(1.1, 1.1, 1.1),
        )
    }

    /// Tooth surface x^8 + y^8 + z^8 - (x^2 + y^2 + z^2).
    pub fn tooth() -> Self {
        ImplicitSurface::new(
            "tooth",
            |p| {
                p.x.powi(8) + p.y.powi(8) + p.z.powi(8) - (p.x * p.x + p.y * p.y + p.z * p.z)
            },
            |p| {
                Vector3::new(
                    8.0 * p.x.powi(7) - 2.0 * p.x,
                    8.0 * p.y.powi(7) - 2.0 * p.y,
                    8.0 * p.z.powi(7) - 2.0 * p.z,
                )
            },
            Vector3::new(-1.35, -1.35, -1.35),
            Vector3::new(1.35, 1.35, 1.35),
        )
    }

    /// Dziuk surface (x - z^2)^2 + y^2 + z^2 - 1.
    pub fn dziuk() -> Self {
        ImplicitSurface::new(
            "dziuk",
            |p| {
                let w = p.x - p.z * p.z;
                w * w + p.y * p.y + p.z * p.z - 1.0
            },
            |p| {
                let w = p.x - p.z * p.z;
                Vector3::new(2.0 * w, 2.0 * p.y, -4.0 * p.z * w + 2.0 * p.z)
            },
            Vector3::new(-1.3, -1.3, -1.3),
            Vector3::new(2.3, 1.3, 1.3),
        )
    }

    /// Torus of major radius R and minor radius r around the z axis:
    /// (R - sqrt(x^2 + y^2))^2 + z^2 - r^2.
    pub fn torus(big_r: f64, small_r: f64) -> Self {
        let pad = small_r * 0.2;
        ImplicitSurface::new(
            "torus",
            move |p| {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let w = big_r - rho;
                w * w + p.z * p.z - small_r * small_r
            },
            move |p| {
                let rho = (p.x * p.x + p.y * p.y).sqrt().max(1e-300);
                let w = big_r - rho;
                Vector3::new(
                    -2.0 * w * p.x / rho,
                    -2.0 * w * p.y / rho,
                    2.0 * p.z,
                )
            },
            Vector3::new(-(big_r + small_r) - pad, -(big_r + small_r) - pad, -small_r - pad),
            Vector3::new(big_r + small_r + pad, big_r + small_r + pad, small_r + pad),
        )
    }
}

/// Mean nearest-neighbor distance over the cloud. Errors on duplicates.
pub fn average_spacing(points: &[Vector3<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(SurfError::degenerate(
            "average spacing needs at least 2 points",
        ));
    }
    let index = NeighborIndex::build(points);
    let mut sum = 0.0;
    for p in points {
        let nn = index.knn(p, 2);
        let d = nn[1].1;
        if d == 0.0 {
            return Err(SurfError::degenerate(format!(
                "duplicate points {} and {}",
                nn[0].0.min(nn[1].0),
                nn[0].0.max(nn[1].0)
            )));
        }
        sum += d;
    }
    Ok(sum / points.len() as f64)
}

/// Min-heap edge for orientation propagation.
#[derive(PartialEq)]
struct Edge {
    w: f64,
    from: u32,
    to: u32,
}

impl Eq for Edge {}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest weight.
        other
            .w
            .total_cmp(&self.w)
            .then(other.from.cmp(&self.from))
            .then(other.to.cmp(&self.to))
    }
}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Estimate unit normals by PCA over k-nearest neighborhoods, with global
/// orientation made consistent by minimum-spanning-tree propagation and the
/// outward sign fixed so normals point away from the cloud centroid on
/// average.
pub fn estimate_normals(points: &[Vector3<f64>], k_nn: usize) -> Result<Vec<Vector3<f64>>> {
    let n = points.len();
    if k_nn < 6 {
        return Err(SurfError::invalid("k_nn must be at least 6"));
    }
    if n <= k_nn {
        return Err(SurfError::invalid(format!(
            "need more than k_nn = {k_nn} points, got {n}"
        )));
    }
    let index = NeighborIndex::build(points);
    let neighborhoods: Vec<Vec<usize>> = points
        .par_iter()
        .map(|p| index.knn(p, k_nn).into_iter().map(|(i, _)| i).collect())
        .collect();

    let mut normals: Vec<Vector3<f64>> = Vec::with_capacity(n);
    let raw: Vec<Result<Vector3<f64>>> = neighborhoods
        .par_iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let mut mean = Vector3::zeros();
            for &j in nbrs {
                mean += points[j];
            }
            mean /= nbrs.len() as f64;
            let mut cov = Matrix3::zeros();
            for &j in nbrs {
                let d = points[j] - mean;
                cov += d * d.transpose();
            }
            let eig = cov.symmetric_eigen();
            // Order eigenpairs by ascending eigenvalue.
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let lam_max = eig.eigenvalues[order[2]].max(0.0);
            let lam_mid = eig.eigenvalues[order[1]].max(0.0);
            if lam_mid <= 1e-12 * lam_max.max(1e-300) {
                return Err(SurfError::degenerate(format!(
                    "rank-deficient (collinear) neighborhood at point {i}"
                )));
            }
            let v = eig.eigenvectors.column(order[0]).into_owned();
            Ok(v.normalize())
        })
        .collect();
    for r in raw {
        normals.push(r?);
    }

    // Orientation: propagate over an MST of the neighborhood graph, flipping
    // when adjacent normals disagree; each connected component then gets its
    // outward sign from the mean of <normal, point - centroid>.
    let mut visited = vec![false; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        let mut component = Vec::new();
        let mut heap = BinaryHeap::new();
        visited[root] = true;
        component.push(root);
        for &j in &neighborhoods[root] {
            if j != root {
                heap.push(Edge {
                    w: 1.0 - normals[root].dot(&normals[j]).abs(),
                    from: root as u32,
                    to: j as u32,
                });
            }
        }
        while let Some(Edge { from, to, .. }) = heap.pop() {
            let to = to as usize;
            if visited[to] {
                continue;
            }
            visited[to] = true;
            if normals[from as usize].dot(&normals[to]) < 0.0 {
                normals[to] = -normals[to];
            }
            component.push(to);
            for &j in &neighborhoods[to] {
                if !visited[j] {
                    heap.push(Edge {
                        w: 1.0 - normals[to].dot(&normals[j]).abs(),
                        from: to as u32,
                        to: j as u32,
                    });
                }
            }
        }
        let mut centroid = Vector3::zeros();
        for &i in &component {
            centroid += points[i];
        }
        centroid /= component.len() as f64;
        let mut outward = 0.0;
        for &i in &component {
            outward += normals[i].dot(&(points[i] - centroid));
        }
        if outward < 0.0 {
            for &i in &component {
                normals[i] = -normals[i];
            }
        }
    }
    Ok(normals)
}
