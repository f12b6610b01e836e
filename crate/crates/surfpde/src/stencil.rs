//! Nearest-neighbor search and embedded stencil construction.
//!
//! A stencil couples the `n_s` nearest surface nodes of a reference point with
//! `n_perp` off-surface points laid out symmetrically along the reference
//! normal at multiples of `eps_normal * h`.

use crate::error::{Result, SurfError};
use crate::geometry::SurfaceNodeSet;
use crate::rbf::PhsPolyConfig;
use nalgebra::Vector3;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 12;

#[derive(Clone, Copy)]
struct KdNode {
    // axis == 3 marks a leaf; start..end index into perm.
    axis: u8,
    split: f64,
    left: u32,
    right: u32,
    start: u32,
    end: u32,
}

/// Static kd-tree answering exact k-nearest-neighbor queries.
///
/// Distance ties are broken by the smaller node index so queries are fully
/// deterministic on symmetric layouts.
pub struct NeighborIndex {
    points: Vec<Vector3<f64>>,
    perm: Vec<u32>,
    nodes: Vec<KdNode>,
    root: u32,
}

/// Max-heap entry ordered by (squared distance, index); the heap top is the
/// current worst candidate.
#[derive(Clone, Copy, PartialEq)]
struct Cand {
    d2: f64,
    idx: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NeighborIndex {
    pub fn build(points: &[Vector3<f64>]) -> Self {
        let n = points.len();
        let mut tree = NeighborIndex {
            points: points.to_vec(),
            perm: (0..n as u32).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 4),
            root: 0,
        };
        if n > 0 {
            tree.root = tree.build_range(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_range(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(KdNode {
            axis: 3,
            split: 0.0,
            left: u32::MAX,
            right: u32::MAX,
            start: start as u32,
            end: end as u32,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        // Split on the widest axis at the median.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &p in &self.perm[start..end] {
            let q = self.points[p as usize];
            for a in 0..3 {
                lo[a] = lo[a].min(q[a]);
                hi[a] = hi[a].max(q[a]);
            }
        }
        let mut axis = 0;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }
        if hi[axis] - lo[axis] == 0.0 {
            // All points coincide on every axis; keep as a leaf.
            return id;
        }
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a as usize][axis]
                .total_cmp(&pts[b as usize][axis])
                .then(a.cmp(&b))
        });
        let split = self.points[self.perm[mid] as usize][axis];
        let left = self.build_range(start, mid);
        let right = self.build_range(mid, end);
        let node = &mut self.nodes[id as usize];
        node.axis = axis as u8;
        node.split = split;
        node.left = left;
        node.right = right;
        id
    }

    /// Exact k nearest neighbors of `query`, sorted by (distance, index).
    /// Returns `(index, distance)` pairs; `k` is clamped to the point count.
    pub fn knn(&self, query: &Vector3<f64>, k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, &mut heap);
        let mut out: Vec<Cand> = heap.into_vec();
        out.sort_unstable();
        out.iter()
            .map(|c| (c.idx as usize, c.d2.sqrt()))
            .collect()
    }

    fn search(&self, node_id: u32, query: &Vector3<f64>, k: usize, heap: &mut BinaryHeap<Cand>) {
        let node = self.nodes[node_id as usize];
        if node.axis == 3 {
            for &p in &self.perm[node.start as usize..node.end as usize] {
                let d2 = (self.points[p as usize] - query).norm_squared();
                let cand = Cand { d2, idx: p };
                if heap.len() < k {
                    heap.push(cand);
                } else if cand < *heap.peek().unwrap() {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        let delta = query[node.axis as usize] - node.split;
        let (near, far) = if delta < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, k, heap);
        // Visit the far side unless it provably holds nothing better; equality
        // must be visited so index tie-breaking stays exact.
        if heap.len() < k || delta * delta <= heap.peek().unwrap().d2 {
            self.search(far, query, k, heap);
        }
    }
}

/// Build the shared neighbor index for a node set.
pub fn build_neighbor_index(node_set: &SurfaceNodeSet) -> NeighborIndex {
    NeighborIndex::build(&node_set.points)
}

/// Embedded stencil: surface neighbors plus off-surface extension points.
#[derive(Clone, Debug)]
pub struct Stencil {
    /// Reference node index; `None` for stencils centered at off-node targets.
    pub ref_index: Option<usize>,
    /// `n_s` surface node indices ordered nearest-first; for node stencils the
    /// first entry is the reference node itself.
    pub surface_indices: Vec<usize>,
    /// Off-surface points `center ± j*(eps*h)*normal`, j = 1..n_perp/2,
    /// stored in the order +1, -1, +2, -2, ...
    pub offsurface_points: Vec<Vector3<f64>>,
    pub eps_normal: f64,
    /// Extension spacing `eps_normal * h`.
    pub spacing: f64,
    pub center: Vector3<f64>,
    pub normal: Vector3<f64>,
}

fn gather_neighbors(
    points: &[Vector3<f64>],
    index: &NeighborIndex,
    center: &Vector3<f64>,
    n_s: usize,
    min_sep: Option<f64>,
    force_first: Option<usize>,
    node_label: usize,
) -> Result<Vec<usize>> {
    let n = points.len();
    if n_s > n {
        return Err(SurfError::InsufficientNeighbors {
            node: node_label,
            needed: n_s,
            available: n,
        });
    }
    let sep = match min_sep {
        None => {
            let nn = index.knn(center, n_s);
            let mut ids: Vec<usize> = nn.iter().map(|&(i, _)| i).collect();
            if let Some(first) = force_first {
                if ids.first() != Some(&first) {
                    return Err(SurfError::degenerate(format!(
                        "node {node_label}: reference node is not its own nearest neighbor \
                         (duplicate points?)"
                    )));
                }
            }
            if let Some(first) = force_first {
                ids[0] = first;
            }
            return Ok(ids);
        }
        Some(s) => s,
    };
    // Greedy nearest-first filtering: accept a candidate only if it keeps at
    // least `sep` from every already-accepted member. Grow the query until
    // enough admissible neighbors are found.
    let mut k = (4 * n_s).max(n_s + 32).min(n);
    loop {
        let nn = index.knn(center, k);
        let mut accepted: Vec<usize> = Vec::with_capacity(n_s);
        for &(cand, _) in &nn {
            if Some(cand) == force_first {
                accepted.insert(0, cand);
                continue;
            }
            if accepted.is_empty() && force_first.is_none() {
                accepted.push(cand);
                continue;
            }
            let ok = accepted
                .iter()
                .all(|&a| (points[a] - points[cand]).norm() >= sep);
            if ok {
                accepted.push(cand);
            }
            if accepted.len() == n_s {
                break;
            }
        }
        if let Some(first) = force_first {
            if accepted.first() != Some(&first) {
                accepted.retain(|&a| a != first);
                accepted.insert(0, first);
            }
        }
        if accepted.len() >= n_s {
            accepted.truncate(n_s);
            return Ok(accepted);
        }
        if k == n {
            return Err(SurfError::InsufficientNeighbors {
                node: node_label,
                needed: n_s,
                available: accepted.len(),
            });
        }
        k = (2 * k).min(n);
    }
}

fn extension_points(
    center: &Vector3<f64>,
    normal: &Vector3<f64>,
    n_perp: usize,
    step: f64,
) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(n_perp);
    for j in 1..=n_perp / 2 {
        let offset = normal * (j as f64 * step);
        out.push(center + offset);
        out.push(center - offset);
    }
    out
}

/// Build the embedded stencil of node `i` using a prebuilt neighbor index.
pub fn build_stencil_indexed(
    node_set: &SurfaceNodeSet,
    index: &NeighborIndex,
    i: usize,
    config: &PhsPolyConfig,
    min_sep: Option<f64>,
) -> Result<Stencil> {
    config.validate(node_set.dim)?;
    if i >= node_set.len() {
        return Err(SurfError::invalid(format!(
            "node index {i} out of range (N = {})",
            node_set.len()
        )));
    }
    let center = node_set.points[i];
    let normal = node_set.normals[i];
    let surface_indices = gather_neighbors(
        &node_set.points,
        index,
        &center,
        config.n_s,
        min_sep,
        Some(i),
        i,
    )?;
    let step = config.eps_normal * node_set.h;
    Ok(Stencil {
        ref_index: Some(i),
        surface_indices,
        offsurface_points: extension_points(&center, &normal, config.n_perp, step),
        eps_normal: config.eps_normal,
        spacing: step,
        center,
        normal,
    })
}

/// Convenience wrapper building a fresh neighbor index for a single stencil.
pub fn build_stencil(
    node_set: &SurfaceNodeSet,
    i: usize,
    config: &PhsPolyConfig,
    min_sep: Option<f64>,
) -> Result<Stencil> {
    let index = build_neighbor_index(node_set);
    build_stencil_indexed(node_set, &index, i, config, min_sep)
}

/// Stencil for an arbitrary target point near the source surface, used by
/// interpolation: nearest source nodes plus the normal extension at the target.
pub fn build_target_stencil(
    source: &SurfaceNodeSet,
    index: &NeighborIndex,
    target_point: &Vector3<f64>,
    target_normal: &Vector3<f64>,
    config: &PhsPolyConfig,
    min_sep: Option<f64>,
) -> Result<Stencil> {
    config.validate(source.dim)?;
    let surface_indices = gather_neighbors(
        &source.points,
        index,
        target_point,
        config.n_s,
        min_sep,
        None,
        usize::MAX,
    )?;
    let step = config.eps_normal * source.h;
    Ok(Stencil {
        ref_index: None,
        surface_indices,
        offsurface_points: extension_points(target_point, target_normal, config.n_perp, step),
        eps_normal: config.eps_normal,
        spacing: step,
        center: *target_point,
        normal: *target_normal,
    })
}
