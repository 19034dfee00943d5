//! Coarse anchor generation: every reference base vertex is matched to a vertex of
//! the target frame by nearest-neighbor search, after being offset by a motion
//! vector averaged from already-matched neighbors.

use std::collections::VecDeque;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::mesh::{AdjacencyMap, TriangleMesh};
use crate::octree::Octree;
use crate::scalar::Real;
use crate::vector::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Coarse,
    Fine,
}

/// Where an anchor vertex came from on the target mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correspondence {
    /// Sits exactly on this target vertex.
    Vertex(usize),
    /// Moved off the target's vertex set by refinement.
    OffVertex,
}

/// A mesh with the reference base mesh's faces and per-vertex provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorMesh<T> {
    pub mesh: TriangleMesh<T>,
    pub correspondence: Vec<Correspondence>,
    pub stage: Stage,
}

impl<T: Real> AnchorMesh<T> {
    pub fn vertex_count(&self) -> usize {
        self.mesh.vertex_count()
    }
}

/// Motion of one vertex, `anchor - reference`, kept exactly: `vector` is the
/// rounded difference and `residual` the rounding error, so that
/// `reference + motion` reproduces the anchor bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Motion<T> {
    pub vector: Vec3<T>,
    pub residual: Vec3<T>,
}

impl<T: Real> Motion<T> {
    pub fn zero() -> Self {
        Self {
            vector: Vec3::zero(),
            residual: Vec3::zero(),
        }
    }

    pub fn between(reference: Vec3<T>, anchor: Vec3<T>) -> Self {
        let mut out = Self::zero();
        for k in 0..3 {
            let (s, e) = two_sum(anchor[k], -reference[k]);
            out.vector[k] = s;
            out.residual[k] = e;
        }
        out
    }
}

impl<T: Real> From<Vec3<T>> for Motion<T> {
    fn from(vector: Vec3<T>) -> Self {
        Self {
            vector,
            residual: Vec3::zero(),
        }
    }
}

impl<T: Real> Add<Vec3<T>> for Motion<T> {
    type Output = Vec3<T>;

    fn add(self, p: Vec3<T>) -> Vec3<T> {
        let mut out = Vec3::zero();
        for k in 0..3 {
            let (s, e) = two_sum(p[k], self.vector[k]);
            out[k] = s + (e + self.residual[k]);
        }
        out
    }
}

impl<T: Real> Add<Motion<T>> for Vec3<T> {
    type Output = Vec3<T>;

    fn add(self, m: Motion<T>) -> Vec3<T> {
        m + self
    }
}

/// Knuth's error-free sum: `a + b == s + e` exactly.
fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionField<T> {
    pub motions: Vec<Motion<T>>,
    pub processed: Vec<bool>,
}

impl<T: Real> MotionField<T> {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            motions: vec![Motion::zero(); vertex_count],
            processed: vec![false; vertex_count],
        }
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoarseConfig {
    /// Offset each query by the neighbor-averaged motion. Off = plain NN matching.
    pub motion_estimation: bool,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self {
            motion_estimation: true,
        }
    }
}

/// Breadth-first order over the vertex graph. Each component is seeded at its
/// lowest unvisited index and neighbors are expanded in ascending order.
pub fn traversal_order(adjacency: &AdjacencyMap) -> Vec<usize> {
    let n = adjacency.vertex_count();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in adjacency.neighbors(v) {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

/// Mean motion of the already-processed neighbors of `vertex`, or zero if none.
pub fn estimate_motion<T: Real>(
    vertex: usize,
    adjacency: &AdjacencyMap,
    motion: &MotionField<T>,
) -> Vec3<T> {
    let mut sum = Vec3::zero();
    let mut n = 0usize;
    for &l in adjacency.neighbors(vertex) {
        if motion.processed[l] {
            sum += motion.motions[l].vector;
            n += 1;
        }
    }
    if n == 0 {
        Vec3::zero()
    } else {
        sum / T::from_usize_lossy(n)
    }
}

pub fn generate_coarse_anchor<T: Real>(
    base: &TriangleMesh<T>,
    adjacency: &AdjacencyMap,
    target: &TriangleMesh<T>,
    index: &Octree<T>,
    config: CoarseConfig,
) -> Result<(AnchorMesh<T>, MotionField<T>)> {
    if index.len() != target.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: target.vertex_count(),
            actual: index.len(),
        });
    }
    if adjacency.vertex_count() != base.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: base.vertex_count(),
            actual: adjacency.vertex_count(),
        });
    }
    let n = base.vertex_count();
    let mut motion = MotionField::new(n);
    let mut positions = vec![Vec3::zero(); n];
    let mut correspondence = vec![Correspondence::OffVertex; n];

    for v in traversal_order(adjacency) {
        let reference = base.vertices()[v];
        let query = if config.motion_estimation {
            reference + estimate_motion(v, adjacency, &motion)
        } else {
            reference
        };
        let (hit, _) = index.nearest(&query);
        let anchor = target.vertices()[hit];
        positions[v] = anchor;
        correspondence[v] = Correspondence::Vertex(hit);
        motion.motions[v] = Motion::between(reference, anchor);
        motion.processed[v] = true;
    }

    let mesh = base.with_vertices(positions)?;
    Ok((
        AnchorMesh {
            mesh,
            correspondence,
            stage: Stage::Coarse,
        },
        motion,
    ))
}
