//! Fine anchor refinement: each coarse anchor is moved to the optimal point of
//! the cheapest edge collapse around its target vertex, on a shared working copy
//! of the target whose quadrics are updated after every collapse.

use crate::coarse::{traversal_order, AnchorMesh, Correspondence, Stage};
use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, Face, TriangleMesh};
use crate::quadric::{edge_quadric, optimal_point, vertex_quadric, Quadric};
use crate::scalar::Real;
use crate::vector::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FineConfig {
    pub collapses_per_anchor: usize,
}

impl Default for FineConfig {
    fn default() -> Self {
        Self {
            collapses_per_anchor: 1,
        }
    }
}

/// An executed (or evaluated) edge collapse on the target working copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseCandidate<T> {
    /// Target vertex pair, smaller index first.
    pub edge: (usize, usize),
    pub point: Vec3<T>,
    pub error: T,
    /// Edge quadric evaluated at the anchor vertex before the collapse.
    pub start_error: T,
}

/// Target mesh under incremental collapse.
struct WorkingMesh<T> {
    positions: Vec<Vec3<T>>,
    quadrics: Vec<Quadric<T>>,
    faces: Vec<Face>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
}

impl<T: Real> WorkingMesh<T> {
    fn new(target: &TriangleMesh<T>) -> Self {
        let adjacency = build_adjacency(target);
        let quadrics = (0..target.vertex_count())
            .map(|v| vertex_quadric(target, &adjacency, v))
            .collect();
        Self {
            positions: target.vertices().to_vec(),
            quadrics,
            faces: target.faces().to_vec(),
            face_alive: vec![true; target.face_count()],
            vertex_faces: (0..target.vertex_count())
                .map(|v| adjacency.incident_faces(v).to_vec())
                .collect(),
        }
    }

    /// Current edge neighbors of `v`, ascending.
    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertex_faces[v]
            .iter()
            .filter(|&&f| self.face_alive[f])
            .flat_map(|&f| self.faces[f])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Merges `removed` into `kept`, placing the survivor at `point` with quadric `q`.
    fn collapse(&mut self, kept: usize, removed: usize, point: Vec3<T>, q: Quadric<T>) {
        let moved = std::mem::take(&mut self.vertex_faces[removed]);
        for f in moved {
            if !self.face_alive[f] {
                continue;
            }
            let face = &mut self.faces[f];
            if face.contains(&kept) {
                self.face_alive[f] = false;
            } else {
                for idx in face.iter_mut() {
                    if *idx == removed {
                        *idx = kept;
                    }
                }
                self.vertex_faces[kept].push(f);
            }
        }
        let alive = &self.face_alive;
        self.vertex_faces[kept].retain(|&f| alive[f]);
        self.positions[kept] = point;
        self.quadrics[kept] = q;
    }
}

pub fn refine_anchor<T: Real>(
    coarse: &AnchorMesh<T>,
    target: &TriangleMesh<T>,
) -> Result<AnchorMesh<T>> {
    refine_anchor_with(coarse, target, FineConfig::default()).map(|(anchor, _)| anchor)
}

/// Collapses applied to each anchor vertex, in order.
pub type CollapseLog<T> = Vec<Vec<CollapseCandidate<T>>>;

/// Refines a coarse anchor and returns, per anchor vertex, the collapses applied.
pub fn refine_anchor_with<T: Real>(
    coarse: &AnchorMesh<T>,
    target: &TriangleMesh<T>,
    config: FineConfig,
) -> Result<(AnchorMesh<T>, CollapseLog<T>)> {
    if coarse.stage != Stage::Coarse {
        return Err(Error::InvalidParameter(
            "refinement expects a coarse anchor".into(),
        ));
    }
    let n = coarse.vertex_count();
    if coarse.correspondence.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: coarse.correspondence.len(),
        });
    }
    let mut owners = Vec::with_capacity(n);
    for c in &coarse.correspondence {
        match *c {
            Correspondence::Vertex(t) if t < target.vertex_count() => owners.push(t),
            _ => {
                return Err(Error::InvalidParameter(
                    "coarse correspondence is not a valid target vertex".into(),
                ))
            }
        }
    }
    let mut is_anchor_target = vec![false; target.vertex_count()];
    for &t in &owners {
        is_anchor_target[t] = true;
    }

    let mut work = WorkingMesh::new(target);
    let mut positions = coarse.mesh.vertices().to_vec();
    let mut correspondence = coarse.correspondence.clone();
    let mut log = vec![Vec::new(); n];

    for i in traversal_order(&build_adjacency(&coarse.mesh)) {
        let u = owners[i];
        for _ in 0..config.collapses_per_anchor {
            let here = work.positions[u];
            let mut best: Option<(CollapseCandidate<T>, Quadric<T>, usize)> = None;
            for w in work.neighbors(u) {
                if is_anchor_target[w] {
                    continue;
                }
                let q = edge_quadric(&work.quadrics[u], &work.quadrics[w]);
                let (point, error) = optimal_point(&q, &here, &work.positions[w]);
                let cand = CollapseCandidate {
                    edge: (u.min(w), u.max(w)),
                    point,
                    error,
                    start_error: q.evaluate(&here),
                };
                let take = match &best {
                    None => true,
                    Some((b, _, _)) => error < b.error || (error == b.error && cand.edge < b.edge),
                };
                if take {
                    best = Some((cand, q, w));
                }
            }
            let Some((cand, q, w)) = best else {
                break;
            };
            work.collapse(u, w, cand.point, q);
            positions[i] = cand.point;
            correspondence[i] = Correspondence::OffVertex;
            log[i].push(cand);
        }
    }

    Ok((
        AnchorMesh {
            mesh: coarse.mesh.with_vertices(positions)?,
            correspondence,
            stage: Stage::Fine,
        },
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::{generate_coarse_anchor, CoarseConfig};
    use crate::octree::Octree;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn grid(n: usize, spacing: f64, z: f64) -> TriangleMesh<f64> {
        let mut verts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                verts.push(v(i as f64 * spacing, j as f64 * spacing, z));
            }
        }
        let mut faces = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                faces.push([a, a + 1, a + n]);
                faces.push([a + 1, a + n + 1, a + n]);
            }
        }
        TriangleMesh::new(verts, faces).unwrap()
    }

    fn coarse_for(base: &TriangleMesh<f64>, target: &TriangleMesh<f64>) -> AnchorMesh<f64> {
        let index = Octree::build(target.vertices(), 8).unwrap();
        generate_coarse_anchor(
            base,
            &build_adjacency(base),
            target,
            &index,
            CoarseConfig::default(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn flat_target_refines_without_error() {
        let target = grid(12, 1.0, 0.0);
        let base = grid(4, 3.3, 0.0);
        let coarse = coarse_for(&base, &target);
        let (fine, log) = refine_anchor_with(&coarse, &target, FineConfig::default()).unwrap();
        assert_eq!(fine.stage, Stage::Fine);
        assert_eq!(fine.mesh.faces(), base.faces());
        for (p, steps) in fine.mesh.vertices().iter().zip(&log) {
            assert!(p.z().abs() < 1e-9);
            for c in steps {
                assert!(c.error < 1e-9);
            }
        }
    }

    #[test]
    fn isolated_anchor_vertex_keeps_coarse_position() {
        let mut verts = grid(3, 1.0, 0.0).into_parts().0;
        verts.push(v(10.0, 10.0, 10.0));
        let target = TriangleMesh::new(verts, grid(3, 1.0, 0.0).faces().to_vec()).unwrap();
        let base = TriangleMesh::new(
            vec![v(9.0, 9.0, 9.0), v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let coarse = coarse_for(&base, &target);
        assert_eq!(coarse.correspondence[0], Correspondence::Vertex(9));
        let fine = refine_anchor(&coarse, &target).unwrap();
        assert_eq!(fine.mesh.vertices()[0], v(10.0, 10.0, 10.0));
        assert_eq!(fine.correspondence[0], Correspondence::Vertex(9));
    }

    #[test]
    fn anchors_never_merge_into_each_other() {
        // every target vertex is an anchor correspondent: nothing may collapse
        let target = grid(3, 1.0, 0.0);
        let coarse = coarse_for(&target, &target);
        let fine = refine_anchor(&coarse, &target).unwrap();
        assert_eq!(fine.mesh.vertices(), target.vertices());
    }

    #[test]
    fn refined_error_does_not_exceed_coarse_error() {
        // bumpy surface so quadrics are non-trivial
        let mut target = grid(15, 1.0, 0.0);
        for p in target.vertices_mut() {
            let (x, y) = (p.x(), p.y());
            p[2] = (0.7 * x).sin() * (0.5 * y).cos();
        }
        let base = grid(5, 3.4, 0.0);
        let coarse = coarse_for(&base, &target);
        let (fine, log) = refine_anchor_with(
            &coarse,
            &target,
            FineConfig {
                collapses_per_anchor: 2,
            },
        )
        .unwrap();
        let mut moved = 0;
        for steps in &log {
            for c in steps {
                assert!(c.error <= c.start_error + 1e-12);
                assert!(c.error >= 0.0);
            }
            moved += steps.len();
        }
        assert!(moved > 0);
        assert_eq!(fine.mesh.faces(), base.faces());
    }

    #[test]
    fn rejects_fine_input() {
        let target = grid(3, 1.0, 0.0);
        let mut coarse = coarse_for(&target, &target);
        coarse.stage = Stage::Fine;
        assert!(refine_anchor(&coarse, &target).is_err());
    }
}
