//! Global QEM decimation, used to derive reference base meshes from full frames.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, Face, Plane, TriangleMesh};
use crate::quadric::{edge_quadric, optimal_point, plane_quadric, Quadric};
use crate::scalar::Real;
use crate::vector::Vec3;

/// Boundary edges carry a perpendicular constraint plane with this weight so open
/// borders are not eaten away.
const BOUNDARY_WEIGHT: f64 = 10.0;

struct Candidate<T> {
    error: T,
    edge: (usize, usize),
    stamp: (u32, u32),
    point: Vec3<T>,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Candidate<T> {}

impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Candidate<T> {
    // reversed: BinaryHeap pops the smallest error, then the smallest edge
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .error
            .partial_cmp(&self.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

struct Decimator<T> {
    positions: Vec<Vec3<T>>,
    quadrics: Vec<Quadric<T>>,
    faces: Vec<Face>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    vertex_alive: Vec<bool>,
    stamp: Vec<u32>,
    heap: BinaryHeap<Candidate<T>>,
}

impl<T: Real> Decimator<T> {
    fn new(mesh: &TriangleMesh<T>) -> Self {
        let adjacency = build_adjacency(mesh);
        let n = mesh.vertex_count();
        let mut quadrics = vec![Quadric::zero(); n];
        for (f, face) in mesh.faces().iter().enumerate() {
            if let Ok(plane) = mesh.face_plane(f) {
                let q = plane_quadric(&plane);
                for &v in face {
                    quadrics[v] += q;
                }
            }
        }
        let mut d = Self {
            positions: mesh.vertices().to_vec(),
            quadrics,
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.face_count()],
            vertex_faces: (0..n)
                .map(|v| adjacency.incident_faces(v).to_vec())
                .collect(),
            vertex_alive: vec![true; n],
            stamp: vec![0; n],
            heap: BinaryHeap::new(),
        };
        d.add_boundary_constraints();
        for &(u, v) in adjacency.edges() {
            d.push(u, v);
        }
        d
    }

    fn add_boundary_constraints(&mut self) {
        let n = self.positions.len();
        for u in 0..n {
            for v in self.neighbors(u) {
                if v < u {
                    continue;
                }
                let shared = self.shared_faces(u, v);
                if shared.len() != 1 {
                    continue;
                }
                let f = shared[0];
                let [a, b, c] = self.faces[f];
                let face_normal = (self.positions[b] - self.positions[a])
                    .cross(&(self.positions[c] - self.positions[a]));
                let along = self.positions[v] - self.positions[u];
                if let Some(plane) =
                    Plane::from_point_normal(self.positions[u], along.cross(&face_normal))
                {
                    let q = plane_quadric(&plane).scaled(T::lit(BOUNDARY_WEIGHT));
                    self.quadrics[u] += q;
                    self.quadrics[v] += q;
                }
            }
        }
    }

    fn alive_faces(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertex_faces[v]
            .iter()
            .copied()
            .filter(move |&f| self.face_alive[f])
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .alive_faces(v)
            .flat_map(|f| self.faces[f])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn shared_faces(&self, u: usize, v: usize) -> Vec<usize> {
        self.alive_faces(u)
            .filter(|&f| self.faces[f].contains(&v))
            .collect()
    }

    fn is_boundary_vertex(&self, v: usize) -> bool {
        self.neighbors(v)
            .into_iter()
            .any(|w| self.shared_faces(v, w).len() == 1)
    }

    fn push(&mut self, u: usize, v: usize) {
        let q = edge_quadric(&self.quadrics[u], &self.quadrics[v]);
        let (point, error) = optimal_point(&q, &self.positions[u], &self.positions[v]);
        self.heap.push(Candidate {
            error,
            edge: (u.min(v), u.max(v)),
            stamp: (self.stamp[u.min(v)], self.stamp[u.max(v)]),
            point,
        });
    }

    fn collapse_is_valid(&self, u: usize, v: usize, p: &Vec3<T>) -> bool {
        let shared = self.shared_faces(u, v);
        if shared.is_empty() {
            return false;
        }
        // link condition: common neighbors are exactly the shared faces' apexes
        let mut apexes: Vec<usize> = shared
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&w| w != u && w != v)
            .collect();
        apexes.sort_unstable();
        apexes.dedup();
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common: Vec<usize> = nu
            .iter()
            .copied()
            .filter(|w| nv.binary_search(w).is_ok())
            .collect();
        if common != apexes {
            return false;
        }
        if shared.len() > 1 && self.is_boundary_vertex(u) && self.is_boundary_vertex(v) {
            return false;
        }
        // no face may flip or collapse to zero area
        for w in [u, v] {
            for f in self.alive_faces(w) {
                let face = self.faces[f];
                if face.contains(&u) && face.contains(&v) {
                    continue;
                }
                let pts = face.map(|i| self.positions[i]);
                let moved = face.map(|i| {
                    if i == u || i == v {
                        *p
                    } else {
                        self.positions[i]
                    }
                });
                let before = (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
                let after = (moved[1] - moved[0]).cross(&(moved[2] - moved[0]));
                if before.dot(&after) <= T::zero() {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, u: usize, v: usize, p: Vec3<T>) {
        let moved = std::mem::take(&mut self.vertex_faces[v]);
        for f in moved {
            if !self.face_alive[f] {
                continue;
            }
            if self.faces[f].contains(&u) {
                self.face_alive[f] = false;
            } else {
                for idx in self.faces[f].iter_mut() {
                    if *idx == v {
                        *idx = u;
                    }
                }
                self.vertex_faces[u].push(f);
            }
        }
        let alive = &self.face_alive;
        self.vertex_faces[u].retain(|&f| alive[f]);
        self.positions[u] = p;
        let qv = self.quadrics[v];
        self.quadrics[u] += qv;
        self.vertex_alive[v] = false;
        self.stamp[u] += 1;
        self.stamp[v] += 1;
        for w in self.neighbors(u) {
            self.push(u, w);
        }
    }

    fn run(&mut self, target: usize) -> usize {
        let mut alive = self.vertex_alive.iter().filter(|&&a| a).count();
        while alive > target {
            let Some(c) = self.heap.pop() else {
                break;
            };
            let (u, v) = c.edge;
            if !self.vertex_alive[u]
                || !self.vertex_alive[v]
                || c.stamp != (self.stamp[u], self.stamp[v])
            {
                continue;
            }
            if !self.collapse_is_valid(u, v, &c.point) {
                continue;
            }
            self.collapse(u, v, c.point);
            alive -= 1;
        }
        alive
    }

    fn into_mesh(self) -> TriangleMesh<T> {
        let mut remap = vec![usize::MAX; self.positions.len()];
        let mut vertices = Vec::new();
        for (i, p) in self.positions.iter().enumerate() {
            if self.vertex_alive[i] {
                remap[i] = vertices.len();
                vertices.push(*p);
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &a)| a)
            .map(|(f, _)| f.map(|i| remap[i]))
            .collect();
        TriangleMesh::new(vertices, faces).expect("collapses keep faces valid")
    }
}

/// Repeatedly collapses the globally cheapest valid edge until at most
/// `target_vertex_count` vertices remain.
pub fn decimate_to_base<T: Real>(
    mesh: &TriangleMesh<T>,
    target_vertex_count: usize,
) -> Result<TriangleMesh<T>> {
    if target_vertex_count < 4 {
        return Err(Error::InvalidParameter(
            "decimation target must be at least 4 vertices".into(),
        ));
    }
    if target_vertex_count >= mesh.vertex_count() {
        return Ok(mesh.clone());
    }
    let mut d = Decimator::new(mesh);
    let reached = d.run(target_vertex_count);
    if reached > target_vertex_count {
        return Err(Error::InvalidParameter(format!(
            "mesh cannot be decimated below {reached} vertices without breaking its topology"
        )));
    }
    Ok(d.into_mesh())
}
