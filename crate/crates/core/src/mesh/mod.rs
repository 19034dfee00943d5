//! Indexed triangle meshes, combinatorial adjacency and face planes.
//!
//! Meshes may be non-manifold and may contain zero-area faces; only repeated
//! indices inside a face and out-of-range indices are rejected.

mod closest;
mod obj;

pub use closest::{
    closest_point_on_surface, closest_point_on_triangle, SurfaceIndex, SurfacePoint,
};
pub use obj::{load_mesh, save_mesh};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vec3;

pub type Face = [usize; 3];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<Face>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<Face>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: i,
                        vertex_count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateIndices { face: fi });
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            faces: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    /// Positions may be edited freely; connectivity is fixed after construction.
    pub fn vertices_mut(&mut self) -> &mut [Vec3<T>] {
        &mut self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Vec3<T>>, Vec<Face>) {
        (self.vertices, self.faces)
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3<T>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                expected: self.vertices.len(),
                actual: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
        })
    }

    pub fn triangle(&self, face: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Axis-aligned bounding box, `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (lo.min_by_axis(v), hi.max_by_axis(v))
        }))
    }

    pub fn bounding_diagonal(&self) -> T {
        self.bounds()
            .map(|(lo, hi)| (hi - lo).norm())
            .unwrap_or_else(T::zero)
    }

    /// Twice-area normal of a face (unnormalized cross product of its edges).
    pub fn face_normal_raw(&self, face: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> T {
        self.face_normal_raw(face).norm() * T::half()
    }

    pub fn face_plane(&self, face: usize) -> Result<Plane<T>> {
        face_plane(self, face)
    }
}

/// Vertex and face neighborhoods of a mesh. All sets are kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMap {
    neighbors: Vec<Vec<usize>>,
    incident_faces: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl AdjacencyMap {
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn incident_faces(&self, v: usize) -> &[usize] {
        &self.incident_faces[v]
    }

    /// Undirected edges, smaller index first, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }
}

pub fn build_adjacency<T: Real>(mesh: &TriangleMesh<T>) -> AdjacencyMap {
    let n = mesh.vertex_count();
    let mut neighbors = vec![Vec::new(); n];
    let mut incident_faces = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(mesh.face_count() * 3);
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            neighbors[a].push(b);
            neighbors[b].push(a);
            incident_faces[a].push(fi);
            edges.push((a.min(b), a.max(b)));
        }
    }
    for list in neighbors.iter_mut().chain(incident_faces.iter_mut()) {
        list.sort_unstable();
        list.dedup();
    }
    edges.sort_unstable();
    edges.dedup();
    AdjacencyMap {
        neighbors,
        incident_faces,
        edges,
    }
}

/// Plane `ax + by + cz + d = 0` with `a² + b² + c² + d² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> Plane<T> {
    /// Plane through `point` with the given normal direction, scaled to unit 4-norm.
    pub fn from_point_normal(point: Vec3<T>, normal: Vec3<T>) -> Option<Self> {
        let n = normal.normalized()?;
        let d = -n.dot(&point);
        Self::from_coefficients(n.x(), n.y(), n.z(), d)
    }

    /// Scales arbitrary coefficients to unit 4-norm.
    pub fn from_coefficients(a: T, b: T, c: T, d: T) -> Option<Self> {
        let norm = (a * a + b * b + c * c + d * d).sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return None;
        }
        Some(Self {
            a: a / norm,
            b: b / norm,
            c: c / norm,
            d: d / norm,
        })
    }

    pub fn coefficients(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `ax + by + cz + d` at a point.
    pub fn residual(&self, p: &Vec3<T>) -> T {
        self.a * p.x() + self.b * p.y() + self.c * p.z() + self.d
    }
}

/// Supporting plane of a face, oriented by the face winding.
pub fn face_plane<T: Real>(mesh: &TriangleMesh<T>, face: usize) -> Result<Plane<T>> {
    if mesh.face_area(face) <= T::DEGENERATE_AREA {
        return Err(Error::ZeroAreaFace { face });
    }
    let [a, b, c] = mesh.triangle(face);
    let n = (b - a)
        .cross(&(c - a))
        .normalized()
        .ok_or(Error::ZeroAreaFace { face })?;
    // d from the centroid keeps all three residuals small and balanced.
    let centroid = (a + b + c) / T::lit(3.0);
    Plane::from_point_normal(centroid, n).ok_or(Error::ZeroAreaFace { face })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn unit_triangle() -> TriangleMesh<f64> {
        TriangleMesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_and_repeated_indices() {
        let verts = vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)];
        assert!(matches!(
            TriangleMesh::new(verts.clone(), vec![[0, 1, 3]]),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            TriangleMesh::new(verts, vec![[0, 1, 1]]),
            Err(Error::DegenerateIndices { face: 0 })
        ));
    }

    #[test]
    fn single_triangle_adjacency() {
        let adj = build_adjacency(&unit_triangle());
        for i in 0..3 {
            assert_eq!(adj.valence(i), 2);
            assert_eq!(adj.incident_faces(i), &[0]);
        }
        assert_eq!(adj.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn two_triangles_sharing_an_edge() {
        let m = TriangleMesh::new(
            vec![
                v(0.0, 0.0, 0.0),
                v(1.0, 0.0, 0.0),
                v(0.0, 1.0, 0.0),
                v(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let adj = build_adjacency(&m);
        assert_eq!(adj.valence(1), 3);
        assert_eq!(adj.valence(2), 3);
        assert_eq!(adj.edges().len(), 5);
    }

    #[test]
    fn unit_z_plane() {
        let p = face_plane(&unit_triangle(), 0).unwrap();
        assert_eq!(p.coefficients(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn raised_plane_uses_four_norm() {
        let m = TriangleMesh::new(
            vec![v(0.0, 0.0, 1.0), v(1.0, 0.0, 1.0), v(0.0, 1.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let p = face_plane(&m, 0).unwrap();
        let s = 0.5f64.sqrt();
        assert!((p.c - s).abs() < 1e-15);
        assert!((p.d + s).abs() < 1e-15);
        assert!(p.a.abs() < 1e-15 && p.b.abs() < 1e-15);
    }

    #[test]
    fn zero_area_face_has_no_plane() {
        let m = TriangleMesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(face_plane(&m, 0), Err(Error::ZeroAreaFace { face: 0 }));
    }

    #[test]
    fn face_plane_in_single_precision() {
        let m = TriangleMesh::<f32>::new(
            vec![
                Vec3::new(0.0, 0.0, 2.0),
                Vec3::new(1.0, 0.0, 2.0),
                Vec3::new(0.0, 1.0, 2.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let p = face_plane(&m, 0).unwrap();
        for q in m.vertices() {
            assert!(p.residual(q).abs() < 1e-6);
        }
    }
}
