//! Midpoint subdivision of the anchor mesh and the displacement field that
//! carries it onto the target surface.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, SurfaceIndex, TriangleMesh};
use crate::scalar::Real;
use crate::vector::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    Original(usize),
    /// Midpoint of an edge of the previous level, smaller index first.
    Midpoint(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdividedMesh<T> {
    pub mesh: TriangleMesh<T>,
    pub level: usize,
    /// Provenance of each vertex relative to the previous level.
    pub parents: Vec<Parent>,
}

/// Splits every triangle 1→4 per level. Vertices are numbered originals first,
/// then one midpoint per edge in ascending `(min, max)` edge order.
pub fn midpoint_subdivide<T: Real>(mesh: &TriangleMesh<T>, levels: usize) -> SubdividedMesh<T> {
    let mut current = mesh.clone();
    let mut parents: Vec<Parent> = (0..mesh.vertex_count()).map(Parent::Original).collect();
    for _ in 0..levels {
        let (next, p) = subdivide_once(&current);
        current = next;
        parents = p;
    }
    SubdividedMesh {
        mesh: current,
        level: levels,
        parents,
    }
}

fn subdivide_once<T: Real>(mesh: &TriangleMesh<T>) -> (TriangleMesh<T>, Vec<Parent>) {
    let adjacency = build_adjacency(mesh);
    let edges = adjacency.edges();
    let n = mesh.vertex_count();

    let mut vertices = mesh.vertices().to_vec();
    vertices.reserve(edges.len());
    let mut parents: Vec<Parent> = (0..n).map(Parent::Original).collect();
    for &(a, b) in edges {
        vertices.push(mesh.vertices()[a].midpoint(&mesh.vertices()[b]));
        parents.push(Parent::Midpoint(a, b));
    }
    let midpoint = |a: usize, b: usize| -> usize {
        let key = (a.min(b), a.max(b));
        n + edges
            .binary_search(&key)
            .expect("face edge is in the edge list")
    };

    let mut faces = Vec::with_capacity(mesh.face_count() * 4);
    for &[a, b, c] in mesh.faces() {
        let ab = midpoint(a, b);
        let bc = midpoint(b, c);
        let ca = midpoint(c, a);
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }
    let next = TriangleMesh::new(vertices, faces).expect("subdivision keeps faces valid");
    (next, parents)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField<T> {
    pub vectors: Vec<Vec3<T>>,
    pub level: usize,
}

impl<T: Real> DisplacementField<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Residual from each subdivided vertex to its closest point on the target surface.
pub fn compute_displacements<T: Real>(
    sub: &SubdividedMesh<T>,
    target: &TriangleMesh<T>,
) -> Result<DisplacementField<T>> {
    let index = SurfaceIndex::new(target)?;
    let vectors = sub
        .mesh
        .vertices()
        .par_iter()
        .map(|v| index.closest_point(v).position - *v)
        .collect();
    Ok(DisplacementField {
        vectors,
        level: sub.level,
    })
}

pub fn apply_displacements<T: Real>(
    sub: &SubdividedMesh<T>,
    field: &DisplacementField<T>,
) -> Result<TriangleMesh<T>> {
    if field.len() != sub.mesh.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: sub.mesh.vertex_count(),
            actual: field.len(),
        });
    }
    let moved = sub
        .mesh
        .vertices()
        .iter()
        .zip(&field.vectors)
        .map(|(p, d)| *p + *d)
        .collect();
    sub.mesh.with_vertices(moved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::closest_point_on_surface;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn triangle() -> TriangleMesh<f64> {
        TriangleMesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn grid(n: usize, z: f64) -> TriangleMesh<f64> {
        let mut verts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                verts.push(v(i as f64, j as f64, z));
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

    fn random_mesh(rng: &mut ChaCha8Rng, n: usize, f: usize) -> TriangleMesh<f64> {
        let verts = (0..n)
            .map(|_| {
                v(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let mut faces = Vec::new();
        let mut seen = std::collections::HashSet::new();
        while faces.len() < f {
            let t = [
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            ];
            let mut key = t;
            key.sort_unstable();
            if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] && seen.insert(key) {
                faces.push(t);
            }
        }
        TriangleMesh::new(verts, faces).unwrap()
    }

    #[test]
    fn level_zero_is_identity() {
        let m = triangle();
        let s = midpoint_subdivide(&m, 0);
        assert_eq!(s.mesh, m);
        assert_eq!(
            s.parents,
            vec![
                Parent::Original(0),
                Parent::Original(1),
                Parent::Original(2)
            ]
        );
    }

    #[test]
    fn one_triangle_one_level() {
        let s = midpoint_subdivide(&triangle(), 1);
        assert_eq!(s.mesh.vertex_count(), 6);
        assert_eq!(s.mesh.face_count(), 4);
        assert_eq!(s.parents[3], Parent::Midpoint(0, 1));
        assert_eq!(s.parents[4], Parent::Midpoint(0, 2));
        assert_eq!(s.parents[5], Parent::Midpoint(1, 2));
        assert_eq!(s.mesh.vertices()[5], v(0.5, 0.5, 0.0));
    }

    #[test]
    fn random_mesh_two_levels_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = random_mesh(&mut rng, 40, 60);
        let e0 = build_adjacency(&m).edges().len();
        let s1 = midpoint_subdivide(&m, 1);
        assert_eq!(s1.mesh.vertex_count(), m.vertex_count() + e0);
        let e1 = build_adjacency(&s1.mesh).edges().len();
        // each edge splits in two, each face adds three interior edges
        assert_eq!(e1, 2 * e0 + 3 * m.face_count());
        let s2 = midpoint_subdivide(&m, 2);
        assert_eq!(s2.mesh.face_count(), 16 * m.face_count());
        assert_eq!(s2.mesh.vertex_count(), s1.mesh.vertex_count() + e1);
        for (i, p) in s2.parents.iter().enumerate() {
            if let Parent::Midpoint(a, b) = *p {
                let mid = s1.mesh.vertices()[a].midpoint(&s1.mesh.vertices()[b]);
                assert!(s2.mesh.vertices()[i].distance(&mid) < 1e-12);
            }
        }
        assert_eq!(midpoint_subdivide(&m, 2), s2);
    }

    #[test]
    fn displacement_is_zero_on_surface() {
        let g = grid(4, 0.0);
        let s = midpoint_subdivide(&g, 2);
        let d = compute_displacements(&s, &g).unwrap();
        assert!(d.vectors.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn uniform_offset_between_parallel_planes() {
        let s = midpoint_subdivide(&grid(4, 0.0), 1);
        let d = compute_displacements(&s, &grid(4, 0.25)).unwrap();
        assert!(d
            .vectors
            .iter()
            .all(|x| x.distance(&v(0.0, 0.0, 0.25)) < 1e-15));
    }

    #[test]
    fn displacements_match_exhaustive_scan_and_land_on_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let target = random_mesh(&mut rng, 50, 80);
        let anchor = random_mesh(&mut rng, 12, 15);
        let s = midpoint_subdivide(&anchor, 1);
        let d = compute_displacements(&s, &target).unwrap();
        for (p, dv) in s.mesh.vertices().iter().zip(&d.vectors) {
            let sp = closest_point_on_surface(&target, p).unwrap();
            assert_eq!(*dv, sp.position - *p);
        }
        let recon = apply_displacements(&s, &d).unwrap();
        assert_eq!(recon.faces(), s.mesh.faces());
        for p in recon.vertices() {
            assert!(closest_point_on_surface(&target, p).unwrap().distance() < 1e-9);
        }
        // a second projection cannot move further than the first
        let sub2 = SubdividedMesh {
            mesh: recon,
            level: s.level,
            parents: s.parents.clone(),
        };
        let d2 = compute_displacements(&sub2, &target).unwrap();
        for (a, b) in d2.vectors.iter().zip(&d.vectors) {
            assert!(a.norm() <= b.norm() + 1e-12);
        }
    }

    #[test]
    fn apply_edge_cases() {
        let s = midpoint_subdivide(&grid(3, 1.0), 1);
        let zero = DisplacementField {
            vectors: vec![Vec3::zero(); s.mesh.vertex_count()],
            level: 1,
        };
        assert_eq!(apply_displacements(&s, &zero).unwrap(), s.mesh);
        let neg = DisplacementField {
            vectors: s.mesh.vertices().iter().map(|p| -*p).collect(),
            level: 1,
        };
        assert!(apply_displacements(&s, &neg)
            .unwrap()
            .vertices()
            .iter()
            .all(|p| p.norm() == 0.0));
        let short = DisplacementField {
            vectors: vec![],
            level: 1,
        };
        assert!(matches!(
            apply_displacements(&s, &short),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
