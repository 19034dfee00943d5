//! Exact closest-point queries against triangles and triangle meshes.

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint<T> {
    pub position: Vec3<T>,
    /// Index of the face the point lies on. Zero for a bare triangle query.
    pub face: usize,
    pub barycentric: [T; 3],
    /// Squared distance from the query point.
    pub distance_squared: T,
}

impl<T: Real> SurfacePoint<T> {
    pub fn distance(&self) -> T {
        self.distance_squared.sqrt()
    }
}

fn from_barycentric<T: Real>(p: &Vec3<T>, tri: &[Vec3<T>; 3], bary: [T; 3]) -> SurfacePoint<T> {
    let position = tri[0] * bary[0] + tri[1] * bary[1] + tri[2] * bary[2];
    SurfacePoint {
        position,
        face: 0,
        barycentric: bary,
        distance_squared: p.distance_squared(&position),
    }
}

/// Closest point on a segment as the parameter `t` in `[0, 1]` along `a → b`.
fn segment_parameter<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>) -> T {
    let ab = *b - *a;
    let len2 = ab.norm_squared();
    if len2 > T::zero() {
        ((*p - *a).dot(&ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// Closest point on the closed triangle. Zero-area triangles are handled as their
/// longest edge segment.
pub fn closest_point_on_triangle<T: Real>(p: &Vec3<T>, tri: &[Vec3<T>; 3]) -> SurfacePoint<T> {
    let [a, b, c] = *tri;
    let ab = b - a;
    let ac = c - a;
    let area = ab.cross(&ac).norm() * T::half();
    if !(area > T::DEGENERATE_AREA) {
        return closest_on_longest_edge(p, tri);
    }

    // Voronoi-region walk over vertices, edges and the interior.
    let ap = *p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= T::zero() && d2 <= T::zero() {
        return from_barycentric(p, tri, [T::one(), T::zero(), T::zero()]);
    }

    let bp = *p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= T::zero() && d4 <= d3 {
        return from_barycentric(p, tri, [T::zero(), T::one(), T::zero()]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= T::zero() && d1 >= T::zero() && d3 <= T::zero() {
        let v = d1 / (d1 - d3);
        return from_barycentric(p, tri, [T::one() - v, v, T::zero()]);
    }

    let cp = *p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= T::zero() && d5 <= d6 {
        return from_barycentric(p, tri, [T::zero(), T::zero(), T::one()]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= T::zero() && d2 >= T::zero() && d6 <= T::zero() {
        let w = d2 / (d2 - d6);
        return from_barycentric(p, tri, [T::one() - w, T::zero(), w]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= T::zero() && (d4 - d3) >= T::zero() && (d5 - d6) >= T::zero() {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return from_barycentric(p, tri, [T::zero(), T::one() - w, w]);
    }

    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    from_barycentric(p, tri, [T::one() - v - w, v, w])
}

fn closest_on_longest_edge<T: Real>(p: &Vec3<T>, tri: &[Vec3<T>; 3]) -> SurfacePoint<T> {
    // (start, end) corner indices for the three edges
    const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];
    let (s, e) = EDGES
        .iter()
        .copied()
        .fold(None::<((usize, usize), T)>, |best, (s, e)| {
            let len = tri[s].distance_squared(&tri[e]);
            match best {
                Some((_, l)) if l >= len => best,
                _ => Some(((s, e), len)),
            }
        })
        .map(|(edge, _)| edge)
        .unwrap_or((0, 1));
    let t = segment_parameter(p, &tri[s], &tri[e]);
    let mut bary = [T::zero(); 3];
    bary[s] = T::one() - t;
    bary[e] += t;
    from_barycentric(p, tri, bary)
}

#[inline]
fn better<T: Real>(candidate: &SurfacePoint<T>, best: &Option<SurfacePoint<T>>) -> bool {
    match best {
        None => true,
        Some(b) => {
            candidate.distance_squared < b.distance_squared
                || (candidate.distance_squared == b.distance_squared && candidate.face < b.face)
        }
    }
}

/// Exhaustive scan over every face; ties go to the lowest face index.
pub fn closest_point_on_surface<T: Real>(
    mesh: &TriangleMesh<T>,
    p: &Vec3<T>,
) -> Result<SurfacePoint<T>> {
    let mut best: Option<SurfacePoint<T>> = None;
    for face in 0..mesh.face_count() {
        let mut sp = closest_point_on_triangle(p, &mesh.triangle(face));
        sp.face = face;
        if better(&sp, &best) {
            best = Some(sp);
        }
    }
    best.ok_or(Error::EmptyMesh)
}

const BVH_LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct BvhNode<T> {
    lo: Vec3<T>,
    hi: Vec3<T>,
    /// Leaf: range into `order`. Internal: child node indices.
    kind: BvhKind,
}

#[derive(Debug, Clone, Copy)]
enum BvhKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

/// Bounding-volume hierarchy over the faces of a mesh. Query results are
/// identical to [`closest_point_on_surface`], tie-break included.
#[derive(Debug, Clone)]
pub struct SurfaceIndex<'a, T> {
    mesh: &'a TriangleMesh<T>,
    nodes: Vec<BvhNode<T>>,
    order: Vec<usize>,
}

impl<'a, T: Real> SurfaceIndex<'a, T> {
    pub fn new(mesh: &'a TriangleMesh<T>) -> Result<Self> {
        if mesh.face_count() == 0 {
            return Err(Error::EmptyMesh);
        }
        let boxes: Vec<(Vec3<T>, Vec3<T>)> = (0..mesh.face_count())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                (
                    a.min_by_axis(&b).min_by_axis(&c),
                    a.max_by_axis(&b).max_by_axis(&c),
                )
            })
            .collect();
        let mut order: Vec<usize> = (0..mesh.face_count()).collect();
        let mut nodes = Vec::with_capacity(2 * mesh.face_count() / BVH_LEAF_SIZE + 1);
        build_node(&boxes, &mut order, 0, mesh.face_count(), &mut nodes);
        Ok(Self { mesh, nodes, order })
    }

    pub fn mesh(&self) -> &TriangleMesh<T> {
        self.mesh
    }

    pub fn closest_point(&self, p: &Vec3<T>) -> SurfacePoint<T> {
        let mut best: Option<SurfacePoint<T>> = None;
        let mut stack: Vec<(usize, T)> = vec![(0, box_distance_squared(p, &self.nodes[0]))];
        while let Some((ni, dist)) = stack.pop() {
            if let Some(b) = &best {
                // equality still visited: a lower face index may tie
                if dist > b.distance_squared {
                    continue;
                }
            }
            match self.nodes[ni].kind {
                BvhKind::Leaf { start, end } => {
                    for &face in &self.order[start..end] {
                        let mut sp = closest_point_on_triangle(p, &self.mesh.triangle(face));
                        sp.face = face;
                        if better(&sp, &best) {
                            best = Some(sp);
                        }
                    }
                }
                BvhKind::Inner { left, right } => {
                    let dl = box_distance_squared(p, &self.nodes[left]);
                    let dr = box_distance_squared(p, &self.nodes[right]);
                    // push the farther child first so the nearer one is expanded next
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        best.expect("index holds at least one face")
    }
}

fn build_node<T: Real>(
    boxes: &[(Vec3<T>, Vec3<T>)],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<BvhNode<T>>,
) -> usize {
    let (mut lo, mut hi) = boxes[order[start]];
    for &f in &order[start + 1..end] {
        lo = lo.min_by_axis(&boxes[f].0);
        hi = hi.max_by_axis(&boxes[f].1);
    }
    let id = nodes.len();
    nodes.push(BvhNode {
        lo,
        hi,
        kind: BvhKind::Leaf { start, end },
    });
    if end - start <= BVH_LEAF_SIZE {
        return id;
    }

    let extent = hi - lo;
    let axis = if extent[0] >= extent[1] && extent[0] >= extent[2] {
        0
    } else if extent[1] >= extent[2] {
        1
    } else {
        2
    };
    let centroid = |f: usize| boxes[f].0[axis] + boxes[f].1[axis];
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
        centroid(x)
            .partial_cmp(&centroid(y))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let left = build_node(boxes, order, start, mid, nodes);
    let right = build_node(boxes, order, mid, end, nodes);
    nodes[id].kind = BvhKind::Inner { left, right };
    id
}

fn box_distance_squared<T: Real>(p: &Vec3<T>, node: &BvhNode<T>) -> T {
    let mut d = T::zero();
    for k in 0..3 {
        let excess = if p[k] < node.lo[k] {
            node.lo[k] - p[k]
        } else if p[k] > node.hi[k] {
            p[k] - node.hi[k]
        } else {
            T::zero()
        };
        d += excess * excess;
    }
    d
}
