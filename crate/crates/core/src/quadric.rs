//! Quadric error forms: sums of plane outer products `P Pᵀ`.

use std::ops::{Add, AddAssign};

use crate::mesh::{AdjacencyMap, Plane, TriangleMesh};
use crate::scalar::Real;
use crate::vector::Vec3;

/// Symmetric 4x4 matrix stored as its upper triangle:
///
/// ```text
/// | q0 q1 q2 q3 |
/// | q1 q4 q5 q6 |
/// | q2 q5 q7 q8 |
/// | q3 q6 q8 q9 |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric<T> {
    q: [T; 10],
}

impl<T: Real> Default for Quadric<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> Quadric<T> {
    pub fn zero() -> Self {
        Self { q: [T::zero(); 10] }
    }

    pub fn from_plane(plane: &Plane<T>) -> Self {
        let [a, b, c, d] = plane.coefficients();
        Self {
            q: [
                a * a,
                a * b,
                a * c,
                a * d,
                b * b,
                b * c,
                b * d,
                c * c,
                c * d,
                d * d,
            ],
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            q: self.q.map(|c| c * k),
        }
    }

    pub fn coefficients(&self) -> &[T; 10] {
        &self.q
    }

    /// Full matrix, row-major.
    pub fn matrix(&self) -> [[T; 4]; 4] {
        let q = &self.q;
        [
            [q[0], q[1], q[2], q[3]],
            [q[1], q[4], q[5], q[6]],
            [q[2], q[5], q[7], q[8]],
            [q[3], q[6], q[8], q[9]],
        ]
    }

    /// `Xᵀ Q X` at the homogeneous point `X = [x y z 1]`.
    pub fn evaluate(&self, p: &Vec3<T>) -> T {
        let q = &self.q;
        let (x, y, z) = (p.x(), p.y(), p.z());
        let two = T::two();
        q[0] * x * x
            + two * q[1] * x * y
            + two * q[2] * x * z
            + two * q[3] * x
            + q[4] * y * y
            + two * q[5] * y * z
            + two * q[6] * y
            + q[7] * z * z
            + two * q[8] * z
            + q[9]
    }

    /// Stationary point of `Xᵀ Q X` over affine points, if the 3x3 block is
    /// well conditioned (1-norm condition estimate below `T::CONDITION_LIMIT`).
    pub fn minimizer(&self) -> Option<Vec3<T>> {
        let q = &self.q;
        let m = [[q[0], q[1], q[2]], [q[1], q[4], q[5]], [q[2], q[5], q[7]]];
        let rhs = Vec3::new(-q[3], -q[6], -q[8]);

        let cof = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
            ],
            [
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
            ],
            [
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let det = m[0][0] * cof[0][0] + m[0][1] * cof[0][1] + m[0][2] * cof[0][2];
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        // inverse = adjugate / det, adjugate = cofactorᵀ
        let mut inv = [[T::zero(); 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = cof[j][i] / det;
            }
        }
        let col_norm = |a: &[[T; 3]; 3]| {
            (0..3)
                .map(|j| a[0][j].abs() + a[1][j].abs() + a[2][j].abs())
                .fold(T::zero(), T::max)
        };
        let condition = col_norm(&m) * col_norm(&inv);
        if !(condition < T::CONDITION_LIMIT) {
            return None;
        }
        let x = Vec3::new(
            inv[0][0] * rhs[0] + inv[0][1] * rhs[1] + inv[0][2] * rhs[2],
            inv[1][0] * rhs[0] + inv[1][1] * rhs[1] + inv[1][2] * rhs[2],
            inv[2][0] * rhs[0] + inv[2][1] * rhs[1] + inv[2][2] * rhs[2],
        );
        x.is_finite().then_some(x)
    }
}

impl<T: Real> Add for Quadric<T> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl<T: Real> AddAssign for Quadric<T> {
    fn add_assign(&mut self, o: Self) {
        for (a, b) in self.q.iter_mut().zip(o.q) {
            *a += b;
        }
    }
}

pub fn plane_quadric<T: Real>(plane: &Plane<T>) -> Quadric<T> {
    Quadric::from_plane(plane)
}

/// Sum of plane quadrics over the non-degenerate faces incident to `v`.
pub fn vertex_quadric<T: Real>(
    mesh: &TriangleMesh<T>,
    adjacency: &AdjacencyMap,
    v: usize,
) -> Quadric<T> {
    let mut q = Quadric::zero();
    for &f in adjacency.incident_faces(v) {
        if let Ok(plane) = mesh.face_plane(f) {
            q += Quadric::from_plane(&plane);
        }
    }
    q
}

pub fn edge_quadric<T: Real>(qa: &Quadric<T>, qb: &Quadric<T>) -> Quadric<T> {
    *qa + *qb
}

/// Minimizer of `q` and its (non-negative) error. When the system is singular or
/// ill-conditioned, the best of `a`, the midpoint and `b` is returned, preferring
/// them in that order on ties.
pub fn optimal_point<T: Real>(
    q: &Quadric<T>,
    fallback_a: &Vec3<T>,
    fallback_b: &Vec3<T>,
) -> (Vec3<T>, T) {
    if let Some(p) = q.minimizer() {
        return (p, q.evaluate(&p).max(T::zero()));
    }
    let mid = fallback_a.midpoint(fallback_b);
    let mut best = (*fallback_a, q.evaluate(fallback_a));
    for cand in [mid, *fallback_b] {
        let e = q.evaluate(&cand);
        if e < best.1 {
            best = (cand, e);
        }
    }
    (best.0, best.1.max(T::zero()))
}
