//! Deterministic synthetic dynamic-mesh sequences.
//!
//! Every frame is the rest shape under a motion model evaluated at the frame
//! time. With topology jitter enabled, each frame additionally re-triangulates a
//! random patch (edge flips plus centroid splits), so consecutive frames have
//! different connectivity while describing nearly the same surface.
//!
//! Randomness comes from SplitMix64 (Steele, Lea & Flood): state advances by
//! `0x9E3779B97F4A7C15`, output mixes with `0xBF58476D1CE4E5B9` and
//! `0x94D049BB133111EB` (shifts 30, 27, 31). The frame-`t` stream is seeded with
//! `seed ^ (t + 1) * 0xD1B54A32D192ED03`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, Face, TriangleMesh};
use crate::scalar::Real;
use crate::subdiv::midpoint_subdivide;
use crate::vector::Vec3;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n` (multiply-shift; `n` must be non-zero).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseShape {
    /// Icosphere after `subdivisions` midpoint levels (12, 42, 162, 642, 2562 ... vertices).
    Sphere { subdivisions: usize },
    /// `cells × cells` square grid in the z = 0 plane.
    Grid { cells: usize },
    /// Closed cube with `cells × cells` quads per side.
    Cube { cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionModel {
    Static,
    /// Displacement per frame.
    Translate {
        velocity: [f64; 3],
    },
    /// Rotation about an axis through the origin, radians per frame.
    Rotate {
        axis: [f64; 3],
        rate: f64,
    },
    /// Everything above the height `pivot` (y axis, model units) bends about the
    /// x-parallel axis through `(0, pivot, 0)`, ramping in smoothly over a quarter
    /// of the shape's extent. Radians per frame.
    Bend {
        pivot: f64,
        rate: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSpec {
    pub shape: BaseShape,
    /// Sphere radius, or grid/cube side length.
    pub scale: f64,
    pub frames: usize,
    pub motion: MotionModel,
    pub topology_jitter: bool,
    pub seed: u64,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self {
            shape: BaseShape::Sphere { subdivisions: 3 },
            scale: 100.0,
            frames: 16,
            motion: MotionModel::Static,
            topology_jitter: false,
            seed: 0,
        }
    }
}

pub fn base_shape<T: Real>(shape: BaseShape, scale: f64) -> Result<TriangleMesh<T>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let mesh = match shape {
        BaseShape::Sphere { subdivisions } => {
            if subdivisions > 7 {
                return Err(Error::InvalidParameter(
                    "sphere subdivisions must be at most 7".into(),
                ));
            }
            icosphere(subdivisions, scale)
        }
        BaseShape::Grid { cells } => {
            if cells == 0 {
                return Err(Error::InvalidParameter(
                    "grid needs at least one cell".into(),
                ));
            }
            grid(cells, scale)
        }
        BaseShape::Cube { cells } => {
            if cells == 0 {
                return Err(Error::InvalidParameter(
                    "cube needs at least one cell per side".into(),
                ));
            }
            cube(cells, scale)
        }
    };
    Ok(mesh.into_real())
}

/// Geometry is built in `f64` and converted once.
struct Raw {
    vertices: Vec<Vec3<f64>>,
    faces: Vec<Face>,
}

impl Raw {
    fn into_real<T: Real>(self) -> TriangleMesh<T> {
        TriangleMesh::new(self.vertices.iter().map(|p| p.cast()).collect(), self.faces)
            .expect("generated faces are valid")
    }
}

fn icosphere(subdivisions: usize, radius: f64) -> Raw {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let verts = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let ico =
        TriangleMesh::new(verts.iter().map(|&a| Vec3(a)).collect(), faces).expect("icosahedron");
    let sub = midpoint_subdivide(&ico, subdivisions).mesh;
    let (vertices, faces) = sub.into_parts();
    Raw {
        vertices: vertices
            .into_iter()
            .map(|p| p.normalized().expect("nonzero") * radius)
            .collect(),
        faces,
    }
}

fn grid(cells: usize, side: f64) -> Raw {
    let n = cells + 1;
    let step = side / cells as f64;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            vertices.push(Vec3::new(
                i as f64 * step - side / 2.0,
                j as f64 * step - side / 2.0,
                0.0,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let a = j * n + i;
            faces.push([a, a + 1, a + n]);
            faces.push([a + 1, a + n + 1, a + n]);
        }
    }
    Raw { vertices, faces }
}

fn cube(cells: usize, side: f64) -> Raw {
    use std::collections::HashMap;
    let c = cells as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    // (origin, u, v) in lattice units with u × v pointing outward
    let sides: [([i64; 3], [i64; 3], [i64; 3]); 6] = [
        ([0, 0, 0], [0, 1, 0], [1, 0, 0]), // z = 0
        ([0, 0, c], [1, 0, 0], [0, 1, 0]), // z = c
        ([0, 0, 0], [1, 0, 0], [0, 0, 1]), // y = 0
        ([0, c, 0], [0, 0, 1], [1, 0, 0]), // y = c
        ([0, 0, 0], [0, 0, 1], [0, 1, 0]), // x = 0
        ([c, 0, 0], [0, 1, 0], [0, 0, 1]), // x = c
    ];
    let mut lattice = |key: [i64; 3], vertices: &mut Vec<Vec3<f64>>| -> usize {
        *index.entry(key).or_insert_with(|| {
            let s = side / cells as f64;
            vertices.push(Vec3::new(
                key[0] as f64 * s - side / 2.0,
                key[1] as f64 * s - side / 2.0,
                key[2] as f64 * s - side / 2.0,
            ));
            vertices.len() - 1
        })
    };
    for (o, u, v) in sides {
        let at = |i: i64, j: i64| {
            [
                o[0] + i * u[0] + j * v[0],
                o[1] + i * u[1] + j * v[1],
                o[2] + i * u[2] + j * v[2],
            ]
        };
        for j in 0..c {
            for i in 0..c {
                let a = lattice(at(i, j), &mut vertices);
                let b = lattice(at(i + 1, j), &mut vertices);
                let d = lattice(at(i, j + 1), &mut vertices);
                let e = lattice(at(i + 1, j + 1), &mut vertices);
                faces.push([a, b, d]);
                faces.push([b, e, d]);
            }
        }
    }
    Raw { vertices, faces }
}

fn rotate(p: Vec3<f64>, axis: Vec3<f64>, angle: f64) -> Vec3<f64> {
    // Rodrigues
    let (s, c) = angle.sin_cos();
    p * c + axis.cross(&p) * s + axis * (axis.dot(&p) * (1.0 - c))
}

impl MotionModel {
    /// Position of a rest-shape point at frame `t`. `extent` is the rest shape's
    /// largest bounding-box side.
    pub fn apply(&self, p: Vec3<f64>, t: usize, extent: f64) -> Vec3<f64> {
        let tf = t as f64;
        match *self {
            MotionModel::Static => p,
            MotionModel::Translate { velocity } => p + Vec3(velocity) * tf,
            MotionModel::Rotate { axis, rate } => match Vec3(axis).normalized() {
                Some(a) => rotate(p, a, rate * tf),
                None => p,
            },
            MotionModel::Bend { pivot, rate } => {
                let ramp = (0.25 * extent).max(f64::MIN_POSITIVE);
                let s = ((p.y() - pivot) / ramp).clamp(0.0, 1.0);
                let weight = s * s * (3.0 - 2.0 * s);
                if weight == 0.0 {
                    return p;
                }
                let hinge = Vec3::new(0.0, pivot, 0.0);
                rotate(p - hinge, Vec3::new(1.0, 0.0, 0.0), rate * tf * weight) + hinge
            }
        }
    }
}

fn frame_rng(seed: u64, frame: usize) -> SplitMix64 {
    SplitMix64::new(seed ^ (frame as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Re-triangulates a random patch: edge flips with probability 1/2 inside the
/// patch, then centroid splits of a few patch faces.
fn jitter(vertices: &mut Vec<Vec3<f64>>, faces: &mut Vec<Face>, rng: &mut SplitMix64) {
    let mesh = TriangleMesh::new(vertices.clone(), faces.clone()).expect("valid");
    let adjacency = build_adjacency(&mesh);
    let n = vertices.len();

    // patch = BFS rings around a random seed vertex, about an eighth of the mesh
    let seed = rng.below(n);
    let budget = (n / 8).max(4);
    let mut in_patch = vec![false; n];
    let mut queue = VecDeque::from([seed]);
    in_patch[seed] = true;
    let mut taken = 1;
    while let Some(v) = queue.pop_front() {
        for &w in adjacency.neighbors(v) {
            if !in_patch[w] && taken < budget {
                in_patch[w] = true;
                taken += 1;
                queue.push_back(w);
            }
        }
    }

    // edge → (face index, opposite vertex) for faces traversing the edge as u→v
    let mut directed = std::collections::HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            directed.insert((f[k], f[(k + 1) % 3]), (fi, f[(k + 2) % 3]));
        }
    }
    let mut touched = vec![false; faces.len()];
    let mut created = std::collections::HashSet::new();
    for &(u, v) in adjacency.edges() {
        if !(in_patch[u] && in_patch[v]) || rng.next_f64() >= 0.5 {
            continue;
        }
        let (Some(&(f1, a)), Some(&(f2, b))) = (directed.get(&(u, v)), directed.get(&(v, u)))
        else {
            continue;
        };
        if touched[f1]
            || touched[f2]
            || a == b
            || adjacency.neighbors(a).contains(&b)
            || created.contains(&(a.min(b), a.max(b)))
        {
            continue;
        }
        if adjacency
            .incident_faces(u)
            .iter()
            .filter(|&&f| faces[f].contains(&v))
            .count()
            != 2
        {
            continue;
        }
        let normal = |f: Face| {
            let [p, q, r] = f.map(|i| vertices[i]);
            (q - p).cross(&(r - p))
        };
        let (n1, n2) = ([u, b, a], [b, v, a]);
        let old = normal(faces[f1]) + normal(faces[f2]);
        if normal(n1).dot(&old) <= 0.0 || normal(n2).dot(&old) <= 0.0 {
            continue;
        }
        faces[f1] = n1;
        faces[f2] = n2;
        touched[f1] = true;
        touched[f2] = true;
        created.insert((a.min(b), a.max(b)));
    }

    let patch_faces: Vec<usize> = (0..faces.len())
        .filter(|&f| faces[f].iter().all(|&i| in_patch[i]))
        .collect();
    let splits = (patch_faces.len() / 6).max(1);
    for _ in 0..splits {
        let candidates = if patch_faces.is_empty() {
            faces.len()
        } else {
            patch_faces.len()
        };
        let pick = rng.below(candidates);
        let f = if patch_faces.is_empty() {
            pick
        } else {
            patch_faces[pick]
        };
        let [a, b, c] = faces[f];
        let m = vertices.len();
        vertices.push((vertices[a] + vertices[b] + vertices[c]) / 3.0);
        faces[f] = [a, b, m];
        faces.push([b, c, m]);
        faces.push([c, a, m]);
    }
}

pub fn generate_sequence<T: Real>(spec: &SequenceSpec) -> Result<Vec<TriangleMesh<T>>> {
    let rest: TriangleMesh<f64> = base_shape(spec.shape, spec.scale)?;
    let extent = rest
        .bounds()
        .map(|(lo, hi)| {
            let e = hi - lo;
            e.x().max(e.y()).max(e.z())
        })
        .unwrap_or(0.0);
    let mut frames = Vec::with_capacity(spec.frames);
    let mut previous_faces: Option<Vec<Face>> = None;
    for t in 0..spec.frames {
        let (mut vertices, mut faces) = rest.clone().into_parts();
        if spec.topology_jitter {
            let mut rng = frame_rng(spec.seed, t);
            jitter(&mut vertices, &mut faces, &mut rng);
            while previous_faces.as_ref() == Some(&faces) {
                jitter(&mut vertices, &mut faces, &mut rng);
            }
            previous_faces = Some(faces.clone());
        }
        let moved: Vec<Vec3<T>> = vertices
            .iter()
            .map(|&p| spec.motion.apply(p, t, extent).cast())
            .collect();
        frames.push(TriangleMesh::new(moved, faces)?);
    }
    Ok(frames)
}
