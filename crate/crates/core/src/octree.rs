//! Octree over a point set answering exact nearest-neighbor queries.
//!
//! Nodes are stored in an arena with explicit `[lo, hi)` bounds. A child's bounds
//! are taken verbatim from its parent's corners and center, so every point lies
//! inside the cube it was routed to with no rounding slack, and the
//! point-to-cube lower bound used for pruning is never larger than the true
//! distance to any point inside.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vec3;

pub const DEFAULT_LEAF_CAPACITY: usize = 16;
pub const DEFAULT_MAX_DEPTH: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctreeConfig {
    pub leaf_capacity: usize,
    pub max_depth: usize,
}

impl Default for OctreeConfig {
    fn default() -> Self {
        Self {
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone)]
struct Node<T> {
    lo: Vec3<T>,
    hi: Vec3<T>,
    depth: usize,
    content: Content,
}

#[derive(Debug, Clone)]
enum Content {
    /// Range into the permuted index array.
    Leaf {
        start: usize,
        end: usize,
    },
    Branch {
        children: [Option<usize>; 8],
    },
}

/// A leaf as seen by structural audits.
#[derive(Debug, Clone, Copy)]
pub struct LeafView<'a, T> {
    pub lo: Vec3<T>,
    pub hi: Vec3<T>,
    pub depth: usize,
    pub indices: &'a [usize],
}

#[derive(Debug, Clone)]
pub struct Octree<T> {
    points: Vec<Vec3<T>>,
    indices: Vec<usize>,
    nodes: Vec<Node<T>>,
    config: OctreeConfig,
    center: Vec3<T>,
    half_width: T,
}

impl<T: Real> Octree<T> {
    pub fn build(points: &[Vec3<T>], leaf_capacity: usize) -> Result<Self> {
        Self::with_config(
            points,
            OctreeConfig {
                leaf_capacity,
                ..OctreeConfig::default()
            },
        )
    }

    pub fn with_config(points: &[Vec3<T>], config: OctreeConfig) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if config.leaf_capacity == 0 {
            return Err(Error::InvalidParameter(
                "leaf capacity must be at least 1".into(),
            ));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("point {i} is not finite")));
        }

        let (lo, hi) = points[1..]
            .iter()
            .fold((points[0], points[0]), |(lo, hi), p| {
                (lo.min_by_axis(p), hi.max_by_axis(p))
            });
        let extent = hi - lo;
        let half_width = extent[0].max(extent[1]).max(extent[2]) * T::half() + T::lit(1e-9);
        let center = lo.midpoint(&hi);
        let root_lo = center - Vec3::splat(half_width);
        let root_hi = center + Vec3::splat(half_width);

        let mut tree = Self {
            points: points.to_vec(),
            indices: (0..points.len()).collect(),
            nodes: Vec::new(),
            config,
            center,
            half_width,
        };
        let n = points.len();
        tree.build_node(root_lo, root_hi, 0, 0, n);
        Ok(tree)
    }

    fn build_node(
        &mut self,
        lo: Vec3<T>,
        hi: Vec3<T>,
        depth: usize,
        start: usize,
        end: usize,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            depth,
            content: Content::Leaf { start, end },
        });
        let count = end - start;
        if count <= self.config.leaf_capacity || depth >= self.config.max_depth {
            return id;
        }
        let first = self.points[self.indices[start]];
        if self.indices[start..end]
            .iter()
            .all(|&i| self.points[i] == first)
        {
            // coincident points cannot be separated by any split
            return id;
        }

        let mid = lo.midpoint(&hi);
        let points = &self.points;
        let octant = |i: usize| -> usize {
            let p = points[i];
            (p[0] >= mid[0]) as usize
                | ((p[1] >= mid[1]) as usize) << 1
                | ((p[2] >= mid[2]) as usize) << 2
        };
        // stable, so indices stay ascending inside each leaf
        self.indices[start..end].sort_by_key(|&i| octant(i));

        let mut stops = [start; 8];
        let mut cursor = start;
        for (oct, stop) in stops.iter_mut().enumerate() {
            while cursor < end && octant(self.indices[cursor]) == oct {
                cursor += 1;
            }
            *stop = cursor;
        }

        let mut children = [None; 8];
        let mut cursor = start;
        for (oct, child) in children.iter_mut().enumerate() {
            let stop = stops[oct];
            if stop > cursor {
                let mut clo = lo;
                let mut chi = hi;
                for axis in 0..3 {
                    if oct >> axis & 1 == 1 {
                        clo[axis] = mid[axis];
                    } else {
                        chi[axis] = mid[axis];
                    }
                }
                *child = Some(self.build_node(clo, chi, depth + 1, cursor, stop));
            }
            cursor = stop;
        }
        self.nodes[id].content = Content::Branch { children };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn config(&self) -> OctreeConfig {
        self.config
    }

    /// Root cube as `(center, half_width)`.
    pub fn root_cube(&self) -> (Vec3<T>, T) {
        (self.center, self.half_width)
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = LeafView<'_, T>> + '_ {
        self.nodes.iter().filter_map(move |n| match n.content {
            Content::Leaf { start, end } => Some(LeafView {
                lo: n.lo,
                hi: n.hi,
                depth: n.depth,
                indices: &self.indices[start..end],
            }),
            Content::Branch { .. } => None,
        })
    }

    /// Index and Euclidean distance of the indexed point closest to `query`.
    /// Ties resolve to the lowest index.
    pub fn nearest(&self, query: &Vec3<T>) -> (usize, T) {
        let mut best_index = usize::MAX;
        let mut best_d2 = T::infinity();
        let mut heap = BinaryHeap::new();
        heap.push(Pending {
            dist: cube_distance_squared(query, &self.nodes[0]),
            node: 0,
        });
        while let Some(Pending { dist, node }) = heap.pop() {
            if dist > best_d2 {
                break;
            }
            match &self.nodes[node].content {
                Content::Leaf { start, end } => {
                    for &i in &self.indices[*start..*end] {
                        let d2 = query.distance_squared(&self.points[i]);
                        if d2 < best_d2 || (d2 == best_d2 && i < best_index) {
                            best_d2 = d2;
                            best_index = i;
                        }
                    }
                }
                Content::Branch { children } => {
                    for &c in children.iter().flatten() {
                        let d = cube_distance_squared(query, &self.nodes[c]);
                        if d <= best_d2 {
                            heap.push(Pending { dist: d, node: c });
                        }
                    }
                }
            }
        }
        (best_index, best_d2.sqrt())
    }
}

fn cube_distance_squared<T: Real>(p: &Vec3<T>, node: &Node<T>) -> T {
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

/// Min-heap entry keyed on squared distance to a node's cube.
struct Pending<T> {
    dist: T,
    node: usize,
}

impl<T: Real> PartialEq for Pending<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Pending<T> {}

impl<T: Real> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Pending<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}
