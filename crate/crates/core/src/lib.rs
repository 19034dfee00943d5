//! Inter-frame coding kernel for dynamic meshes whose connectivity changes from
//! frame to frame.
//!
//! Given a reference base mesh and a target frame, the crate builds an *anchor
//! mesh* that keeps the base mesh's faces exactly while its vertices are fitted
//! to the target:
//!
//! 1. [`coarse`]: motion-compensated nearest-neighbor matching of base vertices
//!    to target vertices through an [`octree`].
//! 2. [`fine`]: each match is refined to the optimal point of the cheapest local
//!    edge collapse under [`quadric`] error metrics.
//! 3. [`subdiv`]: the anchor is midpoint-subdivided and a displacement field to the
//!    target surface is extracted, then [`quantize`]d with neighbor-count weights.
//!
//! [`metrics`] measures D1/D2 distortion and BD-rate, [`synth`] generates test
//! sequences, and [`codec`] packs everything into a payload.
//!
//! All geometry is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`, which the payload format uses.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coarse;
pub mod codec;
pub mod decimate;
pub mod error;
pub mod fine;
pub mod mesh;
pub mod metrics;
pub mod octree;
pub mod quadric;
pub mod quantize;
pub mod scalar;
pub mod subdiv;
pub mod synth;
pub mod vector;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point = vector::Vec3<f64>;
pub type Mesh = mesh::TriangleMesh<f64>;
pub type Plane = mesh::Plane<f64>;
pub type SurfacePoint = mesh::SurfacePoint<f64>;
pub type Octree = octree::Octree<f64>;
pub type Quadric = quadric::Quadric<f64>;
pub type AnchorMesh = coarse::AnchorMesh<f64>;
pub type MotionField = coarse::MotionField<f64>;
pub type SubdividedMesh = subdiv::SubdividedMesh<f64>;
pub type DisplacementField = subdiv::DisplacementField<f64>;
pub type QuantizationParams = quantize::QuantizationParams<f64>;
pub type QuantizedDisplacementField = quantize::QuantizedDisplacementField<f64>;
pub type DistortionReport = metrics::DistortionReport<f64>;
pub type RdCurve = metrics::RdCurve<f64>;
pub type RdPoint = metrics::RdPoint<f64>;

pub type PointF32 = vector::Vec3<f32>;
pub type MeshF32 = mesh::TriangleMesh<f32>;
pub type OctreeF32 = octree::Octree<f32>;
pub type QuadricF32 = quadric::Quadric<f32>;
