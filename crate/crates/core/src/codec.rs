//! Frame-pair encoder/decoder and the binary payload container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "ANCF"  version:u8  base_sha256:[u8; 32]
//! anchor positions: base_vertex_count × 3 × f64
//! level:u8  flags:u8 (bit 0 = adaptive weights)
//! alpha:f64  delta:f64  hbar:f64
//! displacements: zigzag LEB128 varints, x y z per subdivided vertex
//! ```
//!
//! The decoder recomputes subdivision and quantization weights from the base
//! mesh's connectivity, so only positions and integers are transmitted.

use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::coarse::{generate_coarse_anchor, AnchorMesh, CoarseConfig, MotionField};
use crate::error::{Error, Result};
use crate::fine::{refine_anchor_with, FineConfig};
use crate::mesh::{build_adjacency, save_mesh, TriangleMesh};
use crate::octree::{Octree, OctreeConfig};
use crate::quantize::{
    adaptive_weights, dequantize_field, neighbor_counts, quantize_with_weights, QuantizationParams,
    QuantizedDisplacementField,
};
use crate::subdiv::{apply_displacements, compute_displacements, midpoint_subdivide};
use crate::vector::Vec3;

pub const MAGIC: &[u8; 4] = b"ANCF";
pub const VERSION: u8 = 1;
const FLAG_ADAPTIVE: u8 = 1;
pub const DEFAULT_LEVEL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub level: usize,
    pub params: QuantizationParams<f64>,
    pub motion_estimation: bool,
    pub qem: bool,
    pub adaptive_quant: bool,
    pub fine: FineConfig,
    pub octree: OctreeConfig,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            params: QuantizationParams::default(),
            motion_estimation: true,
            qem: true,
            adaptive_quant: true,
            fine: FineConfig::default(),
            octree: OctreeConfig::default(),
        }
    }
}

impl EncoderConfig {
    /// The four cumulative ablation stages: NN only, +motion, +QEM, +adaptive.
    pub fn ablation(stage: usize) -> Self {
        Self {
            motion_estimation: stage >= 1,
            qem: stage >= 2,
            adaptive_quant: stage >= 3,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub coarse_ms: f64,
    pub fine_ms: f64,
    pub subdivide_ms: f64,
    pub displace_ms: f64,
    pub quantize_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeStats {
    /// Always `payload.len() * 8`.
    pub bits: u64,
    pub header_bits: u64,
    pub anchor_bits: u64,
    pub displacement_bits: u64,
    pub base_vertices: usize,
    pub subdivided_vertices: usize,
    /// Share of quantized components equal to zero.
    pub zero_fraction: f64,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub payload: Vec<u8>,
    pub stats: EncodeStats,
    pub coarse: AnchorMesh<f64>,
    pub motion: MotionField<f64>,
    /// Anchor actually transmitted (fine when QEM is enabled, else coarse).
    pub anchor: AnchorMesh<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub base_hash: [u8; 32],
    pub anchor_positions: Vec<Vec3<f64>>,
    pub level: u8,
    pub adaptive: bool,
    pub params: QuantizationParams<f64>,
    pub displacements: Vec<[i64; 3]>,
}

/// SHA-256 of the canonical OBJ serialization, so formatting differences in the
/// base file do not matter.
pub fn base_hash(base: &TriangleMesh<f64>) -> [u8; 32] {
    let digest = Sha256::digest(save_mesh(base).as_bytes());
    digest.into()
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn encode(
    base: &TriangleMesh<f64>,
    target: &TriangleMesh<f64>,
    config: &EncoderConfig,
) -> Result<Encoded> {
    config.params.validate()?;
    let level = u8::try_from(config.level).map_err(|_| {
        Error::InvalidParameter(format!("subdivision level {} too large", config.level))
    })?;
    if target.face_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let adjacency = build_adjacency(base);
    let index = Octree::with_config(target.vertices(), config.octree)?;
    let (coarse, motion) = generate_coarse_anchor(
        base,
        &adjacency,
        target,
        &index,
        CoarseConfig {
            motion_estimation: config.motion_estimation,
        },
    )?;
    timings.coarse_ms = ms_since(t);

    let t = Instant::now();
    let anchor = if config.qem {
        refine_anchor_with(&coarse, target, config.fine)?.0
    } else {
        coarse.clone()
    };
    timings.fine_ms = ms_since(t);

    let t = Instant::now();
    let sub = midpoint_subdivide(&anchor.mesh, config.level);
    timings.subdivide_ms = ms_since(t);

    let t = Instant::now();
    let field = compute_displacements(&sub, target)?;
    timings.displace_ms = ms_since(t);

    let t = Instant::now();
    let weights = quant_weights(&sub.mesh, config.adaptive_quant, config.params.hbar);
    let quantized = quantize_with_weights(&field, weights, &config.params)?;
    timings.quantize_ms = ms_since(t);

    let payload = Payload {
        base_hash: base_hash(base),
        anchor_positions: anchor.mesh.vertices().to_vec(),
        level,
        adaptive: config.adaptive_quant,
        params: config.params,
        displacements: quantized.values,
    };
    let (bytes, sections) = payload.to_bytes_with_sections();
    timings.total_ms = ms_since(start);

    let components = payload.displacements.len() * 3;
    let zeros = payload
        .displacements
        .iter()
        .flatten()
        .filter(|&&q| q == 0)
        .count();
    let stats = EncodeStats {
        bits: bytes.len() as u64 * 8,
        header_bits: sections.header as u64 * 8,
        anchor_bits: sections.anchor as u64 * 8,
        displacement_bits: sections.displacements as u64 * 8,
        base_vertices: base.vertex_count(),
        subdivided_vertices: sub.mesh.vertex_count(),
        zero_fraction: if components == 0 {
            0.0
        } else {
            zeros as f64 / components as f64
        },
        timings,
    };
    Ok(Encoded {
        payload: bytes,
        stats,
        coarse,
        motion,
        anchor,
    })
}

fn quant_weights(mesh: &TriangleMesh<f64>, adaptive: bool, hbar: f64) -> Vec<f64> {
    if adaptive {
        adaptive_weights(&neighbor_counts(mesh), hbar)
    } else {
        vec![1.0; mesh.vertex_count()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub anchor: TriangleMesh<f64>,
    pub reconstruction: TriangleMesh<f64>,
    pub level: usize,
    pub params: QuantizationParams<f64>,
}

pub fn decode(bytes: &[u8], base: &TriangleMesh<f64>) -> Result<Decoded> {
    let payload = Payload::from_bytes(bytes, base)?;
    if payload.base_hash != base_hash(base) {
        return Err(Error::BaseMismatch);
    }
    let anchor = base.with_vertices(payload.anchor_positions)?;
    let sub = midpoint_subdivide(&anchor, payload.level as usize);
    if payload.displacements.len() != sub.mesh.vertex_count() {
        return Err(Error::Payload(
            "displacement count does not match the subdivided mesh".into(),
        ));
    }
    let quantized = QuantizedDisplacementField {
        weights: quant_weights(&sub.mesh, payload.adaptive, payload.params.hbar),
        values: payload.displacements,
        params: payload.params,
        level: sub.level,
    };
    let field = dequantize_field(&quantized)?;
    let reconstruction = apply_displacements(&sub, &field)?;
    Ok(Decoded {
        anchor,
        reconstruction,
        level: sub.level,
        params: payload.params,
    })
}

struct Sections {
    header: usize,
    anchor: usize,
    displacements: usize,
}

impl Payload {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_bytes_with_sections().0
    }

    fn to_bytes_with_sections(&self) -> (Vec<u8>, Sections) {
        let mut out = Vec::with_capacity(
            64 + self.anchor_positions.len() * 24 + self.displacements.len() * 3,
        );
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.base_hash);
        let after_hash = out.len();
        for p in &self.anchor_positions {
            for k in 0..3 {
                out.extend_from_slice(&p[k].to_le_bytes());
            }
        }
        let anchor = out.len() - after_hash;
        out.push(self.level);
        out.push(if self.adaptive { FLAG_ADAPTIVE } else { 0 });
        for v in [self.params.alpha, self.params.delta, self.params.hbar] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let before_stream = out.len();
        for q in self.displacements.iter().flatten() {
            write_varint(&mut out, zigzag(*q));
        }
        let displacements = out.len() - before_stream;
        let header = out.len() - anchor - displacements;
        (
            out,
            Sections {
                header,
                anchor,
                displacements,
            },
        )
    }

    /// Parses a payload; the base mesh supplies the vertex and subdivided counts.
    pub fn from_bytes(bytes: &[u8], base: &TriangleMesh<f64>) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Payload("bad magic bytes".into()));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Payload(format!("unsupported version {version}")));
        }
        let mut base_hash = [0u8; 32];
        base_hash.copy_from_slice(r.take(32)?);
        let mut anchor_positions = Vec::with_capacity(base.vertex_count());
        for _ in 0..base.vertex_count() {
            anchor_positions.push(Vec3::new(r.f64()?, r.f64()?, r.f64()?));
        }
        let level = r.u8()?;
        let flags = r.u8()?;
        if flags & !FLAG_ADAPTIVE != 0 {
            return Err(Error::Payload(format!("unknown flags {flags:#04x}")));
        }
        let params = QuantizationParams {
            alpha: r.f64()?,
            delta: r.f64()?,
            hbar: r.f64()?,
        };
        params
            .validate()
            .map_err(|e| Error::Payload(e.to_string()))?;
        if level > 8 {
            return Err(Error::Payload(format!(
                "subdivision level {level} out of range"
            )));
        }
        let count = subdivided_vertex_count(base, level as usize);
        let mut displacements = Vec::with_capacity(count);
        for _ in 0..count {
            displacements.push([
                unzigzag(r.varint()?),
                unzigzag(r.varint()?),
                unzigzag(r.varint()?),
            ]);
        }
        if r.pos != bytes.len() {
            return Err(Error::Payload(
                "trailing bytes after displacement stream".into(),
            ));
        }
        Ok(Self {
            base_hash,
            anchor_positions,
            level,
            adaptive: flags & FLAG_ADAPTIVE != 0,
            params,
            displacements,
        })
    }
}

/// Vertex count after `level` midpoint subdivisions, from connectivity alone.
fn subdivided_vertex_count(base: &TriangleMesh<f64>, level: usize) -> usize {
    let mut v = base.vertex_count();
    let mut e = build_adjacency(base).edges().len();
    let mut f = base.face_count();
    for _ in 0..level {
        v += e;
        e = 2 * e + 3 * f;
        f *= 4;
    }
    v
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Payload("unexpected end of payload".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(f64::from_le_bytes(b))
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                if shift == 63 && b > 1 {
                    break;
                }
                return Ok(v);
            }
        }
        Err(Error::Payload("varint overflows 64 bits".into()))
    }
}
