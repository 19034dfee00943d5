//! Adaptive displacement quantization.
//!
//! Each component is mapped to `round(D · α · A + δ)` with the per-vertex weight
//! `A = max(N, 1) / ħ`, where `N` is the vertex's neighbor count. Vertices with more
//! neighbors get a proportionally finer step. Rounding is half away from zero.

use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, TriangleMesh};
use crate::scalar::Real;
use crate::subdiv::DisplacementField;
use crate::vector::Vec3;

pub const DEFAULT_HBAR: f64 = 6.0;
pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_DELTA: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationParams<T> {
    pub alpha: T,
    pub delta: T,
    pub hbar: T,
}

impl<T: Real> Default for QuantizationParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(DEFAULT_ALPHA),
            delta: T::lit(DEFAULT_DELTA),
            hbar: T::lit(DEFAULT_HBAR),
        }
    }
}

impl<T: Real> QuantizationParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.hbar > T::zero() && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDisplacementField<T> {
    pub values: Vec<[i64; 3]>,
    pub params: QuantizationParams<T>,
    pub weights: Vec<T>,
    pub level: usize,
}

/// Distinct edge-connected neighbors per vertex.
pub fn neighbor_counts<T: Real>(mesh: &TriangleMesh<T>) -> Vec<usize> {
    let adjacency = build_adjacency(mesh);
    (0..mesh.vertex_count())
        .map(|v| adjacency.valence(v))
        .collect()
}

/// `A = max(N, 1) / ħ` per vertex.
pub fn adaptive_weights<T: Real>(counts: &[usize], hbar: T) -> Vec<T> {
    counts
        .iter()
        .map(|&n| T::from_usize_lossy(n.max(1)) / hbar)
        .collect()
}

pub fn quantize_field<T: Real>(
    field: &DisplacementField<T>,
    counts: &[usize],
    params: &QuantizationParams<T>,
) -> Result<QuantizedDisplacementField<T>> {
    params.validate()?;
    quantize_with_weights(field, adaptive_weights(counts, params.hbar), params)
}

/// Quantizes with explicit per-vertex weights; all ones gives uniform quantization.
pub fn quantize_with_weights<T: Real>(
    field: &DisplacementField<T>,
    weights: Vec<T>,
    params: &QuantizationParams<T>,
) -> Result<QuantizedDisplacementField<T>> {
    params.validate()?;
    if weights.len() != field.len() {
        return Err(Error::LengthMismatch {
            expected: field.len(),
            actual: weights.len(),
        });
    }
    let mut values = Vec::with_capacity(field.len());
    for (d, &a) in field.vectors.iter().zip(&weights) {
        let scale = params.alpha * a;
        let mut q = [0i64; 3];
        for k in 0..3 {
            let r = (d[k] * scale + params.delta).round();
            q[k] = r.to_i64().ok_or(Error::QuantizationOverflow)?;
        }
        values.push(q);
    }
    Ok(QuantizedDisplacementField {
        values,
        params: *params,
        weights,
        level: field.level,
    })
}

/// `D̂ = (D_q − δ) / (α · A)`.
pub fn dequantize_field<T: Real>(
    q: &QuantizedDisplacementField<T>,
) -> Result<DisplacementField<T>> {
    if q.weights.len() != q.values.len() {
        return Err(Error::LengthMismatch {
            expected: q.values.len(),
            actual: q.weights.len(),
        });
    }
    let mut vectors = Vec::with_capacity(q.values.len());
    for (vertex, (vals, &a)) in q.values.iter().zip(&q.weights).enumerate() {
        if !(a > T::zero()) {
            return Err(Error::ZeroWeight { vertex });
        }
        let scale = q.params.alpha * a;
        let mut d = Vec3::zero();
        for k in 0..3 {
            let iv = T::from_i64(vals[k]).ok_or(Error::QuantizationOverflow)?;
            d[k] = (iv - q.params.delta) / scale;
        }
        vectors.push(d);
    }
    Ok(DisplacementField {
        vectors,
        level: q.level,
    })
}
