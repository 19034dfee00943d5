use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} repeats a vertex index")]
    DegenerateIndices { face: usize },

    #[error("face {face} has zero area")]
    ZeroAreaFace { face: usize },

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("quantized value out of integer range")]
    QuantizationOverflow,

    #[error("zero quantization weight at vertex {vertex}")]
    ZeroWeight { vertex: usize },

    #[error("rate-distortion curve: {0}")]
    Curve(String),

    #[error("payload: {0}")]
    Payload(String),

    #[error("reference base mesh does not match the payload")]
    BaseMismatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
