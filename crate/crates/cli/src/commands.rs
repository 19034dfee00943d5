use std::path::Path;

use anchor_mesh::codec::{decode, encode, EncodeStats};
use anchor_mesh::mesh::save_mesh;
use anchor_mesh::metrics::{distortion, DistortionReport};
use anchor_mesh::synth::{generate_sequence, SequenceSpec};
use anchor_mesh::Mesh;
use serde_json::{json, Value};

use crate::output::{
    pretty, psnr_json, read_bytes, read_mesh, stdout, write_atomic, CliError, CliResult,
};
use crate::settings::{describe, Settings};

fn emit(value: &Value, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, pretty(value).as_bytes()),
        None => {
            stdout(&pretty(value));
            Ok(())
        }
    }
}

pub fn stats_json(stats: &EncodeStats) -> Value {
    let t = &stats.timings;
    json!({
        "bits": stats.bits,
        "bytes": stats.bits / 8,
        "header_bits": stats.header_bits,
        "anchor_bits": stats.anchor_bits,
        "displacement_bits": stats.displacement_bits,
        "base_vertices": stats.base_vertices,
        "subdivided_vertices": stats.subdivided_vertices,
        "zero_fraction": stats.zero_fraction,
        "timings_ms": {
            "coarse": t.coarse_ms,
            "fine": t.fine_ms,
            "subdivide": t.subdivide_ms,
            "displace": t.displace_ms,
            "quantize": t.quantize_ms,
            "total": t.total_ms,
        },
    })
}

pub fn encode_cmd(
    base: &Path,
    target: &Path,
    out: &Path,
    stats_out: Option<&Path>,
    settings: &Settings,
) -> CliResult<()> {
    let base_mesh = read_mesh(base)?;
    let target_mesh = read_mesh(target)?;
    let encoded = encode(&base_mesh, &target_mesh, &settings.encoder)?;
    write_atomic(out, &encoded.payload)?;
    let mut stats = stats_json(&encoded.stats);
    stats["payload"] = json!(out.display().to_string());
    stats["config"] = describe(settings);
    emit(&stats, stats_out)
}

pub fn decode_cmd(payload: &Path, base: &Path, out: &Path) -> CliResult<()> {
    let bytes = read_bytes(payload)?;
    let base_mesh = read_mesh(base)?;
    let decoded = decode(&bytes, &base_mesh)?;
    write_atomic(out, save_mesh(&decoded.reconstruction).as_bytes())
}

pub fn report_json(r: &DistortionReport<f64>) -> Value {
    let direction = |d: &anchor_mesh::metrics::DirectionalError<f64>| json!({ "mse_d1": d.mse_d1, "mse_d2": d.mse_d2 });
    json!({
        "d1_psnr": psnr_json(r.d1_psnr),
        "d2_psnr": psnr_json(r.d2_psnr),
        "mse_d1": r.mse_d1,
        "mse_d2": r.mse_d2,
        "peak": r.peak,
        "reference_to_test": direction(&r.reference_to_test),
        "test_to_reference": direction(&r.test_to_reference),
    })
}

pub fn eval_cmd(reference: &Path, test: &Path, out: Option<&Path>) -> CliResult<()> {
    let r = distortion(&read_mesh(reference)?, &read_mesh(test)?)?;
    emit(&report_json(&r), out)
}

pub fn synth_cmd(spec: &SequenceSpec, out_dir: &Path) -> CliResult<()> {
    let frames: Vec<Mesh> = generate_sequence(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    for (t, frame) in frames.iter().enumerate() {
        write_atomic(
            &out_dir.join(format!("frame_{t:04}.obj")),
            save_mesh(frame).as_bytes(),
        )?;
    }
    let summary = json!({
        "frames": frames.len(),
        "vertices": frames.first().map(|f| f.vertex_count()),
        "faces": frames.first().map(|f| f.face_count()),
        "out_dir": out_dir.display().to_string(),
        "seed": spec.seed,
    });
    emit(&summary, None)
}
