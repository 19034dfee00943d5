//! Rate sweep over a frame sequence: every consecutive pair is coded under each
//! ablation configuration at each ladder point, then decoded and evaluated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anchor_mesh::codec::{decode, encode, EncoderConfig};
use anchor_mesh::decimate::decimate_to_base;
use anchor_mesh::metrics::{bd_rate, distortion, RdCurve, RdPoint};
use anchor_mesh::Mesh;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{
    pretty, psnr_json, psnr_text, read_mesh, stdout, write_atomic, CliError, CliResult,
};
use crate::settings::Settings;

pub const ABLATIONS: [&str; 4] = ["NNS", "NNS+MS", "NNS+MS+QEM", "NNS+MS+QEM+AQ"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub config: usize,
    pub frame: usize,
    pub alpha: f64,
    pub bits: u64,
    pub d1_psnr: f64,
    pub d2_psnr: f64,
}

fn frame_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("obj"))
        {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn ablation_config(stage: usize, settings: &Settings, alpha: f64) -> EncoderConfig {
    let mut config = EncoderConfig {
        motion_estimation: stage >= 1,
        qem: stage >= 2,
        adaptive_quant: stage >= 3,
        ..settings.encoder
    };
    config.params.alpha = alpha;
    config
}

pub fn run_rows(frames: &[Mesh], settings: &Settings) -> CliResult<Vec<Row>> {
    let bases: Vec<Mesh> = frames[..frames.len() - 1]
        .par_iter()
        .map(|f| {
            let target = ((f.vertex_count() as f64 * settings.base_ratio).round() as usize).max(4);
            decimate_to_base(f, target)
        })
        .collect::<Result<_, _>>()?;

    let mut jobs = Vec::new();
    for pair in 0..bases.len() {
        for config in 0..ABLATIONS.len() {
            for &alpha in &settings.alphas {
                jobs.push((pair, config, alpha));
            }
        }
    }
    jobs.par_iter()
        .map(|&(pair, config, alpha)| {
            let (base, target) = (&bases[pair], &frames[pair + 1]);
            let encoded = encode(base, target, &ablation_config(config, settings, alpha))?;
            let decoded = decode(&encoded.payload, base)?;
            let report = distortion(target, &decoded.reconstruction)?;
            Ok(Row {
                config,
                frame: pair + 1,
                alpha,
                bits: encoded.stats.bits,
                d1_psnr: report.d1_psnr,
                d2_psnr: report.d2_psnr,
            })
        })
        .collect()
}

pub fn csv(rows: &[Row]) -> String {
    let mut out = String::from("config,frame,alpha,bits,d1_psnr,d2_psnr,infinite_psnr\n");
    for r in rows {
        let infinite = r.d1_psnr.is_infinite() || r.d2_psnr.is_infinite();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            ABLATIONS[r.config],
            r.frame,
            r.alpha,
            r.bits,
            psnr_text(r.d1_psnr),
            psnr_text(r.d2_psnr),
            u8::from(infinite)
        )
        .expect("writing to a String");
    }
    out
}

/// Mean bits and mean PSNR across frames at each ladder point.
fn mean_curve(rows: &[Row], config: usize, alphas: &[f64], d2: bool) -> Vec<RdPoint<f64>> {
    alphas
        .iter()
        .map(|&alpha| {
            let sel: Vec<&Row> = rows
                .iter()
                .filter(|r| r.config == config && r.alpha == alpha)
                .collect();
            let n = sel.len() as f64;
            RdPoint {
                bits: sel.iter().map(|r| r.bits as f64).sum::<f64>() / n,
                psnr: sel
                    .iter()
                    .map(|r| if d2 { r.d2_psnr } else { r.d1_psnr })
                    .sum::<f64>()
                    / n,
            }
        })
        .collect()
}

pub fn bd_summary(rows: &[Row], alphas: &[f64]) -> (Value, Vec<String>) {
    let mut warnings = Vec::new();
    let mut comparisons = Vec::new();
    let mut curves = serde_json::Map::new();
    for (config, name) in ABLATIONS.iter().enumerate() {
        let points = mean_curve(rows, config, alphas, false);
        curves.insert(
            name.to_string(),
            json!(points
                .iter()
                .zip(mean_curve(rows, config, alphas, true))
                .zip(alphas)
                .map(|((p1, p2), a)| json!({
                    "alpha": a,
                    "bits": p1.bits,
                    "d1_psnr": psnr_json(p1.psnr),
                    "d2_psnr": psnr_json(p2.psnr),
                }))
                .collect::<Vec<_>>()),
        );
    }
    for (config, name) in ABLATIONS.iter().enumerate().skip(1) {
        let mut entry = json!({ "config": name, "anchor": ABLATIONS[0] });
        for (key, d2) in [("bd_rate_d1", false), ("bd_rate_d2", true)] {
            let anchor = RdCurve::new(mean_curve(rows, 0, alphas, d2));
            let test = RdCurve::new(mean_curve(rows, config, alphas, d2));
            let value = anchor.and_then(|a| test.and_then(|t| bd_rate(&a, &t)));
            match value {
                Ok(v) => entry[key] = json!(v),
                Err(e) => {
                    entry[key] = Value::Null;
                    warnings.push(format!("{name} {key} omitted: {e}"));
                }
            }
        }
        comparisons.push(entry);
    }
    (
        json!({ "curves": curves, "comparisons": comparisons, "warnings": warnings }),
        warnings,
    )
}

pub fn sweep_cmd(sequence_dir: &Path, out_dir: &Path, settings: &Settings) -> CliResult<()> {
    let paths = frame_paths(sequence_dir)?;
    if paths.len() < 2 {
        return Err(CliError::input(format!(
            "{}: need at least 2 OBJ frames, found {}",
            sequence_dir.display(),
            paths.len()
        )));
    }
    let frames: Vec<Mesh> = paths
        .par_iter()
        .map(|p| read_mesh(p))
        .collect::<CliResult<_>>()?;
    let rows = run_rows(&frames, settings)?;
    let (summary, warnings) = bd_summary(&rows, &settings.alphas);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let csv_path = out_dir.join("rd.csv");
    let bd_path = out_dir.join("bd_rate.json");
    write_atomic(&csv_path, csv(&rows).as_bytes())?;
    write_atomic(&bd_path, pretty(&summary).as_bytes())?;
    stdout(&pretty(&json!({
        "frames": frames.len(),
        "rows": rows.len(),
        "csv": csv_path.display().to_string(),
        "bd_rate": bd_path.display().to_string(),
        "comparisons": summary["comparisons"],
        "warnings": warnings,
    })));
    Ok(())
}
