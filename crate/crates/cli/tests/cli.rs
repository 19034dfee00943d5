use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anchor_mesh::mesh::{load_mesh, save_mesh};
use anchor_mesh::Mesh;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anchor-mesh"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> Vec<PathBuf> {
    let mut args = vec!["synth", p(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    let mut frames: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    frames.sort();
    frames
}

fn read(path: &Path) -> Mesh {
    load_mesh(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_names_frames_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = synth(
        &tmp.path().join("a"),
        &[
            "--frames", "3", "--jitter", "--motion", "rotate", "--seed", "4",
        ],
    );
    let b = synth(
        &tmp.path().join("b"),
        &[
            "--frames", "3", "--jitter", "--motion", "rotate", "--seed", "4",
        ],
    );
    let names: Vec<_> = a
        .iter()
        .map(|f| f.file_name().unwrap().to_str().unwrap().to_string())
        .collect();
    assert_eq!(
        names,
        ["frame_0000.obj", "frame_0001.obj", "frame_0002.obj"]
    );
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let c = synth(
        &tmp.path().join("c"),
        &[
            "--frames", "3", "--jitter", "--motion", "rotate", "--seed", "5",
        ],
    );
    assert_ne!(std::fs::read(&a[1]).unwrap(), std::fs::read(&c[1]).unwrap());
}

#[test]
fn encode_decode_roundtrip_is_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    let frames = synth(
        &tmp.path().join("seq"),
        &[
            "--frames", "2", "--motion", "bend", "--jitter", "--seed", "8",
        ],
    );
    let (base, target) = (p(&frames[0]), p(&frames[1]));
    let mut payloads = Vec::new();
    let mut objs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let payload = tmp.path().join(format!("p{i}.bin"));
        let obj = tmp.path().join(format!("r{i}.obj"));
        let stats = json_stdout(&ok(&[
            "--threads",
            threads,
            "encode",
            base,
            target,
            p(&payload),
        ]));
        let bytes = std::fs::read(&payload).unwrap();
        assert_eq!(stats["bits"].as_u64().unwrap(), bytes.len() as u64 * 8);
        for stage in [
            "coarse",
            "fine",
            "subdivide",
            "displace",
            "quantize",
            "total",
        ] {
            assert!(stats["timings_ms"][stage].as_f64().unwrap() >= 0.0);
        }
        ok(&["--threads", threads, "decode", p(&payload), base, p(&obj)]);
        payloads.push(bytes);
        objs.push(std::fs::read(&obj).unwrap());
    }
    assert_eq!(payloads[0], payloads[1]);
    assert_eq!(objs[0], objs[1]);
}

#[test]
fn translate_pair_reconstructs_above_floor() {
    let tmp = TempDir::new().unwrap();
    let frames = synth(
        &tmp.path().join("seq"),
        &[
            "--frames",
            "2",
            "--motion",
            "translate",
            "--velocity",
            "3,1,0",
            "--jitter",
            "--seed",
            "2",
        ],
    );
    let payload = tmp.path().join("p.bin");
    let rec = tmp.path().join("r.obj");
    ok(&[
        "encode",
        p(&frames[0]),
        p(&frames[1]),
        p(&payload),
        "--alpha",
        "16",
    ]);
    ok(&["decode", p(&payload), p(&frames[0]), p(&rec)]);
    let report = json_stdout(&ok(&["eval", p(&frames[1]), p(&rec)]));
    assert!(report["d1_psnr"].as_f64().unwrap() > 55.0, "{report}");
}

#[test]
fn identical_frames_give_all_zero_stream_and_exact_reconstruction() {
    let tmp = TempDir::new().unwrap();
    let frames = synth(
        &tmp.path().join("seq"),
        &["--frames", "1", "--resolution", "2"],
    );
    let base = p(&frames[0]);
    let payload = tmp.path().join("p.bin");
    let rec = tmp.path().join("r.obj");
    let stats = json_stdout(&ok(&[
        "encode",
        base,
        base,
        p(&payload),
        "--level",
        "0",
        "--alpha",
        "1e6",
        "--no-qem",
    ]));
    assert_eq!(stats["zero_fraction"].as_f64().unwrap(), 1.0);
    let vertices = read(&frames[0]).vertex_count() as u64;
    assert_eq!(
        stats["displacement_bits"].as_u64().unwrap(),
        vertices * 3 * 8
    );
    ok(&["decode", p(&payload), base, p(&rec)]);
    assert_eq!(read(&rec), read(&frames[0]));
    assert_eq!(
        std::fs::read_to_string(&rec).unwrap(),
        save_mesh(&read(&frames[0]))
    );
}

#[test]
fn missing_input_is_exit_2_with_json() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.obj");
    let out = run(&[
        "encode",
        p(&missing),
        p(&missing),
        p(&tmp.path().join("p.bin")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("missing.obj"));
    assert!(!tmp.path().join("p.bin").exists());

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "input");
}

#[test]
fn malformed_obj_is_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nv 1 0 0\nf 1 2 7\n").unwrap();
    let out = run(&["eval", p(&bad), p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("line 3"));
}

#[test]
fn tampered_or_mismatched_payload_is_exit_3() {
    let tmp = TempDir::new().unwrap();
    let frames = synth(
        &tmp.path().join("seq"),
        &[
            "--frames",
            "2",
            "--resolution",
            "2",
            "--motion",
            "bend",
            "--seed",
            "3",
        ],
    );
    let payload = tmp.path().join("p.bin");
    ok(&["encode", p(&frames[0]), p(&frames[1]), p(&payload)]);
    let good = std::fs::read(&payload).unwrap();

    let mut bad = good.clone();
    bad[0] = b'X';
    let tampered = tmp.path().join("tampered.bin");
    std::fs::write(&tampered, &bad).unwrap();
    let out = run(&[
        "decode",
        p(&tampered),
        p(&frames[0]),
        p(&tmp.path().join("r.obj")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "payload");
    assert!(!tmp.path().join("r.obj").exists());

    let out = run(&[
        "decode",
        p(&payload),
        p(&frames[1]),
        p(&tmp.path().join("r.obj")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let truncated = tmp.path().join("short.bin");
    std::fs::write(&truncated, &good[..good.len() / 2]).unwrap();
    let out = run(&[
        "decode",
        p(&truncated),
        p(&frames[0]),
        p(&tmp.path().join("r.obj")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

/// Required fields of the eval report and the JSON types they may take.
const EVAL_SCHEMA: &str = r#"{
  "d1_psnr": ["number", "inf"],
  "d2_psnr": ["number", "inf"],
  "mse_d1": ["number"],
  "mse_d2": ["number"],
  "peak": ["number"],
  "reference_to_test": ["object"],
  "test_to_reference": ["object"]
}"#;

fn conforms(report: &Value) -> bool {
    let schema: serde_json::Map<String, Value> = serde_json::from_str(EVAL_SCHEMA).unwrap();
    let object = report.as_object().unwrap();
    object.len() == schema.len()
        && schema.iter().all(|(key, allowed)| {
            let v = &object[key];
            allowed
                .as_array()
                .unwrap()
                .iter()
                .any(|t| match t.as_str().unwrap() {
                    "number" => v.is_number(),
                    "inf" => v == "inf",
                    "object" => {
                        v.get("mse_d1").is_some_and(Value::is_number)
                            && v.get("mse_d2").is_some_and(Value::is_number)
                    }
                    _ => false,
                })
        })
}

fn plane(path: &Path, z: f64) {
    let n = 11;
    let mut s = String::new();
    for j in 0..n {
        for i in 0..n {
            s += &format!("v {} {} {z}\n", i as f64 / 10.0, j as f64 / 10.0);
        }
    }
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let a = j * n + i + 1;
            s += &format!(
                "f {} {} {}\nf {} {} {}\n",
                a,
                a + 1,
                a + n + 1,
                a,
                a + n + 1,
                a + n
            );
        }
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn eval_reports_inf_offset_mse_and_schema() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a.obj"), tmp.path().join("b.obj"));
    plane(&a, 0.0);
    plane(&b, 0.1);
    let same = json_stdout(&ok(&["eval", p(&a), p(&a)]));
    assert_eq!(same["d1_psnr"], "inf");
    assert_eq!(same["d2_psnr"], "inf");
    assert!(conforms(&same));

    let out_path = tmp.path().join("report.json");
    ok(&["eval", p(&a), p(&b), "--out", p(&out_path)]);
    let offset: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert!((offset["mse_d1"].as_f64().unwrap() - 0.01).abs() < 1e-15);
    assert!((offset["mse_d2"].as_f64().unwrap() - 0.01).abs() < 1e-15);
    assert!(conforms(&offset));
    // round trip through text keeps conformance
    let reparsed: Value = serde_json::from_str(&offset.to_string()).unwrap();
    assert!(conforms(&reparsed));
    assert!(!conforms(&serde_json::json!({ "d1_psnr": "nan" })));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    let frames = synth(
        &tmp.path().join("seq"),
        &["--frames", "2", "--resolution", "2", "--seed", "1"],
    );
    let cfg = tmp.path().join("codec.cfg");
    std::fs::write(&cfg, "# test settings\nlevel = 1\nalpha = 3\nqem = false\n").unwrap();
    let payload = tmp.path().join("p.bin");
    let args = [
        "--config",
        p(&cfg),
        "encode",
        p(&frames[0]),
        p(&frames[1]),
        p(&payload),
    ];
    let stats = json_stdout(&ok(&args));
    assert_eq!(stats["config"]["level"], 1);
    assert_eq!(stats["config"]["alpha"], 3.0);
    assert_eq!(stats["config"]["qem"], false);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--alpha", "5", "--no-adaptive-quant"]);
    let stats = json_stdout(&ok(&with_flag));
    assert_eq!(stats["config"]["alpha"], 5.0);
    assert_eq!(stats["config"]["adaptive_quant"], false);

    std::fs::write(&cfg, "levle = 1\n").unwrap();
    assert_eq!(run(&args).status.code(), Some(2));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config,frame,alpha,bits,d1_psnr,d2_psnr,infinite_psnr"
    );
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_on_static_sequence_is_minimal_and_flags_inf() {
    let tmp = TempDir::new().unwrap();
    let seq = tmp.path().join("seq");
    synth(
        &seq,
        &["--frames", "3", "--shape", "grid", "--resolution", "8"],
    );
    let out = tmp.path().join("out");
    ok(&["sweep", p(&seq), p(&out)]);
    let rows = csv_rows(&out.join("rd.csv"));
    assert_eq!(rows.len(), 2 * 4 * 5);
    let frame = read(&seq.join("frame_0000.obj"));
    let target = (frame.vertex_count() as f64 * 0.25).round() as usize;
    let base = anchor_mesh::decimate::decimate_to_base(&frame, target).unwrap();
    let stats = anchor_mesh::codec::encode(&base, &frame, &Default::default())
        .unwrap()
        .stats;
    // one byte per displacement component after the fixed header and anchor positions
    let minimal = 8 * (63 + 24 * stats.base_vertices as u64 + 3 * stats.subdivided_vertices as u64);
    for r in &rows {
        assert_eq!(r[3].parse::<u64>().unwrap(), minimal, "{r:?}");
        assert_eq!(r[5], "inf", "{r:?}");
        assert_eq!(r[6], "1", "{r:?}");
    }
}

#[test]
fn sweep_translate_motion_estimation_does_not_hurt() {
    let tmp = TempDir::new().unwrap();
    let seq = tmp.path().join("seq");
    synth(
        &seq,
        &[
            "--frames",
            "3",
            "--motion",
            "translate",
            "--velocity",
            "4,1,0",
            "--jitter",
            "--seed",
            "1",
        ],
    );
    let out = tmp.path().join("out");
    ok(&["sweep", p(&seq), p(&out)]);
    let summary: Value =
        serde_json::from_slice(&std::fs::read(out.join("bd_rate.json")).unwrap()).unwrap();
    let ms = &summary["comparisons"][0];
    assert_eq!(ms["config"], "NNS+MS");
    match ms["bd_rate_d1"].as_f64() {
        Some(v) => assert!(v <= 0.0, "{v}"),
        None => assert!(!summary["warnings"].as_array().unwrap().is_empty()),
    }
    let mean = |name: &str| {
        let pts = summary["curves"][name].as_array().unwrap();
        pts.iter()
            .map(|p| p["d1_psnr"].as_f64().unwrap())
            .sum::<f64>()
            / pts.len() as f64
    };
    assert!(mean("NNS+MS") >= mean("NNS"));
}

#[test]
fn sweep_distortion_falls_as_alpha_rises_until_saturation() {
    let tmp = TempDir::new().unwrap();
    let seq = tmp.path().join("seq");
    synth(
        &seq,
        &[
            "--frames", "3", "--motion", "bend", "--jitter", "--seed", "2",
        ],
    );
    let out = tmp.path().join("out");
    ok(&[
        "sweep",
        p(&seq),
        p(&out),
        "--alphas",
        "0.25,0.5,1,2,4,8,16,32,64",
    ]);
    let summary: Value =
        serde_json::from_slice(&std::fs::read(out.join("bd_rate.json")).unwrap()).unwrap();
    for (name, pts) in summary["curves"].as_object().unwrap() {
        let pts = pts.as_array().unwrap();
        for w in pts.windows(2) {
            let (b0, b1) = (
                w[0]["bits"].as_f64().unwrap(),
                w[1]["bits"].as_f64().unwrap(),
            );
            let (q0, q1) = (
                w[0]["d1_psnr"].as_f64().unwrap(),
                w[1]["d1_psnr"].as_f64().unwrap(),
            );
            assert!(b1 >= b0, "{name}: bits fell");
            // 0.02 dB ≈ 0.5% mse: rounding noise once the geometric floor is reached
            assert!(q1 >= q0 - 0.02, "{name}: psnr {q0} -> {q1}");
        }
        let first = pts[0]["d1_psnr"].as_f64().unwrap();
        let last = pts[pts.len() - 1]["d1_psnr"].as_f64().unwrap();
        assert!(last > first + 5.0, "{name}: {first} -> {last}");
    }
}

#[test]
fn sweep_needs_two_frames() {
    let tmp = TempDir::new().unwrap();
    let seq = tmp.path().join("seq");
    synth(&seq, &["--frames", "1", "--resolution", "1"]);
    let out = run(&["sweep", p(&seq), p(&tmp.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
}
