//! `anchor-mesh`: encode, decode, evaluate and sweep dynamic mesh frame pairs.
//!
//! Exit codes: 0 success, 2 input error, 3 payload error. Errors are printed to
//! stderr as a single JSON object.

mod commands;
mod output;
mod settings;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anchor_mesh::synth::{BaseShape, MotionModel, SequenceSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{CliError, CliResult};
use settings::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "anchor-mesh",
    version,
    about = "Inter-frame anchor mesh coding for time-varying topology"
)]
struct Cli {
    /// Flat `key = value` settings file, applied before command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CodingArgs {
    /// Midpoint subdivision levels.
    #[arg(long)]
    level: Option<usize>,
    /// Quantization scale α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Quantization offset δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Neighbor-count normalizer ħ.
    #[arg(long)]
    hbar: Option<f64>,
    /// Plain nearest-neighbor matching without motion estimation.
    #[arg(long)]
    no_motion_est: bool,
    /// Skip QEM refinement (transmit the coarse anchor).
    #[arg(long)]
    no_qem: bool,
    /// Uniform quantization instead of neighbor-count weights.
    #[arg(long)]
    no_adaptive_quant: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Code TARGET against BASE and write the payload to OUT; prints stats JSON.
    Encode {
        base: PathBuf,
        target: PathBuf,
        out: PathBuf,
        /// Write stats JSON here instead of stdout.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[command(flatten)]
        coding: CodingArgs,
    },
    /// Reconstruct the target frame from PAYLOAD and BASE, written as OBJ.
    Decode {
        payload: PathBuf,
        base: PathBuf,
        out: PathBuf,
    },
    /// D1/D2 distortion of TEST against REFERENCE as JSON.
    Eval {
        reference: PathBuf,
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate sweep over consecutive frames of a directory of OBJ files.
    Sweep {
        sequence_dir: PathBuf,
        out_dir: PathBuf,
        /// Comma-separated α ladder.
        #[arg(long)]
        alphas: Option<String>,
        /// Base mesh size as a fraction of each reference frame's vertex count.
        #[arg(long)]
        base_ratio: Option<f64>,
        #[command(flatten)]
        coding: CodingArgs,
    },
    /// Write a synthetic sequence as frame_0000.obj, frame_0001.obj, ...
    Synth {
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Shape::Sphere)]
        shape: Shape,
        /// Sphere subdivisions, or cells per side for grid and cube.
        #[arg(long)]
        resolution: Option<usize>,
        /// Sphere radius or grid/cube side.
        #[arg(long, default_value_t = 100.0)]
        scale: f64,
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, value_enum, default_value_t = Motion::Static)]
        motion: Motion,
        /// Translation per frame, `x,y,z`.
        #[arg(long, default_value = "1,0,0")]
        velocity: String,
        /// Rotation axis, `x,y,z`.
        #[arg(long, default_value = "0,1,0")]
        axis: String,
        /// Radians per frame for rotate and bend.
        #[arg(long, default_value_t = 0.05)]
        rate: f64,
        /// Bend hinge height along y.
        #[arg(long, default_value_t = 0.0)]
        pivot: f64,
        /// Re-triangulate a random patch every frame.
        #[arg(long)]
        jitter: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Shape {
    Sphere,
    Grid,
    Cube,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Motion {
    Static,
    Translate,
    Rotate,
    Bend,
}

fn triple(flag: &str, s: &str) -> CliResult<[f64; 3]> {
    let v = settings::parse_list(flag, s)?;
    v.try_into().map_err(|_| {
        CliError::input(format!(
            "--{flag} expects three comma-separated numbers, got `{s}`"
        ))
    })
}

fn apply_coding(settings: &mut Settings, c: &CodingArgs) {
    let e = &mut settings.encoder;
    if let Some(v) = c.level {
        e.level = v;
    }
    if let Some(v) = c.alpha {
        e.params.alpha = v;
    }
    if let Some(v) = c.delta {
        e.params.delta = v;
    }
    if let Some(v) = c.hbar {
        e.params.hbar = v;
    }
    e.motion_estimation &= !c.no_motion_est;
    e.qem &= !c.no_qem;
    e.adaptive_quant &= !c.no_adaptive_quant;
}

fn run(cli: Cli) -> CliResult<()> {
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        settings.apply_file(path)?;
    }
    if cli.threads.is_some() {
        settings.threads = cli.threads;
    }
    match &cli.command {
        Command::Encode { coding, .. } => apply_coding(&mut settings, coding),
        Command::Sweep {
            coding,
            alphas,
            base_ratio,
            ..
        } => {
            apply_coding(&mut settings, coding);
            if let Some(a) = alphas {
                settings.alphas = settings::parse_list("alphas", a)?;
            }
            if let Some(r) = base_ratio {
                settings.base_ratio = *r;
            }
        }
        _ => {}
    }
    settings.validate()?;
    if let Some(n) = settings.threads {
        if n == 0 {
            return Err(CliError::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    }

    match cli.command {
        Command::Encode {
            base,
            target,
            out,
            stats,
            ..
        } => commands::encode_cmd(&base, &target, &out, stats.as_deref(), &settings),
        Command::Decode { payload, base, out } => commands::decode_cmd(&payload, &base, &out),
        Command::Eval {
            reference,
            test,
            out,
        } => commands::eval_cmd(&reference, &test, out.as_deref()),
        Command::Sweep {
            sequence_dir,
            out_dir,
            ..
        } => sweep::sweep_cmd(&sequence_dir, &out_dir, &settings),
        Command::Synth {
            out_dir,
            shape,
            resolution,
            scale,
            frames,
            motion,
            velocity,
            axis,
            rate,
            pivot,
            jitter,
            seed,
        } => {
            let shape = match shape {
                Shape::Sphere => BaseShape::Sphere {
                    subdivisions: resolution.unwrap_or(3),
                },
                Shape::Grid => BaseShape::Grid {
                    cells: resolution.unwrap_or(16),
                },
                Shape::Cube => BaseShape::Cube {
                    cells: resolution.unwrap_or(8),
                },
            };
            let motion = match motion {
                Motion::Static => MotionModel::Static,
                Motion::Translate => MotionModel::Translate {
                    velocity: triple("velocity", &velocity)?,
                },
                Motion::Rotate => MotionModel::Rotate {
                    axis: triple("axis", &axis)?,
                    rate,
                },
                Motion::Bend => MotionModel::Bend { pivot, rate },
            };
            let spec = SequenceSpec {
                shape,
                scale,
                frames,
                motion,
                topology_jitter: jitter,
                seed: seed.unwrap_or(settings.seed),
            };
            commands::synth_cmd(&spec, &out_dir)
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                output::stdout(&e.to_string());
                return ExitCode::SUCCESS;
            }
            return fail(&CliError::input(e.to_string().trim_end()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
