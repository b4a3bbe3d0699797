//! Batch front end: analyze motion files, render metric reports, run
//! gradient checks, drive the preprocessing pipeline, and generate synthetic
//! motions.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kinephys::grad::{run_gradcheck, GradCheckOptions, LossKind};
use kinephys::metrics::{corpus_report, render_table, sequence_report};
use kinephys::synth::{HumanoidParams, SinusoidProfile};
use kinephys::types::{AnalysisConfig, GroundPlane, MetricsReport};

#[derive(Parser)]
#[command(
    name = "kinephys",
    about = "Physical-plausibility and dynamic-stability analysis for motion sequences",
    version
)]
struct Cli {
    /// Analysis configuration file (JSON); missing fields use defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for batch processing. Defaults to the CPU count.
    /// Output order always follows input order.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Seed for seeded commands (grad-check trials, wander generator).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the five metrics for each input motion plus a corpus mean.
    Analyze {
        /// Motion files in the interchange format.
        inputs: Vec<PathBuf>,
        /// Directory for per-sequence and corpus report files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include per-frame diagnostic traces in the report files.
        #[arg(long)]
        per_frame: bool,
    },
    /// Render previously written report files as one table.
    Report {
        /// Report files produced by `analyze --out`.
        inputs: Vec<PathBuf>,
    },
    /// Verify analytic loss gradients against central finite differences.
    #[command(name = "grad-check")]
    GradCheck {
        /// Loss to check: penetrate, float, slide, dyn-stability,
        /// rotation-cycle, position-cycle, total, or all.
        #[arg(long, default_value = "all")]
        loss: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        /// Maximum relative error allowed.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Test hook: offset added to every analytic gradient component so
        /// the harness can be shown to catch wrong gradients.
        #[arg(long, default_value_t = 0.0, hide_short_help = true)]
        perturb_gradient: f64,
    },
    /// Preprocess a motion: resample, filter, canonicalize, mirror, ground
    /// (applied in that order).
    Pipeline {
        input: PathBuf,
        /// Output motion file. Required unless the run is filter-only.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Resample to this frame rate.
        #[arg(long)]
        fps: Option<f64>,
        /// Apply the ground-support filter; rejected sequences produce no
        /// output file.
        #[arg(long)]
        filter: bool,
        /// Zero the first frame's yaw and horizontal root offset.
        #[arg(long)]
        canonicalize: bool,
        /// Mirror left-right.
        #[arg(long)]
        mirror: bool,
        /// Translate vertically until the lowest vertex touches the ground.
        #[arg(long)]
        ground: bool,
    },
    /// Generate a synthetic motion file.
    Synth {
        #[command(subcommand)]
        generator: Generator,
    },
}

#[derive(Args)]
struct BodyArgs {
    /// Body height, m.
    #[arg(long, default_value_t = 1.7)]
    height: f64,
    /// Number of part labels (1..=10).
    #[arg(long, default_value_t = 10)]
    parts: usize,
    /// Face tessellation factor for denser meshes.
    #[arg(long, default_value_t = 0)]
    subdivisions: usize,
    /// Frame count.
    #[arg(long, default_value_t = 60)]
    frames: usize,
    /// Frame rate.
    #[arg(long, default_value_t = 20.0)]
    fps: f64,
    /// Output motion file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Generator {
    /// Identical frames of the rest pose, feet on the ground.
    Stand {
        #[command(flatten)]
        body: BodyArgs,
    },
    /// Rigid horizontal translation at constant speed, feet grounded.
    Glide {
        #[command(flatten)]
        body: BodyArgs,
        /// Horizontal speed, m/s.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// Sinusoidal vertical motion crossing the ground plane.
    Bounce {
        #[command(flatten)]
        body: BodyArgs,
        /// Peak vertical offset, m.
        #[arg(long, default_value_t = 0.05)]
        amplitude: f64,
        /// Phase offset, rad.
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
    },
    /// Seeded smooth random rigid motion (uses the global --seed).
    Wander {
        #[command(flatten)]
        body: BodyArgs,
    },
    /// Rigid box translating with sinusoidal horizontal acceleration; emits
    /// the analytic ZMP trace.
    #[command(name = "cart-table")]
    CartTable {
        /// Height of the body center above the ground, m.
        #[arg(long, default_value_t = 0.9)]
        mass_height: f64,
        /// Peak horizontal acceleration, m/s².
        #[arg(long, default_value_t = 1.5)]
        accel: f64,
        /// Acceleration frequency, Hz.
        #[arg(long, default_value_t = 0.4)]
        freq: f64,
        /// Phase offset, rad.
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 20.0)]
        fps: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Errors the user can fix by changing the invocation.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<AnalysisConfig> {
    let config = match path {
        None => AnalysisConfig::default(),
        Some(p) => {
            let file = std::fs::File::open(p)
                .with_context(|| format!("opening config {}", p.display()))?;
            serde_json::from_reader(std::io::BufReader::new(file))
                .with_context(|| format!("parsing config {}", p.display()))?
        }
    };
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = load_config(&cli.config)?;
    let plane = GroundPlane::default();
    match cli.command {
        Command::Analyze {
            inputs,
            out,
            per_frame,
        } => cmd_analyze(&cli, &config, &plane, &inputs, out.as_deref(), per_frame),
        Command::Report { inputs } => cmd_report(&cli, &inputs),
        Command::GradCheck {
            loss,
            trials,
            step,
            tolerance,
            perturb_gradient,
        } => cmd_gradcheck(&cli, &loss, trials, step, tolerance, perturb_gradient),
        Command::Pipeline {
            input,
            output,
            fps,
            filter,
            canonicalize,
            mirror,
            ground,
        } => cmd_pipeline(
            &plane,
            &input,
            output.as_deref(),
            fps,
            filter,
            canonicalize,
            mirror,
            ground,
        ),
        Command::Synth { generator } => cmd_synth(&cli, generator),
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct NamedReport {
    name: String,
    metrics: MetricsReport,
}

fn cmd_analyze(
    cli: &Cli,
    config: &AnalysisConfig,
    plane: &GroundPlane,
    inputs: &[PathBuf],
    out: Option<&Path>,
    per_frame: bool,
) -> Result<ExitCode> {
    if inputs.is_empty() {
        return Err(usage("analyze needs at least one input file"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<NamedReport>> = pool.install(|| {
        use rayon::prelude::*;
        inputs
            .par_iter()
            .map(|path| {
                let m = kinephys::io::load_motion(path)
                    .with_context(|| format!("loading {}", path.display()))?;
                let metrics = sequence_report(&m, plane, config, per_frame)
                    .with_context(|| format!("analyzing {}", path.display()))?;
                Ok(NamedReport {
                    name: stem_of(path),
                    metrics,
                })
            })
            .collect()
    });
    let reports: Vec<NamedReport> = results.into_iter().collect::<Result<_>>()?;

    let corpus = corpus_report(&reports.iter().map(|r| r.metrics.clone()).collect::<Vec<_>>())?;

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        for r in &reports {
            let path = dir.join(format!("{}.report.json", r.name));
            std::fs::write(&path, serde_json::to_vec_pretty(r)?)?;
        }
        let corpus_named = NamedReport {
            name: "corpus".into(),
            metrics: strip_traces(&corpus),
        };
        std::fs::write(
            dir.join("corpus.report.json"),
            serde_json::to_vec_pretty(&corpus_named)?,
        )?;
    }

    let mut rows: Vec<(String, MetricsReport)> = reports
        .iter()
        .map(|r| (r.name.clone(), strip_traces(&r.metrics)))
        .collect();
    rows.push(("corpus (mean)".into(), strip_traces(&corpus)));
    match cli.format {
        Format::Table => print!("{}", render_table(&rows)),
        Format::Structured => {
            let body = json!({
                "sequences": reports,
                "corpus": corpus,
            });
            println!("{}", serde_json::to_string_pretty(&body)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn strip_traces(r: &MetricsReport) -> MetricsReport {
    MetricsReport {
        per_frame: None,
        ..r.clone()
    }
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_report(cli: &Cli, inputs: &[PathBuf]) -> Result<ExitCode> {
    let mut rows = Vec::new();
    for path in inputs {
        let file = std::fs::File::open(path)
            .with_context(|| format!("opening report {}", path.display()))?;
        let named: NamedReport = serde_json::from_reader(std::io::BufReader::new(file))
            .with_context(|| format!("parsing report {}", path.display()))?;
        rows.push((named.name, strip_traces(&named.metrics)));
    }
    match cli.format {
        Format::Table => print!("{}", render_table(&rows)),
        Format::Structured => {
            let body: Vec<_> = rows
                .iter()
                .map(|(name, metrics)| json!({"name": name, "metrics": metrics}))
                .collect();
            println!("{}", serde_json::to_string_pretty(&body)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(
    cli: &Cli,
    loss: &str,
    trials: usize,
    step: f64,
    tolerance: f64,
    perturb_gradient: f64,
) -> Result<ExitCode> {
    if trials == 0 {
        return Err(usage("grad-check needs --trials >= 1"));
    }
    let losses: Vec<LossKind> = if loss == "all" {
        LossKind::ALL.to_vec()
    } else {
        vec![LossKind::parse(loss).ok_or_else(|| {
            usage(format!(
                "unknown loss {loss:?}; expected one of {} or all",
                LossKind::ALL
                    .iter()
                    .map(|k| k.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?]
    };
    let opts = GradCheckOptions {
        step,
        tolerance,
        perturb_hook: perturb_gradient,
        ..Default::default()
    };
    let report = run_gradcheck(&losses, trials, cli.seed, &opts)?;
    for case in &report.cases {
        println!(
            "{:<14} wrt {:<18} max rel err {:.3e}  {}",
            case.loss.name(),
            case.wrt.name(),
            case.max_rel_err,
            if case.max_rel_err < tolerance {
                "ok"
            } else {
                "FAIL"
            }
        );
    }
    if report.passed() {
        println!(
            "grad-check passed: {} cases x {} trials, step {step:.1e}, tolerance {tolerance:.1e}",
            report.cases.len(),
            trials
        );
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("grad-check FAILED");
        Ok(ExitCode::from(1))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_pipeline(
    plane: &GroundPlane,
    input: &Path,
    output: Option<&Path>,
    fps: Option<f64>,
    filter: bool,
    canonicalize: bool,
    mirror: bool,
    ground: bool,
) -> Result<ExitCode> {
    let mut m = kinephys::io::load_motion(input)
        .with_context(|| format!("loading {}", input.display()))?;
    if let Some(target) = fps {
        m = kinephys::pipeline::resample(&m, target)?;
    }
    if filter {
        let accept = kinephys::pipeline::support_filter(&m, plane);
        println!("{}: {}", input.display(), if accept { "accept" } else { "reject" });
        if !accept {
            return Ok(ExitCode::SUCCESS);
        }
    }
    if canonicalize {
        m = kinephys::pipeline::canonicalize(&m, plane)?;
    }
    if mirror {
        let out = kinephys::pipeline::mirror(&m)?;
        if !out.labels_swapped {
            eprintln!("note: body declares no left/right joint pairs; geometry mirrored without label swap");
        }
        m = out.sequence;
    }
    if ground {
        m = kinephys::pipeline::ground(&m, plane)?;
    }
    match output {
        Some(path) => kinephys::io::save_motion(&m, path)
            .with_context(|| format!("writing {}", path.display()))?,
        None if fps.is_some() || canonicalize || mirror || ground => {
            return Err(usage("pipeline transforms need --output"));
        }
        None => {}
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(cli: &Cli, generator: Generator) -> Result<ExitCode> {
    let build_body = |args: &BodyArgs| -> Result<kinephys::synth::SynthBody> {
        Ok(kinephys::synth::humanoid(HumanoidParams {
            height: args.height,
            parts: args.parts,
            subdivisions: args.subdivisions,
        })?)
    };
    let (m, output) = match &generator {
        Generator::Stand { body } => (
            kinephys::synth::static_stand(&build_body(body)?, body.frames, body.fps)?,
            body.output.clone(),
        ),
        Generator::Glide { body, speed } => (
            kinephys::synth::glide(&build_body(body)?, *speed, body.frames, body.fps)?,
            body.output.clone(),
        ),
        Generator::Bounce {
            body,
            amplitude,
            phase,
        } => (
            kinephys::synth::bounce(&build_body(body)?, *amplitude, body.frames, body.fps, *phase)?,
            body.output.clone(),
        ),
        Generator::Wander { body } => (
            kinephys::synth::wander(&build_body(body)?, body.frames, body.fps, cli.seed)?,
            body.output.clone(),
        ),
        Generator::CartTable {
            mass_height,
            accel,
            freq,
            phase,
            frames,
            fps,
            output,
        } => (
            kinephys::synth::cart_table(
                *mass_height,
                SinusoidProfile {
                    accel_amplitude: *accel,
                    frequency_hz: *freq,
                    phase: *phase,
                },
                *frames,
                *fps,
            )?,
            output.clone(),
        ),
    };
    kinephys::io::save_motion(&m, &output)
        .with_context(|| format!("writing {}", output.display()))?;
    println!(
        "wrote {} ({} frames, {} vertices, {} fps)",
        output.display(),
        m.num_frames(),
        m.num_vertices(),
        m.fps
    );
    Ok(ExitCode::SUCCESS)
}
