use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use vru_risk::dataset::{
    discover_recordings, load_recording_with, write_recording, RecordingFiles,
};
use vru_risk::report::{self, ExportFormat};
use vru_risk::sim::{self, SimConfig};
use vru_risk::synth;

#[derive(Parser)]
#[command(
    name = "vru-risk",
    version,
    about = "VRU risk assessment with V2X collective perception"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay one recording at one penetration rate and seed.
    Run(SimArgs),
    /// Replay recordings over every configured rate and seed.
    Sweep(SimArgs),
    /// Aggregate run results written by `run` or `sweep`.
    Report(ReportArgs),
    /// Write built-in synthetic recordings.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    dataset_dir: PathBuf,
    /// Recording ids, comma separated. Defaults to all (sweep) or the config.
    #[arg(long, value_delimiter = ',')]
    recording: Vec<u32>,
    /// Penetration rates in [0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    rates: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// JSON simulation config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    threads: Option<usize>,
    /// Heatmap cell size in meters.
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding run results (or its `runs/` subdirectory).
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scene {
    Occlusion,
    Crossing,
    Intersection,
    All,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Scene::All)]
    scene: Scene,
    /// Seeds for the intersection scene, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
        }
    }
}

/// Marks errors in how the tool was invoked.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<vru_risk::Error>() {
        Some(vru_risk::Error::Config(_)) => 1,
        Some(err) if err.is_data_error() => 2,
        _ => 3,
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(a) => run(a, false),
        Command::Sweep(a) => run(a, true),
        Command::Report(a) => report_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn load_config(args: &SimArgs) -> anyhow::Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str::<SimConfig>(&text)
                .map_err(|e| usage(format!("invalid config {}: {e}", p.display())))?
        }
        None => SimConfig::default(),
    };
    if !args.recording.is_empty() {
        cfg.recordings = args.recording.clone();
    }
    if !args.rates.is_empty() {
        cfg.penetration_rates = args.rates.clone();
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds.clone();
    }
    if args.out.is_some() {
        cfg.output_dir = args.out.clone();
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: SimArgs, sweep: bool) -> anyhow::Result<()> {
    let mut cfg = load_config(&args)?;
    if !args.dataset_dir.is_dir() {
        return Err(usage(format!(
            "dataset directory {} does not exist",
            args.dataset_dir.display()
        )));
    }
    if !sweep {
        if cfg.recordings.is_empty() {
            cfg.recordings = discover_recordings(&args.dataset_dir)?;
        }
        if cfg.recordings.len() != 1 || cfg.penetration_rates.len() != 1 || cfg.seeds.len() != 1 {
            return Err(usage(
                "run takes exactly one recording, one rate and one seed (use sweep for more)",
            ));
        }
    }
    let out_dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));

    let outcome = if sweep {
        sim::with_threads(cfg.threads, || sim::sweep_dir(&args.dataset_dir, &cfg))??
    } else {
        let id = cfg.recordings[0];
        let files = RecordingFiles::in_dir(&args.dataset_dir, id);
        let rec = load_recording_with(&files, &cfg.vru_dimensions)?;
        let result = sim::with_threads(cfg.threads, || {
            sim::run(&rec, cfg.penetration_rates[0], cfg.seeds[0], &cfg)
        })??;
        sim::SweepOutcome {
            results: vec![result],
            failures: Vec::new(),
        }
    };

    report::save_runs(&outcome.results, &out_dir)?;
    report::export(
        &outcome.results,
        &out_dir,
        args.format.into(),
        args.cell_size,
    )?;
    for r in &outcome.results {
        println!(
            "recording {:>3} rate {:.2} seed {:>3}: {:>5} events, {:>7} EAR samples",
            r.meta.recording_id,
            r.meta.rate,
            r.meta.seed,
            r.events.len(),
            r.ear_samples.len()
        );
    }
    if !outcome.failures.is_empty() {
        let path = out_dir.join("failures.json");
        std::fs::write(&path, serde_json::to_string_pretty(&outcome.failures)?)
            .with_context(|| format!("writing {}", path.display()))?;
        for f in &outcome.failures {
            eprintln!(
                "failed: recording {} rate {} seed {}: {}",
                f.recording_id, f.rate, f.seed, f.message
            );
        }
        let data = outcome.failures.iter().all(|f| f.data_error);
        let msg = format!("{} of {} runs failed", outcome.failures.len(), {
            outcome.failures.len() + outcome.results.len()
        });
        if data {
            return Err(vru_risk::Error::Recording(msg).into());
        }
        bail!(msg);
    }
    println!("wrote results to {}", out_dir.display());
    Ok(())
}

fn report_cmd(args: ReportArgs) -> anyhow::Result<()> {
    if !args.input.is_dir() {
        return Err(usage(format!(
            "{} is not a directory",
            args.input.display()
        )));
    }
    let results = report::load_runs(&args.input)?;
    let out = args.out.unwrap_or_else(|| args.input.clone());
    let written = report::export(&results, &out, args.format.into(), args.cell_size)?;
    println!("aggregated {} runs", results.len());
    for p in written {
        println!("  {}", p.display());
    }
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> anyhow::Result<()> {
    let out: &Path = &args.out;
    let mut recordings = Vec::new();
    if matches!(args.scene, Scene::Occlusion | Scene::All) {
        recordings.push(synth::occlusion_scene(1)?.0);
    }
    if matches!(args.scene, Scene::Crossing | Scene::All) {
        recordings.push(synth::crossing_scene(2)?);
    }
    if matches!(args.scene, Scene::Intersection | Scene::All) {
        for &seed in &args.seeds {
            let id = u32::try_from(seed)
                .ok()
                .and_then(|s| s.checked_add(10))
                .ok_or_else(|| usage("intersection seed too large"))?;
            recordings.push(synth::intersection_scene(id, seed)?);
        }
    }
    for rec in &recordings {
        let files = write_recording(out, rec)?;
        println!(
            "recording {:>3}: {}",
            rec.recording_id(),
            files.tracks.display()
        );
    }
    Ok(())
}
