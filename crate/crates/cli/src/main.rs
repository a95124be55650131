//! `urbanfno`: generate wind fields, prepare datasets, train and evaluate
//! the surrogate.

mod commands;
mod config;
mod index;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use urbanfno::fno::Activation;
use urbanfno::sim::WindDirection;

#[derive(Debug, Parser)]
#[command(name = "urbanfno", version, about = "Urban wind-field simulation and Fourier neural operator surrogate")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with [solver], [train], [model] and [eval] tables. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver on a scene and write one field file per output step.
    Generate(GenerateArgs),
    /// Downsample generated fields and build the windowed train/test manifest.
    Prepare(PrepareArgs),
    /// Train a model on a manifest.
    Train(TrainArgs),
    /// One-step metrics, PDFs, conditional error and height profiles.
    Eval(EvalArgs),
    /// Autoregressive forecast and its accumulated error.
    Rollout(RolloutArgs),
    /// Time one solver step against one surrogate forward.
    Bench(BenchArgs),
    /// Convert field files to legacy VTK.
    ExportVtk(ExportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1200)]
    pub steps: usize,
    /// Keep every n-th step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// west, north, east, south or 0/90/180/270.
    #[arg(long)]
    pub direction: Option<WindDirection>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    /// Output directory of `generate`.
    #[arg(long)]
    pub fields: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub window: usize,
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    #[arg(long)]
    pub n_train: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target cells as NX,NY,NZ (default: keep the source grid).
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    /// Time between fields in seconds (default: read from the run summary).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Feed raw magnitudes to the model instead of standardized ones.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Finite-difference check of a few gradients before training.
    #[arg(long)]
    pub gradient_check: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    /// Scenario name stored in the report.
    #[arg(long, default_value = "scenario")]
    pub label: String,
    /// Allow a grid different from the training grid.
    #[arg(long)]
    pub any_resolution: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct RolloutArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Index of the first of the initial fields (default: first test window).
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Also write every predicted field.
    #[arg(long)]
    pub save_fields: bool,
    #[arg(long)]
    pub any_resolution: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Untimed solver steps before measuring.
    #[arg(long, default_value_t = 10)]
    pub spinup: usize,
    #[arg(long)]
    pub direction: Option<WindDirection>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// Field files to convert.
    #[arg(long = "field", required = true)]
    pub fields: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "velocity_magnitude")]
    pub name: String,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || format!("expected NX,NY,NZ with positive integers, got '{s}'");
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut d = [0; 3];
    for (slot, p) in d.iter_mut().zip(&parts) {
        *slot = p.parse().ok().filter(|&v| v > 0).ok_or_else(bad)?;
    }
    Ok(d)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        urbanfno::par::init_global(n);
    }
    let file = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a, file),
        Command::Prepare(a) => commands::prepare(a, file),
        Command::Train(a) => commands::train(a, file),
        Command::Eval(a) => commands::eval(a, file),
        Command::Rollout(a) => commands::rollout(a, file),
        Command::Bench(a) => commands::bench(a, file),
        Command::ExportVtk(a) => commands::export_vtk(a, file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
