mod commands;
mod error;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::settings::MetricArgs;

#[derive(Debug, Parser)]
#[command(name = "iqa", version, about = "Intensity-sensitive image similarity indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a test image against a reference.
    Compare(CompareArgs),
    /// Track change across an ordered image sequence.
    Sequence(SequenceArgs),
    /// Synthetic experiments.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Characteristic curves: scores against controlled similarity levels.
    Curves(CurvesArgs),
    /// Repeated band-targeted noise groups summarized by sensi.
    Noise(NoiseArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// key=value file using long flag names as keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, env = "IQA_SEED")]
    pub seed: Option<u64>,
    /// json, csv or svg, depending on the subcommand.
    #[arg(long)]
    pub format: Option<String>,
    /// Output file (compare) or directory (sequence, synth).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// png8, png16, text-matrix or raw-f64; detected from the extension when omitted.
    #[arg(long = "input-format")]
    pub input_format: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
    /// Metric that sensi is measured against.
    #[arg(long)]
    pub baseline: Option<String>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    /// Frames in order, or a single directory read in filename order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Split frames into an RxC grid of regions.
    #[arg(long)]
    pub grid: Option<String>,
    /// Comma-separated region labels, row-major.
    #[arg(long)]
    pub labels: Option<String>,
    /// adjacent or first-vs-each.
    #[arg(long)]
    pub mode: Option<String>,
    /// per-pair or sequence.
    #[arg(long)]
    pub normalize: Option<String>,
    /// raw or normalized intensities for direc.
    #[arg(long = "direc-on")]
    pub direc_on: Option<String>,
    /// Also render an SVG chart.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Reference image; a bundled synthetic scene is used when omitted.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Comma-separated similarity levels in (0, 1], increasing.
    #[arg(long)]
    pub levels: Option<String>,
    /// Band fraction.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Side length of the synthetic scene.
    #[arg(long)]
    pub size: Option<usize>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Reference images (repeatable); synthetic scenes are used when omitted.
    #[arg(long = "ref")]
    pub references: Vec<PathBuf>,
    /// Comma-separated noise amplitudes (required).
    #[arg(long)]
    pub amplitude: Option<String>,
    /// Comma-separated distributions: uniform, gaussian, rayleigh.
    #[arg(long)]
    pub dist: Option<String>,
    /// highest, lowest or both.
    #[arg(long)]
    pub band: Option<String>,
    /// Share of pixels in the band.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Noise draws per reference and condition.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Share of the band that receives noise in each repeat.
    #[arg(long)]
    pub coverage: Option<f64>,
    /// Histogram bin count.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Metric that sensi is measured against.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Number of synthetic scenes when no references are given.
    #[arg(long)]
    pub scenes: Option<usize>,
    /// Side length of the synthetic scenes.
    #[arg(long)]
    pub size: Option<usize>,
    #[command(flatten)]
    pub metrics: MetricArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Config(e.render().to_string().trim_end().to_string())),
    };
    let result = match cli.command {
        Command::Compare(args) => commands::compare(&args),
        Command::Sequence(args) => commands::sequence(&args),
        Command::Synth(SynthCommand::Curves(args)) => commands::curves(&args),
        Command::Synth(SynthCommand::Noise(args)) => commands::noise(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
