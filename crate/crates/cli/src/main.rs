//! `laa3d` — batch evaluation and baseline toolkit for low-altitude aerial
//! 3D perception: detection scoring (ADS), tracking metrics (CLEAR /
//! identity / HOTA), 6-DoF pose scoring (ADD / ADD-S), a Kalman tracker and
//! trajectory-prediction baseline, and a deterministic scenario simulator.
//!
//! Exit codes: 0 success, 2 input error, 3 evaluation precondition error,
//! 1 internal error.

mod cmds;
mod config;
mod inputs;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "laa3d", version, about = "Evaluation toolkit for low-altitude aerial 3D perception")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone)]
struct Shared {
    /// Class-constant overrides file (see FORMATS.md).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Inline override, e.g. `--set MAV.mot_threshold=5` (beats --config).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Restrict evaluation to these classes (comma-separated).
    #[arg(long, global = true, value_name = "LIST")]
    classes: Option<String>,
    /// Frame for distance computations.
    #[arg(long, global = true, default_value = "world")]
    frame: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed override for simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for loading sequences (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Score detections against ground truth (ADS report + PR curves).
    EvalDet {
        #[command(flatten)]
        shared: Shared,
        /// Ground-truth sequence file or directory of *.seq files.
        #[arg(long)]
        gt: PathBuf,
        /// Detection file or directory of *.det files.
        #[arg(long)]
        det: PathBuf,
        /// AP integration: standard101 or nuscenes-trimmed.
        #[arg(long, default_value = "standard101")]
        ap_interpolation: String,
        /// Size error mode: relative or absolute.
        #[arg(long, default_value = "relative")]
        ase_mode: String,
    },
    /// Score tracks against ground truth (CLEAR / identity / HOTA report).
    EvalMot {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        gt: PathBuf,
        /// Track file or directory of *.trk files.
        #[arg(long)]
        tracks: PathBuf,
    },
    /// Score 6-DoF poses of detections (ADD / ADD-S at half diameter).
    EvalPose {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        det: PathBuf,
    },
    /// Run the Kalman tracker over detections, producing a track file.
    Track {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        det: PathBuf,
        /// Optional sequence supplying frame range and timestamps.
        #[arg(long)]
        seq: Option<PathBuf>,
        /// Frame rate assumed when --seq is absent.
        #[arg(long, default_value_t = 10.0)]
        fps: f64,
        #[arg(long, default_value_t = 2)]
        max_age: u32,
        #[arg(long, default_value_t = 3)]
        min_hits: u32,
    },
    /// Kalman trajectory prediction over ground-truth tracks (ADE / FDE).
    Predict {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 3)]
        history: usize,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
    },
    /// Expand a scenario file into ground truth (and corrupted detections).
    Simulate {
        #[command(flatten)]
        shared: Shared,
        /// Scenario description file (LAA3D-SCN v1).
        #[arg(long)]
        spec: PathBuf,
    },
}

/// Errors mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable, or schema-invalid inputs (exit 2).
    Input(String),
    /// Inputs parsed but the evaluation preconditions fail (exit 3).
    Precondition(String),
    /// Everything else (exit 1).
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Precondition(m) => write!(f, "evaluation precondition: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<laa3d::io::IoError> for CliError {
    fn from(e: laa3d::io::IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<laa3d::synth::SynthError> for CliError {
    fn from(e: laa3d::synth::SynthError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<laa3d::detection::DetectionError> for CliError {
    fn from(e: laa3d::detection::DetectionError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<laa3d::mot::MotError> for CliError {
    fn from(e: laa3d::mot::MotError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::EvalDet { shared, gt, det, ap_interpolation, ase_mode } => {
            cmds::eval_det(&shared, &gt, &det, &ap_interpolation, &ase_mode)
        }
        Command::EvalMot { shared, gt, tracks } => cmds::eval_mot(&shared, &gt, &tracks),
        Command::EvalPose { shared, gt, det } => cmds::eval_pose(&shared, &gt, &det),
        Command::Track { shared, det, seq, fps, max_age, min_hits } => {
            cmds::track(&shared, &det, seq.as_deref(), fps, max_age, min_hits)
        }
        Command::Predict { shared, gt, history, horizon } => {
            cmds::predict(&shared, &gt, history, horizon)
        }
        Command::Simulate { shared, spec } => cmds::simulate(&shared, &spec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("laa3d: {e}");
            match e {
                CliError::Input(_) => ExitCode::from(2),
                CliError::Precondition(_) => ExitCode::from(3),
                CliError::Internal(_) => ExitCode::from(1),
            }
        }
    }
}
