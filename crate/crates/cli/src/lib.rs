//! The `jawprint` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub use commands::execute;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "jawprint", version, about = "Speaker verification from mouth-motion accelerometry")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, env = "JAWPRINT_DATA_ROOT", default_value = "data")]
    pub data_root: PathBuf,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Write a synthetic cohort in the dataset layout, with landmark traces.
    Simulate(SimulateArgs),
    /// Per-location feature matrices for every window of the dataset.
    Extract(ExtractArgs),
    /// ReliefF ranking of the feature columns.
    Select(SelectArgs),
    /// Train per-user verifiers and their EER thresholds.
    Train(TrainArgs),
    /// Session-1 train / session-2 test evaluation report.
    Evaluate(EvaluateArgs),
    /// Replay landmark-derived forgeries against trained verifiers.
    Attack(AttackArgs),
    /// Per-axis means over short blocks of one session.
    Inspect(InspectArgs),
    /// Run the continuous-authentication service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivityArg {
    Seated,
    WalkFlat,
    WalkStairs,
}

impl From<ActivityArg> for jawprint_core::signal::Activity {
    fn from(a: ActivityArg) -> Self {
        use jawprint_core::signal::Activity;
        match a {
            ActivityArg::Seated => Activity::Seated,
            ActivityArg::WalkFlat => Activity::WalkFlat,
            ActivityArg::WalkStairs => Activity::WalkStairs,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub users: usize,
    /// Sessions per user and activity; the protocol needs exactly 2.
    #[arg(long, default_value_t = 2)]
    pub sessions: u8,
    /// Activities to record; all when omitted.
    #[arg(long = "activity", value_enum)]
    pub activities: Vec<ActivityArg>,
    /// Seconds per session.
    #[arg(long, default_value_t = 900.0)]
    pub duration: f64,
    /// Seconds of landmark video per user; 0 skips it.
    #[arg(long, default_value_t = 60.0)]
    pub video_duration: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    #[arg(long, default_value_t = 250)]
    pub window: usize,
    /// Window hop in samples; defaults to the window length.
    #[arg(long)]
    pub hop: Option<usize>,
}

impl WindowArgs {
    pub fn hop(&self) -> usize {
        self.hop.unwrap_or(self.window)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub windows: WindowArgs,
    #[arg(long = "activity", value_enum)]
    pub activities: Vec<ActivityArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectMode {
    Fused,
    PerLocation,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long, default_value_t = 50)]
    pub top: usize,
    #[arg(long, value_enum, default_value_t = SelectMode::Fused)]
    pub mode: SelectMode,
    #[arg(long, value_enum, default_value_t = ActivityArg::Seated)]
    pub activity: ActivityArg,
    /// Session whose windows are ranked.
    #[arg(long, default_value_t = 1)]
    pub session: u8,
    #[arg(long, default_value_t = 10)]
    pub neighbors: usize,
    /// Sampled instances; all when omitted.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[command(flatten)]
    pub windows: WindowArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Svm,
    Lstm,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArg {
    Fused,
    Chin,
    UpperLeftCheek,
    LowerRightCheek,
    PerLocation,
    All,
}

/// Training knobs shared by `train` and `evaluate`.
#[derive(Debug, Args, Serialize)]
pub struct TrainingArgs {
    #[command(flatten)]
    pub windows: WindowArgs,
    #[arg(long, value_enum, default_value_t = ActivityArg::Seated)]
    pub activity: ActivityArg,
    #[arg(long, default_value_t = 1.5)]
    pub impostor_ratio: f64,
    /// Selected features for the SVM.
    #[arg(long, default_value_t = 50)]
    pub top: usize,
    #[arg(long)]
    pub lstm_epochs: Option<usize>,
    #[arg(long)]
    pub lstm_batch: Option<usize>,
    #[arg(long)]
    pub lstm_lr: Option<f64>,
    #[arg(long)]
    pub lstm_units: Option<usize>,
    /// Restrict to these users.
    #[arg(long = "user")]
    pub users: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = ScopeArg::Fused)]
    pub scope: ScopeArg,
    /// Model directory; `<out>/models` when omitted.
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::All)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    pub mode: ScopeArg,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AttackArgs {
    /// Root holding `<user>/video/` landmark traces; the data root when omitted.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    /// Model directory; `<out>/models` when omitted.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Restrict to one frame rate; all of 60, 30, 15 when omitted.
    #[arg(long, value_parser = ["60", "30", "15"])]
    pub fps: Option<String>,
    #[arg(long, value_parser = ["1080p", "720p"])]
    pub resolution: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct InspectArgs {
    /// Block length in seconds.
    #[arg(long, default_value_t = 0.5)]
    pub span: f64,
    /// First user of the data root when omitted.
    #[arg(long)]
    pub user: Option<String>,
    #[arg(long, value_enum, default_value_t = ActivityArg::Seated)]
    pub activity: ActivityArg,
    #[arg(long, default_value_t = 1)]
    pub session: u8,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    /// TOML service configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub models: Option<PathBuf>,
}

/// Parses, prints the resolved configuration to stderr and runs.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    eprintln!("resolved config: {}", serde_json::to_string(&cli).expect("config serializes"));
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
