//! Command-line front end: dataset generation, training, evaluation,
//! gradient checks and decision-region rendering.
//!
//! [`dispatch`] is the whole program; `main` only forwards the process
//! arguments and exit code. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mnn::{Activation, OptimizerKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mnn", version, about = "Mesh neural networks with forward-only gradients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset and write it as CSV.
    Gen(GenArgs),
    /// Train a network on a CSV dataset.
    Train(TrainArgs),
    /// Print the accuracy of a saved model.
    Eval(EvalArgs),
    /// Compare forward-only gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Render the decision regions of a two-feature model.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Moons,
    Circles,
    Spirals,
    SingleBlobs,
    DoubleBlobs,
    Iris,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetKind,
    /// Number of samples (ignored for iris).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Standard deviation of the Gaussian noise (moons, circles, spirals).
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inner radius of the circles dataset.
    #[arg(long, default_value_t = 0.5)]
    pub factor: f64,
    /// Number of turns of each spiral arm.
    #[arg(long, default_value_t = 1.75)]
    pub turns: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training data: CSV with the label in the last column.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub hidden: usize,
    /// States per forward pass, counting the initial one.
    #[arg(long, default_value_t = 3)]
    pub ticks: usize,
    #[arg(long, default_value_t = Activation::Relu)]
    pub activation: Activation,
    /// JSON file with training hyperparameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV 0/1 adjacency mask replacing the default mesh topology.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Let input neurons evolve instead of resetting them every tick.
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Where to write the trained model (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write per-epoch loss and accuracy (CSV).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Which part of the data to score. `train` and `test` redo the split
    /// recorded in the model file.
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Total neuron count.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub ticks: usize,
    #[arg(long, default_value_t = Activation::Tanh)]
    pub activation: Activation,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = mnn::gradcheck::DEFAULT_STEP)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("output").required(true).multiple(true).args(["pgm", "csv"]))]
pub struct PlotArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset whose bounding box sets the plotted area.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Runs the program on `args` (including the program name) and returns the
/// exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_FAILURE
        }
    }
}
