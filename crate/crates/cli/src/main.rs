//! `hdmd`: generate datasets, fit and apply Hankel-DMD models, and run the
//! sweep and spectrum studies from the command line.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hdmd", version, about = "Hankel dynamic mode decomposition for periodic trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a pendulum or orbit and write a trajectory file.
    Generate(GenerateArgs),
    /// Fit a model to a trajectory file and write the model document.
    Fit(FitArgs),
    /// Evaluate a fitted model at a range of steps.
    Predict(PredictArgs),
    /// Print the rank of the delay-embedded matrix against the delay count.
    Rank(RankArgs),
    /// Error and rank curves over one parameter.
    Sweep {
        #[command(subcommand)]
        axis: SweepCommand,
    },
    /// Zero-padded FFT magnitude spectrum.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Pendulum,
    Kepler,
    J2,
    Drag,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Iss,
    Molniya,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    system: System,
    /// Sampling interval in seconds [default: 0.01 for the pendulum, 60 for orbits].
    #[arg(long)]
    dt: Option<f64>,
    /// Length in seconds.
    #[arg(long, conflicts_with = "periods")]
    duration: Option<f64>,
    /// Length in fundamental periods.
    #[arg(long)]
    periods: Option<f64>,
    /// Built-in initial elements for orbital systems.
    #[arg(long, value_enum, default_value = "iss", conflicts_with_all = ["elements", "tle"])]
    preset: Preset,
    /// Initial elements `a,e,i,raan,argp,f` (km, degrees).
    #[arg(long, conflicts_with = "tle")]
    elements: Option<String>,
    /// TLE file supplying the initial elements (and B* for drag).
    #[arg(long)]
    tle: Option<PathBuf>,
    /// Which record of the TLE file to use.
    #[arg(long, default_value_t = 0)]
    tle_index: usize,
    /// Drag ballistic coefficient, inverse Earth radii.
    #[arg(long)]
    bstar: Option<f64>,
    /// Use the inertial velocity in the drag law instead of the velocity
    /// relative to a co-rotating atmosphere.
    #[arg(long)]
    static_atmosphere: bool,
    /// Pendulum `g/L`, 1/s².
    #[arg(long, default_value_t = hankel_dmd::presets::PENDULUM_OMEGA0_SQ)]
    omega0_sq: f64,
    /// Pendulum release angle, rad.
    #[arg(long, default_value_t = hankel_dmd::presets::PENDULUM_AMPLITUDE)]
    amplitude: f64,
    #[arg(long, default_value_t = 1e-12)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-14)]
    atol: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct DmdArgs {
    /// Fraction of squared singular values kept by the truncation.
    #[arg(long, default_value_t = hankel_dmd::dmd::DEFAULT_ENERGY_FRACTION)]
    energy: f64,
    /// Upper bound on the retained rank.
    #[arg(long)]
    max_rank: Option<usize>,
    /// Use projected modes `ŨW` instead of exact-DMD modes.
    #[arg(long)]
    projected: bool,
    /// Fit amplitudes to every training snapshot instead of the first.
    #[arg(long)]
    all_snapshots: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short = 'l', long)]
    delays: usize,
    /// Training window in samples from the start of the file [default: all].
    #[arg(long, conflicts_with = "train_periods")]
    train_samples: Option<usize>,
    /// Training window in fundamental periods.
    #[arg(long)]
    train_periods: Option<f64>,
    /// Fundamental period in seconds [default: estimated from the spectrum].
    #[arg(long)]
    period: Option<f64>,
    #[command(flatten)]
    dmd: DmdArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(short, long)]
    model: PathBuf,
    /// Trajectory whose rows are copied ahead of the predictions.
    #[arg(long)]
    input: Option<PathBuf>,
    /// First step, counted from the start of the training window.
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[arg(long)]
    count: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    l_max: usize,
    /// Singular values below this fraction of the largest count as zero.
    #[arg(long, default_value_t = hankel_dmd::numerics::DEFAULT_RANK_TOL)]
    rel_tol: f64,
}

#[derive(Args, Clone)]
struct SweepCommon {
    #[arg(short, long)]
    input: PathBuf,
    /// Fundamental period in seconds [default: estimated from the spectrum].
    #[arg(long)]
    period: Option<f64>,
    /// Axis values: a comma list (`1,2,5`) or an inclusive range `start:end[:step]`.
    #[arg(long)]
    values: String,
    #[command(flatten)]
    dmd: DmdArgs,
    /// Run the sweep points on the calling thread.
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Training error against the number of delays.
    Delays {
        #[command(flatten)]
        common: SweepCommon,
        #[arg(long, default_value_t = 10.0)]
        train_periods: f64,
    },
    /// Training error and rank against the training window, in periods.
    Window {
        #[command(flatten)]
        common: SweepCommon,
        #[arg(short = 'l', long)]
        delays: usize,
    },
    /// Prediction error against the horizon, in periods.
    Horizon {
        #[command(flatten)]
        common: SweepCommon,
        #[arg(short = 'l', long)]
        delays: usize,
        #[arg(long, default_value_t = 10.0)]
        train_periods: f64,
    },
    /// Error against integer multiples of the file's sampling interval.
    Sampling {
        #[command(flatten)]
        common: SweepCommon,
        #[arg(short = 'l', long)]
        delays: usize,
        #[arg(long, default_value_t = 10.0)]
        train_periods: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    None,
    Hamming,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = hankel_dmd::spectral::DEFAULT_PAD_FACTOR)]
    pad: usize,
    #[arg(long, value_enum, default_value = "none")]
    window: WindowArg,
    /// Also print this many strongest peaks.
    #[arg(long, default_value_t = 0)]
    peaks: usize,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdmd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
