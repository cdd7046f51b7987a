//! `tvreg`: command-line front end for the time-varying regression toolkit.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvreg::kernels::KernelFamily;
use tvreg::{Error, ErrorCategory};

#[derive(Parser, Debug)]
#[command(name = "tvreg", version, about = "Kernel estimation of time-varying trends and AR(1) coefficients")]
pub struct Cli {
    /// Seed for every random stream the command draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory that receives output files.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// JSON configuration for the subcommand; explicit flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate the time-varying AR(1) design and write `series.csv`.
    Simulate(SimulateArgs),
    /// Two-step fit of trend and AR coefficient on a CSV series.
    Fit(FitArgs),
    /// Blocked cross-validation curve for the trend bandwidth.
    Cv(InputArgs),
    /// Monte Carlo ASE table for the trend and coefficient estimators.
    #[command(name = "mc-table1")]
    McTable1(McArgs),
    /// Empirical check of the uniform convergence rate.
    RateCheck(RateArgs),
    /// Bandwidth exponent and mixing-rate bound for given moment conditions.
    Theta(ThetaArgs),
    /// ACF, PACF, Ljung-Box and ARMA BIC grid for a CSV series.
    Diagnose(DiagnoseArgs),
    /// Ingest, preprocess, fit, diagnose and plot a monthly record.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Headed CSV file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "time")]
    pub time_column: String,
    #[arg(long, default_value = "value")]
    pub value_column: String,
    #[arg(long, default_value = "epanechnikov", value_parser = parse_kernel)]
    pub kernel: KernelFamily,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, short = 't', default_value_t = 500)]
    pub length: usize,
    /// Innovation variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Use a constant AR coefficient instead of the time-varying curve.
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Trend bandwidth; cross-validated when omitted.
    #[arg(long)]
    pub h: Option<f64>,
    /// Coefficient bandwidth; defaults to `h`.
    #[arg(long)]
    pub v: Option<f64>,
    /// Interior margin for the coefficient curve.
    #[arg(long)]
    pub b_t: Option<f64>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, value_delimiter = ',')]
    pub t_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub sigma2_list: Option<Vec<f64>>,
    #[arg(long)]
    pub n_reps: Option<usize>,
    /// Fixed trend bandwidth (requires `--v`); cross-validation otherwise.
    #[arg(long, requires = "v")]
    pub h: Option<f64>,
    #[arg(long, requires = "h")]
    pub v: Option<f64>,
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelFamily>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ProcessArg {
    Iid,
    Ar1,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessArg>,
    /// AR coefficient for `--process ar1`.
    #[arg(long, default_value_t = 0.75)]
    pub phi: f64,
    /// Moment order of the kernel average.
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t_list: Option<Vec<usize>>,
    #[arg(long)]
    pub n_reps: Option<usize>,
    /// `h(T) = scale (ln T / T)^exponent`.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelFamily>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ModeArg {
    InProbability,
    AlmostSure,
}

#[derive(Args, Debug)]
pub struct ThetaArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 30)]
    pub max_lag: usize,
    /// Ljung-Box lags (default: 5, 8, 10, ..., 30 up to half the length).
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    /// Also fit the ARMA(p, q) BIC grid for p, q <= 4.
    #[arg(long)]
    pub bic: bool,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Input CSV; overrides `input_path` from `--config`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub time_column: Option<String>,
    #[arg(long)]
    pub value_column: Option<String>,
}

fn parse_kernel(s: &str) -> Result<KernelFamily, Error> {
    s.parse()
}

fn exit_code(err: &Error) -> u8 {
    match err.category() {
        ErrorCategory::Usage => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 0 for --help/--version and 2 for usage errors
        Err(e) => e.exit(),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
