//! Command-line front end for the `maxsketch` library: stream generation,
//! sketching, estimation, calibrated readouts, Monte Carlo checks and sweep
//! experiments, all file based and deterministic under `--seed`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};
pub use output::{OutputFormat, Record};

/// Environment variable capping the worker threads used by `experiment`.
pub const THREADS_ENV: &str = "MAXSKETCH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "maxsketch", version, about = "Estimate the number of clusters in a vector stream")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed; a random one is drawn and reported when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tables and reports written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Suppress diagnostics on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic clustered stream with ground truth sidecars.
    Gen(commands::gen::GenArgs),
    /// Sketch a stream file in one pass.
    Sketch(commands::sketch::SketchArgs),
    /// Merge sketches built over the same projections.
    Merge(commands::sketch::MergeArgs),
    /// Estimate the cluster count from a sketch.
    Estimate(commands::estimate::EstimateArgs),
    /// Fit a monotone readout on labelled streams or sketches.
    Calibrate(commands::readout::CalibrateArgs),
    /// Apply a fitted readout to sketches or streams.
    Predict(commands::readout::PredictArgs),
    /// Run a Monte Carlo or quadrature check and print its report.
    Verify(commands::verify::VerifyArgs),
    /// Sweep the true count and report estimator accuracy.
    Experiment(commands::experiment::ExperimentArgs),
}

/// Shared state for one invocation: resolved options and the output sinks.
pub struct Ctx<'a> {
    seed: Option<u64>,
    pub format: OutputFormat,
    pub quiet: bool,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl<'a> Ctx<'a> {
    pub fn new(global: &GlobalArgs, out: &'a mut dyn Write, err: &'a mut dyn Write) -> Self {
        Self {
            seed: global.seed,
            format: global.format,
            quiet: global.quiet,
            out,
            err,
        }
    }

    /// The explicit seed, or a freshly drawn one that is reported on stderr
    /// so the run can be repeated.
    pub fn seed(&mut self) -> u64 {
        if let Some(s) = self.seed {
            return s;
        }
        let s: u64 = rand::random();
        self.seed = Some(s);
        // reported even with --quiet: the run is not reproducible without it
        let _ = writeln!(self.err, "seed: {s}");
        s
    }

    pub fn note(&mut self, msg: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(self.err, "{}", msg.as_ref());
        }
    }

    pub fn emit(&mut self, records: &[Record]) -> CliResult {
        output::write_records(self.out, self.format, records)
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut ctx = Ctx::new(&cli.global, out, err);
    match cli.command {
        Command::Gen(a) => commands::gen::run(&a, &mut ctx),
        Command::Sketch(a) => commands::sketch::run_sketch(&a, &mut ctx),
        Command::Merge(a) => commands::sketch::run_merge(&a, &mut ctx),
        Command::Estimate(a) => commands::estimate::run(&a, &mut ctx),
        Command::Calibrate(a) => commands::readout::run_calibrate(&a, &mut ctx),
        Command::Predict(a) => commands::readout::run_predict(&a, &mut ctx),
        Command::Verify(a) => commands::verify::run(&a, &mut ctx),
        Command::Experiment(a) => commands::experiment::run(&a, &mut ctx),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(cli, out, err)
}

/// Sizes the global rayon pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> CliResult {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

pub(crate) fn sidecar(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
