use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use maxsketch::streamgen::{derive_seed, generate_stream, CenterMode, ClusterSpec};
use maxsketch::{Error, GaussianMaxTable, MaxSketch, ProjectionSet, ThresholdGrid};
use rayon::prelude::*;

use crate::commands::estimate::GuaranteeArgs;
use crate::error::{CliResult, PathContext};
use crate::output::write_records;
use crate::{Ctx, Record};

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// True cluster counts to sweep, comma separated.
    #[arg(long = "k", value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Independent trials per count.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 512)]
    pub d: usize,
    #[arg(long, default_value_t = 4096)]
    pub m: usize,
    #[command(flatten)]
    pub guarantee: GuaranteeArgs,
    /// Write the results table here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// One estimator run on a fresh stream with fresh projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub k_star: usize,
    pub k_hat: u64,
    pub statistic: f64,
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub k: usize,
    pub trials: u64,
    pub mean_k_hat: f64,
    pub exact_rate: f64,
    pub band_rate: f64,
    pub runtime_s: f64,
}

/// Largest estimate counted as correct for `k_star`: the grid level after
/// the smallest level at or above `k_star`.
pub fn band_limit(levels: &[u64], k_star: u64) -> u64 {
    let r = levels.partition_point(|&t| t < k_star);
    match levels.get(r + 1).or_else(|| levels.last()) {
        Some(&t) => t.max(k_star),
        None => k_star,
    }
}

pub fn trial_seeds(seed: u64, k_star: usize, trial: u64) -> (u64, u64) {
    let stream_seed = derive_seed(derive_seed(seed, k_star as u64), trial);
    (stream_seed, derive_seed(stream_seed, 2))
}

/// Generates a stream, sketches it and estimates its count.
pub fn run_trial(args: &ExperimentArgs, grid: &ThresholdGrid, k_star: usize, trial: u64, seed: u64) -> maxsketch::Result<TrialOutcome> {
    let g = &args.guarantee;
    let spec = ClusterSpec {
        k_star,
        d: args.d,
        eta: g.eta,
        rho: g.rho,
        center_mode: if g.rho > 0.0 {
            CenterMode::RejectionSampled
        } else {
            CenterMode::Orthonormal
        },
    };
    let (stream_seed, proj_seed) = trial_seeds(seed, k_star, trial);
    let stream = generate_stream(&spec, args.n, stream_seed)?;
    let proj = ProjectionSet::new(args.d, args.m, proj_seed)?;
    let mut sketch = MaxSketch::new(&proj);
    sketch.update_batch(&stream.vectors, &proj)?;
    let statistic = sketch.statistic()?;
    let k_hat = grid.estimate(statistic)?.k_hat;
    let limit = band_limit(grid.levels(), k_star as u64);
    Ok(TrialOutcome {
        k_star,
        k_hat,
        statistic,
        in_band: k_star as u64 <= k_hat && k_hat <= limit,
    })
}

/// Runs every `(k, trial)` pipeline; rows come back in `--k` order.
pub fn run_experiment(args: &ExperimentArgs, seed: u64) -> maxsketch::Result<(Vec<ExperimentRow>, Vec<TrialOutcome>, ThresholdGrid)> {
    for &k in &args.k {
        if k < 2 || k > args.n {
            return Err(Error::InvalidParameter(format!("k = {k} is outside [2, n = {}]", args.n)));
        }
    }
    let params = args.guarantee.params(args.n as u64, args.m)?;
    let grid = ThresholdGrid::build(params, &GaussianMaxTable::default())?;
    let mut rows = Vec::with_capacity(args.k.len());
    let mut outcomes = Vec::new();
    for &k in &args.k {
        let start = Instant::now();
        let batch: Vec<TrialOutcome> = (0..args.trials)
            .into_par_iter()
            .map(|t| run_trial(args, &grid, k, t, seed))
            .collect::<maxsketch::Result<_>>()?;
        let total = batch.len() as f64;
        rows.push(ExperimentRow {
            k,
            trials: args.trials,
            mean_k_hat: batch.iter().map(|o| o.k_hat as f64).sum::<f64>() / total,
            exact_rate: batch.iter().filter(|o| o.k_hat == k as u64).count() as f64 / total,
            band_rate: batch.iter().filter(|o| o.in_band).count() as f64 / total,
            runtime_s: start.elapsed().as_secs_f64(),
        });
        outcomes.extend(batch);
    }
    Ok((rows, outcomes, grid))
}

pub fn run(args: &ExperimentArgs, ctx: &mut Ctx) -> CliResult {
    let seed = ctx.seed();
    let (rows, _, grid) = run_experiment(args, seed)?;
    for w in grid.warnings() {
        ctx.note(format!("warning: {w}"));
    }
    let records: Vec<Record> = rows
        .iter()
        .map(|r| {
            Record::new()
                .with("k", r.k)
                .with("trials", r.trials)
                .with("mean_k_hat", r.mean_k_hat)
                .with("exact_rate", r.exact_rate)
                .with("band_rate", r.band_rate)
                .with("runtime_s", r.runtime_s)
        })
        .collect();
    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path).at(path)?;
            write_records(&mut file, ctx.format, &records).at(path)
        }
        None => ctx.emit(&records),
    }
}
