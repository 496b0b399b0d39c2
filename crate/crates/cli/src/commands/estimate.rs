use std::path::PathBuf;

use clap::Args;
use maxsketch::estimator::{required_m, Constants};
use maxsketch::{EstimatorParams, GaussianMaxTable, ThresholdGrid};

use crate::commands::sketch::read_sketch;
use crate::error::{CliError, CliResult, PathContext};
use crate::{Ctx, Record};

/// Guarantee parameters shared by `estimate` and `experiment`.
#[derive(Debug, Clone, Args)]
pub struct GuaranteeArgs {
    /// Multiplicative accuracy: the estimate lands within one (1+eps) grid step.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Failure probability.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Center separation of the stream.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Within-cluster perturbation of the stream.
    #[arg(long, default_value_t = 1e-4)]
    pub eta: f64,
    #[arg(long, default_value_t = Constants::default().c_rho)]
    pub c_rho: f64,
    #[arg(long, default_value_t = Constants::default().c_eta)]
    pub c_eta: f64,
    #[arg(long, default_value_t = Constants::default().c_m)]
    pub c_m: f64,
}

impl GuaranteeArgs {
    pub fn params(&self, n: u64, m: usize) -> maxsketch::Result<EstimatorParams> {
        let constants = Constants {
            c_rho: self.c_rho,
            c_eta: self.c_eta,
            c_m: self.c_m,
        };
        let params = EstimatorParams::new(n, self.eps, self.delta, self.rho, self.eta, m)?
            .with_constants(constants);
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    pub sketch: PathBuf,
    /// Stream length bound; defaults to the number of items sketched.
    #[arg(long)]
    pub n: Option<u64>,
    #[command(flatten)]
    pub guarantee: GuaranteeArgs,
    /// Write the threshold grid audit table here.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

pub fn run(args: &EstimateArgs, ctx: &mut Ctx) -> CliResult {
    let sketch = read_sketch(&args.sketch)?;
    let statistic = sketch.statistic().at(&args.sketch)?;
    let n = args.n.unwrap_or(sketch.items_seen());
    if n < sketch.items_seen() {
        return Err(CliError::usage(format!(
            "--n {n} is below the {} items in the sketch",
            sketch.items_seen()
        )));
    }
    let params = args.guarantee.params(n, sketch.count())?;
    let grid = ThresholdGrid::build(params, &GaussianMaxTable::default())?;
    for w in grid.warnings() {
        ctx.note(format!("warning: {w}"));
    }
    if let Some(path) = &args.grid_out {
        std::fs::write(path, grid.to_csv()).at(path)?;
    }
    let est = grid.estimate(statistic)?;
    let needed = required_m(n, params.eps, params.delta, params.constants.c_m);
    ctx.emit(&[Record::new()
        .with("k_hat", est.k_hat)
        .with("fired", est.fired)
        .with("statistic", est.statistic)
        .with("n", n)
        .with("m", sketch.count())
        .with("required_m", needed)])
}
