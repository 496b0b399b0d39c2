use clap::{Args, ValueEnum};
use maxsketch::streamgen::{generate_stream, ClusterSpec};
use maxsketch::verify::{
    check_concentration, check_gap, check_perturbation, check_slepian, mc_expected_max, McReport,
};
use maxsketch::GaussianMaxTable;

use crate::error::{CliError, CliResult, EXIT_CHECK_FAILED};
use crate::{Ctx, OutputFormat, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Monte Carlo E[max_r <w, e_r>] over k orthonormal vectors.
    ExpectedMax,
    /// Equicorrelated maxima against the independent case.
    Slepian,
    /// Stream maxima against center maxima on a generated stream.
    Perturbation,
    /// Growth of the expected maximum between k and (1+eps)k.
    Gap,
    /// Spread of the sketch statistic over projection redraws.
    Concentration,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub check: Check,
    #[arg(long = "k", default_value_t = 16)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub eta: f64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 512)]
    pub d: usize,
    #[arg(long, default_value_t = 1024)]
    pub m: usize,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Projection redraws for the concentration check.
    #[arg(long, default_value_t = 200)]
    pub redraws: usize,
}

pub fn report(args: &VerifyArgs, seed: u64) -> maxsketch::Result<McReport> {
    let table = GaussianMaxTable::default();
    match args.check {
        Check::ExpectedMax => {
            let mut rows = vec![0.0; args.k * args.k];
            (0..args.k).for_each(|i| rows[i * args.k + i] = 1.0);
            mc_expected_max(&rows, args.k, args.trials, seed)
        }
        Check::Slepian => check_slepian(args.k as u64, args.rho, args.trials, seed, &table),
        Check::Perturbation => {
            let spec = ClusterSpec::orthonormal(args.k, args.d, args.eta);
            let stream = generate_stream(&spec, args.n, seed)?;
            check_perturbation(&stream, args.trials, seed)
        }
        Check::Gap => check_gap(args.k as u64, args.eps, &table),
        Check::Concentration => {
            let spec = ClusterSpec::orthonormal(args.k, args.d, args.eta);
            let stream = generate_stream(&spec, args.n, seed)?;
            check_concentration(&stream.vectors, args.d, args.m, args.redraws, seed)
        }
    }
}

pub fn run(args: &VerifyArgs, ctx: &mut Ctx) -> CliResult {
    let seed = ctx.seed();
    let r = report(args, seed)?;
    match ctx.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&r.to_json()).expect("report serializes");
            writeln!(ctx.out, "{text}")?;
        }
        OutputFormat::Csv => {
            let mut rec = Record::new()
                .with("name", r.name.clone())
                .with("estimate", r.estimate)
                .with("stderr", r.stderr)
                .with("bound_lo", r.bound_lo)
                .with("bound_hi", r.bound_hi)
                .with("pass", r.pass)
                .with("trials", r.trials)
                .with("seed", r.seed);
            for (k, v) in &r.extra {
                rec = rec.with(k, *v);
            }
            ctx.emit(&[rec])?;
        }
    }
    if r.pass {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_CHECK_FAILED,
            message: format!("check {} failed", r.name),
        })
    }
}
