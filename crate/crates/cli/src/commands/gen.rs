use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use maxsketch::stream_io::{write_binary, write_csv};
use maxsketch::streamgen::{generate_stream, CenterMode, ClusterSpec, GeneratedStream};

use crate::error::{CliResult, PathContext};
use crate::{sidecar, Ctx, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Centers {
    Orthonormal,
    Rejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StreamEncoding {
    Binary,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// True number of clusters.
    #[arg(long = "k")]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 512)]
    pub d: usize,
    /// Within-cluster perturbation: observations satisfy <x, center> >= 1 - eta.
    #[arg(long, default_value_t = 1e-4)]
    pub eta: f64,
    /// Maximum |<c_r, c_s>| between centers (rejection sampling only).
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = Centers::Orthonormal)]
    pub centers: Centers,
    /// Output stream path; `.truth.csv` and `.truth.json` sidecars go next to it.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Stream encoding; defaults to CSV for `.csv` paths and binary otherwise.
    #[arg(long, value_enum)]
    pub encoding: Option<StreamEncoding>,
}

impl GenArgs {
    pub fn spec(&self) -> ClusterSpec {
        ClusterSpec {
            k_star: self.k,
            d: self.d,
            eta: self.eta,
            rho: self.rho,
            center_mode: match self.centers {
                Centers::Orthonormal => CenterMode::Orthonormal,
                Centers::Rejection => CenterMode::RejectionSampled,
            },
        }
    }

    fn encoding(&self) -> StreamEncoding {
        self.encoding.unwrap_or_else(|| {
            match self.out.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("csv") => StreamEncoding::Csv,
                _ => StreamEncoding::Binary,
            }
        })
    }
}

pub fn write_stream(path: &Path, stream: &GeneratedStream, encoding: StreamEncoding) -> CliResult {
    let mut w = BufWriter::new(File::create(path).at(path)?);
    match encoding {
        StreamEncoding::Binary => write_binary(&mut w, &stream.vectors, stream.dim()),
        StreamEncoding::Csv => write_csv(&mut w, &stream.vectors, stream.dim()),
    }
    .at(path)?;
    w.flush().at(path)
}

pub fn run(args: &GenArgs, ctx: &mut Ctx) -> CliResult {
    let seed = ctx.seed();
    let stream = generate_stream(&args.spec(), args.n, seed)?;
    let header = stream.truth_header()?;
    write_stream(&args.out, &stream, args.encoding())?;

    let truth_csv = sidecar(&args.out, ".truth.csv");
    std::fs::write(&truth_csv, stream.truth_csv()).at(&truth_csv)?;
    let truth_json = sidecar(&args.out, ".truth.json");
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    std::fs::write(&truth_json, json + "\n").at(&truth_json)?;

    ctx.emit(&[Record::new()
        .with("path", args.out.display().to_string())
        .with("k", header.k_star)
        .with("n", header.n)
        .with("d", args.d)
        .with("eta", args.eta)
        .with("rho", args.rho)
        .with("seed", seed)
        .with("realized_rho", header.realized_rho)
        .with("eta_hat", header.eta_hat)])
}
