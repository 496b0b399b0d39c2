use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use maxsketch::readout::{learn_thresholds, pav_fit, CalibrationSample, MonotoneStepFn, ProjectionTag};
use maxsketch::sketch::{seeded_fingerprint, SKETCH_MAGIC};
use maxsketch::{Error, MaxSketch};

use crate::commands::sketch::{read_sketch, sketch_stream};
use crate::error::{CliError, CliResult, PathContext};
use crate::{Ctx, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Learned thresholds between multiplicative levels.
    Threshold,
    /// Least-squares isotonic regression.
    Isotonic,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Directory holding the files named in the labels table.
    #[arg(long)]
    pub streams: PathBuf,
    /// CSV table `file,k`; a header row is optional.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Threshold)]
    pub kind: Kind,
    /// Level spacing for the threshold readout.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Projections used when a labelled file is a raw stream.
    #[arg(long, default_value_t = 4096)]
    pub m: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub readout: PathBuf,
    /// Sketches or raw streams; streams are sketched with the readout's projections.
    #[arg(required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
}

fn is_sketch_file(path: &Path) -> CliResult<bool> {
    let mut magic = [0u8; 4];
    let mut file = File::open(path).at(path)?;
    let mut filled = 0;
    while filled < 4 {
        match file.read(&mut magic[filled..]).at(path)? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled == 4 && &magic == SKETCH_MAGIC)
}

/// Loads a sketch file, or sketches a stream with the given projections.
fn load_sketch(path: &Path, tag: Option<ProjectionTag>) -> CliResult<MaxSketch<f64>> {
    if is_sketch_file(path)? {
        return read_sketch(path);
    }
    let tag = tag.ok_or_else(|| CliError::usage("raw streams need projection parameters").at(path))?;
    let file = File::open(path).at(path)?;
    Ok(sketch_stream(file, tag.m, tag.seed, Some(tag.d)).at(path)?.sketch)
}

fn tag_of(sketch: &MaxSketch<f64>) -> maxsketch::Result<ProjectionTag> {
    let seed = sketch
        .binding()
        .seed()
        .ok_or_else(|| Error::Binding("sketch has no projection seed".into()))?;
    Ok(ProjectionTag {
        seed,
        m: sketch.count(),
        d: sketch.dim(),
    })
}

pub fn read_labels(path: &Path) -> CliResult<Vec<(String, u64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(e.to_string()).at(path))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(e.to_string()).at(path))?;
        if rec.len() != 2 {
            return Err(CliError::data(format!("line {}: expected `file,k`", i + 1)).at(path));
        }
        match rec[1].parse::<u64>() {
            Ok(k) => out.push((rec[0].to_string(), k)),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(CliError::data(format!("line {}: bad count {:?}", i + 1, &rec[1])).at(path))
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::data("no labelled files").at(path));
    }
    Ok(out)
}

pub fn fit(samples: &[CalibrationSample], kind: Kind, eps: f64) -> maxsketch::Result<MonotoneStepFn> {
    match kind {
        Kind::Threshold => learn_thresholds(samples, eps),
        Kind::Isotonic => pav_fit(samples),
    }
}

pub fn run_calibrate(args: &CalibrateArgs, ctx: &mut Ctx) -> CliResult {
    let labels = read_labels(&args.labels)?;
    let mut tag: Option<ProjectionTag> = None;
    let mut samples = Vec::with_capacity(labels.len());
    for (file, k) in &labels {
        let path = args.streams.join(file);
        let sketch = match tag {
            Some(t) => load_sketch(&path, Some(t))?,
            None if is_sketch_file(&path)? => read_sketch(&path)?,
            None => {
                let file = File::open(&path).at(&path)?;
                sketch_stream(file, args.m, ctx.seed(), None).at(&path)?.sketch
            }
        };
        let this = tag_of(&sketch).at(&path)?;
        match tag {
            None => tag = Some(this),
            Some(t) if t != this => {
                return Err(CliError::from(Error::Binding(format!(
                    "projections (seed {}, m {}, d {}) differ from earlier inputs (seed {}, m {}, d {})",
                    this.seed, this.m, this.d, t.seed, t.m, t.d
                )))
                .at(&path))
            }
            Some(_) => {}
        }
        samples.push(CalibrationSample::new(sketch.statistic().at(&path)?, *k));
    }
    let tag = tag.expect("at least one label");
    let readout = fit(&samples, args.kind, args.eps)?.with_projection(tag);
    std::fs::write(&args.out, readout.to_json()? + "\n").at(&args.out)?;
    ctx.emit(&[Record::new()
        .with("path", args.out.display().to_string())
        .with("kind", format!("{:?}", args.kind).to_lowercase())
        .with("samples", samples.len())
        .with("steps", readout.levels.len())
        .with("seed", tag.seed)
        .with("m", tag.m)
        .with("d", tag.d)])
}

pub fn load_readout(path: &Path) -> CliResult<MonotoneStepFn> {
    let text = std::fs::read_to_string(path).at(path)?;
    MonotoneStepFn::from_json(&text).at(path)
}

pub fn run_predict(args: &PredictArgs, ctx: &mut Ctx) -> CliResult {
    let readout = load_readout(&args.readout)?;
    let mut rows = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let sketch = load_sketch(path, readout.projection)?;
        if let Some(t) = readout.projection {
            let expected = seeded_fingerprint(t.seed, t.m, t.d);
            if sketch.fingerprint() != expected {
                return Err(CliError::from(Error::Binding(format!(
                    "sketch projections {:016x} do not match the readout's {:016x}",
                    sketch.fingerprint(),
                    expected
                )))
                .at(path));
            }
        } else {
            ctx.note("warning: readout has no projection tag; binding not checked");
        }
        let s = sketch.statistic().at(path)?;
        rows.push(
            Record::new()
                .with("path", path.display().to_string())
                .with("statistic", s)
                .with("k_hat", readout.apply(s)?),
        );
    }
    ctx.emit(&rows)
}
