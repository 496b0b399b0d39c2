use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use maxsketch::sketch::INGEST_CHUNK;
use maxsketch::stream_io::StreamReader;
use maxsketch::{Error, MaxSketch, ProjectionSet};

use crate::error::{CliError, CliResult, PathContext};
use crate::{Ctx, Record};

const READ_BUFFER: usize = 1 << 16;

#[derive(Debug, Clone, Args)]
pub struct SketchArgs {
    /// Stream file (binary or CSV).
    pub input: PathBuf,
    /// Number of projections.
    #[arg(long, default_value_t = 4096)]
    pub m: usize,
    /// Vector dimension; required for empty CSV input, checked otherwise.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MergeArgs {
    #[arg(required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

/// Result of one pass over a stream, with memory instrumentation.
#[derive(Debug)]
pub struct SketchRun {
    pub sketch: MaxSketch<f64>,
    pub projections: ProjectionSet<f64>,
    /// Largest number of input values held at once.
    pub peak_buffered_values: usize,
    /// Sketch state size, checked to be the same after every chunk.
    pub state_bytes: usize,
}

/// Sketches a stream read from `input` with `m` projections drawn from
/// `seed`, holding at most one ingestion chunk of vectors in memory.
pub fn sketch_stream<R: Read>(input: R, m: usize, seed: u64, d_hint: Option<usize>) -> maxsketch::Result<SketchRun> {
    let mut reader = StreamReader::new(BufReader::with_capacity(READ_BUFFER, input))?;
    let mut buf = Vec::new();
    let first = reader.next_chunk(INGEST_CHUNK, &mut buf)?;
    let d = match (reader.dim(), d_hint) {
        (Some(d), Some(h)) if d != h => return Err(Error::Dimension { expected: h, actual: d }),
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => {
            return Err(Error::InvalidParameter("empty input has no dimension; pass --d".into()));
        }
    };
    let projections = ProjectionSet::new(d, m, seed)?;
    let mut sketch = MaxSketch::new(&projections);
    let state_bytes = sketch.state_bytes();
    let mut peak = buf.capacity();
    let mut rows = first;
    while rows > 0 {
        sketch.update_batch(&buf, &projections)?;
        if sketch.state_bytes() != state_bytes {
            return Err(Error::InvalidInput("sketch state grew during ingestion".into()));
        }
        rows = reader.next_chunk(INGEST_CHUNK, &mut buf)?;
        peak = peak.max(buf.capacity());
    }
    Ok(SketchRun {
        sketch,
        projections,
        peak_buffered_values: peak,
        state_bytes,
    })
}

pub fn read_sketch(path: &Path) -> CliResult<MaxSketch<f64>> {
    let file = File::open(path).at(path)?;
    MaxSketch::read_from(BufReader::new(file)).at(path)
}

pub fn write_sketch(path: &Path, sketch: &MaxSketch<f64>) -> CliResult {
    let mut w = BufWriter::new(File::create(path).at(path)?);
    sketch.write_to(&mut w).at(path)?;
    w.flush().at(path)
}

fn summary(path: &Path, sketch: &MaxSketch<f64>) -> CliResult<Record> {
    let seed = sketch
        .binding()
        .seed()
        .ok_or_else(|| CliError::data("sketch has no projection seed"))?;
    Ok(Record::new()
        .with("path", path.display().to_string())
        .with("items_seen", sketch.items_seen())
        .with("m", sketch.count())
        .with("d", sketch.dim())
        .with("seed", seed)
        .with("statistic", sketch.statistic().ok()))
}

pub fn run_sketch(args: &SketchArgs, ctx: &mut Ctx) -> CliResult {
    let seed = ctx.seed();
    let file = File::open(&args.input).at(&args.input)?;
    let run = sketch_stream(file, args.m, seed, args.d).at(&args.input)?;
    write_sketch(&args.out, &run.sketch)?;
    ctx.note(format!(
        "sketched {} vectors; state {} bytes, peak input buffer {} values",
        run.sketch.items_seen(),
        run.state_bytes,
        run.peak_buffered_values
    ));
    let record = summary(&args.out, &run.sketch)?;
    ctx.emit(&[record])
}

pub fn run_merge(args: &MergeArgs, ctx: &mut Ctx) -> CliResult {
    let mut merged = read_sketch(&args.inputs[0])?;
    for path in &args.inputs[1..] {
        let next = read_sketch(path)?;
        merged.merge_in(&next).at(path)?;
    }
    write_sketch(&args.out, &merged)?;
    let record = summary(&args.out, &merged)?;
    ctx.emit(&[record])
}
