//! The MaxSketch: fixed Gaussian projections and their running maxima.

mod codec;
mod projection;
mod state;

pub use codec::{SKETCH_MAGIC, SKETCH_VERSION};
pub use projection::{seeded_fingerprint, ProjectionSet, ProjectionSource};
pub use state::{
    normalize, Binding, MaxSketch, UnitVector, INGEST_CHUNK, NORM_TOLERANCE, PROJECTION_BLOCK,
};
