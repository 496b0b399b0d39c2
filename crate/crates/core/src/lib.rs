//! Estimating the number of latent clusters in a stream of unit vectors
//! from the running maxima of a few thousand Gaussian projections.
//!
//! A [`MaxSketch`] keeps `m` numbers per stream regardless of its length,
//! merges by elementwise maximum, and its mean statistic `S` grows like the
//! expected maximum of `k` independent standard normals, where `k` is the
//! number of well-separated directions in the stream. A [`ThresholdGrid`]
//! turns `S` into a count estimate with a multiplicative guarantee, and the
//! [`readout`] module learns the same map from labelled data instead.
//!
//! ```
//! use maxsketch::{EstimatorParams, GaussianMaxTable, MaxSketch, ProjectionSet, ThresholdGrid};
//! use maxsketch::streamgen::{generate_stream, ClusterSpec};
//!
//! let stream = generate_stream(&ClusterSpec::orthonormal(8, 128, 1e-4), 500, 7).unwrap();
//! let proj = ProjectionSet::<f64>::new(128, 2048, 1).unwrap();
//! let mut sketch = MaxSketch::new(&proj);
//! sketch.update_batch(&stream.vectors, &proj).unwrap();
//!
//! let params = EstimatorParams::new(500, 0.5, 0.1, 0.0, 1e-4, 2048).unwrap();
//! let grid = ThresholdGrid::build(params, &GaussianMaxTable::default()).unwrap();
//! let est = grid.estimate(sketch.statistic().unwrap()).unwrap();
//! assert!(est.k_hat >= 8);
//! ```

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod readout;
mod scalar;
pub mod sketch;
pub mod stream_io;
pub mod streamgen;
pub mod verify;

pub use error::{Error, Result};
pub use estimator::{EstimatorParams, GaussianMaxTable, ThresholdGrid};
pub use readout::{CalibrationSample, MonotoneStepFn, ReadoutKind};
pub use scalar::Scalar;
pub use sketch::{MaxSketch, ProjectionSet, UnitVector};

pub type Sketch = MaxSketch<f64>;
pub type Sketch32 = MaxSketch<f32>;
pub type Projections = ProjectionSet<f64>;
pub type Projections32 = ProjectionSet<f32>;
