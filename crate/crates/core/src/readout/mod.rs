//! Monotone readouts from the sketch statistic `S` to a count.

mod pav;
mod step;
mod thresholds;

pub use pav::{pav_fit, pool_adjacent_violators, Block};
pub use step::{CalibrationSample, MonotoneStepFn, ProjectionTag, ReadoutKind};
pub use thresholds::{learn_thresholds, multiplicative_levels};
