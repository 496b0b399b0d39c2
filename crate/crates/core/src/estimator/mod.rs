//! Expected Gaussian maxima, the threshold grid, and the count estimate.

mod gaussian;
mod grid;

pub use gaussian::{
    expected_max_iid, integrate, ln_normal_cdf, max_density, normal_cdf, normal_pdf,
    GaussianMaxTable, DEFAULT_TOLERANCE,
};
pub use grid::{
    band_lower, band_upper, grid_levels, next_level, parse_grid_csv, required_m, Constants,
    Estimate, EstimatorParams, GridRow, ThresholdGrid,
};
