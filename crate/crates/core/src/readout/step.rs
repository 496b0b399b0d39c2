use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One calibration point: a sketch statistic and the true distinct count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub s: f64,
    pub k: u64,
}

impl CalibrationSample {
    pub fn new(s: f64, k: u64) -> Self {
        Self { s, k }
    }
}

pub(crate) fn check_samples(samples: &[CalibrationSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::input("no calibration samples"));
    }
    for (i, c) in samples.iter().enumerate() {
        if !c.s.is_finite() {
            return Err(Error::input(format!("sample {i}: statistic is not finite")));
        }
        if c.k == 0 {
            return Err(Error::input(format!("sample {i}: count must be >= 1")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutKind {
    ThresholdGrid,
    Isotonic,
}

/// Projection set a readout was calibrated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionTag {
    pub seed: u64,
    pub m: usize,
    pub d: usize,
}

/// Nondecreasing step function `S -> count`.
///
/// With breakpoints `τ_0 < ... < τ_{T-1}` and levels `L_1 <= ... <= L_T`,
/// `f(s) = L_{t+1}` on `[τ_t, τ_{t+1})` (closed on the left), `L_T` from
/// `τ_{T-1}` on, and `L_1` below `τ_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneStepFn {
    pub kind: ReadoutKind,
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionTag>,
}

impl MonotoneStepFn {
    pub(crate) fn new(
        kind: ReadoutKind,
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
        eps: Option<f64>,
    ) -> Result<Self> {
        let f = Self {
            kind,
            breakpoints,
            levels,
            eps,
            projection: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_projection(mut self, tag: ProjectionTag) -> Self {
        self.projection = Some(tag);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels.len() != self.breakpoints.len() {
            return Err(Error::input(format!(
                "readout needs as many levels as breakpoints (>= 1), got {} and {}",
                self.levels.len(),
                self.breakpoints.len()
            )));
        }
        if self.breakpoints.iter().chain(&self.levels).any(|v| !v.is_finite()) {
            return Err(Error::input("readout contains non-finite values"));
        }
        if !self.breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input("readout breakpoints must be strictly increasing"));
        }
        if !self.levels.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::input("readout levels must be nondecreasing"));
        }
        Ok(())
    }

    /// Unrounded value of the step function.
    pub fn evaluate(&self, s: f64) -> f64 {
        let above = self.breakpoints.partition_point(|&tau| tau <= s);
        self.levels[above.saturating_sub(1)]
    }

    /// Count prediction: levels verbatim for the threshold grid, nearest
    /// integer (at least 1) for the isotonic fit.
    pub fn apply(&self, s: f64) -> Result<u64> {
        if s.is_nan() {
            return Err(Error::input("statistic is NaN"));
        }
        let v = self.evaluate(s);
        Ok(match self.kind {
            ReadoutKind::ThresholdGrid => v as u64,
            ReadoutKind::Isotonic => v.round().max(1.0) as u64,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::input(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| Error::Format {
            offset: 0,
            message: format!("readout JSON: {e}"),
        })?;
        f.validate()?;
        Ok(f)
    }
}
