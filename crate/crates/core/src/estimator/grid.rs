use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream_io::fmt_real;

use super::gaussian::GaussianMaxTable;

/// Absolute constants the guarantee is stated with but never pinned
/// numerically. Defaults are calibrated so desk-scale experiments pass;
/// grid soundness is what actually gates an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// `ρ <= c_rho ε / ln n`
    pub c_rho: f64,
    /// `η <= c_eta ε² / (ln n)²`
    pub c_eta: f64,
    /// Multiplier in the projection-count bound.
    pub c_m: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_rho: 0.05,
            c_eta: 0.01,
            c_m: 8.0,
        }
    }
}

/// Parameters of the threshold estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    /// Upper bound on the stream length.
    pub n: u64,
    pub eps: f64,
    pub delta: f64,
    /// Assumed bound on `|<x^(r), x^(s)>|` between distinct centers.
    pub rho: f64,
    /// Assumed within-cluster slack: `<x_i, center> >= 1 - η/2`.
    pub eta: f64,
    pub m: usize,
    #[serde(default)]
    pub constants: Constants,
}

impl EstimatorParams {
    pub fn new(n: u64, eps: f64, delta: f64, rho: f64, eta: f64, m: usize) -> Result<Self> {
        let p = Self {
            n,
            eps,
            delta,
            rho,
            eta,
            m,
            constants: Constants::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::param(format!("eps must be in (0, 1/2], got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::param(format!("rho must be in [0, 1), got {}", self.rho)));
        }
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::param(format!("eta must be in [0, 1), got {}", self.eta)));
        }
        if self.m == 0 {
            return Err(Error::param("m must be >= 1"));
        }
        Ok(())
    }

    fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// `√(2 η ln n)`, the perturbation allowance on every band.
    pub fn perturbation_allowance(&self) -> f64 {
        (2.0 * self.eta * self.ln_n()).sqrt()
    }

    /// Conditions under which the `(1+ε)` guarantee is claimed. Violations
    /// are reported, not rejected.
    pub fn condition_warnings(&self) -> Vec<String> {
        let ln_n = self.ln_n();
        let mut out = Vec::new();
        let rho_max = self.constants.c_rho * self.eps / ln_n;
        if self.rho > rho_max {
            out.push(format!(
                "rho = {} exceeds c_rho*eps/ln n = {rho_max:.3e}; guarantee not covered",
                self.rho
            ));
        }
        let eta_max = self.constants.c_eta * self.eps * self.eps / (ln_n * ln_n);
        if self.eta > eta_max {
            out.push(format!(
                "eta = {} exceeds c_eta*eps^2/(ln n)^2 = {eta_max:.3e}; guarantee not covered",
                self.eta
            ));
        }
        let m_req = required_m(self.n, self.eps, self.delta, self.constants.c_m);
        if (self.m as u64) < m_req {
            out.push(format!("m = {} is below the required {m_req}", self.m));
        }
        out
    }
}

/// `U(t) = √(1+ρ) E[max_t Z] + √(2η ln n)`.
pub fn band_upper(t: u64, params: &EstimatorParams, table: &GaussianMaxTable) -> Result<f64> {
    let e = table.get(t)?;
    Ok((1.0 + params.rho).sqrt() * e + params.perturbation_allowance())
}

/// `L(t) = √(1-ρ) E[max_t Z] - √(2η ln n)`.
pub fn band_lower(t: u64, params: &EstimatorParams, table: &GaussianMaxTable) -> Result<f64> {
    let e = table.get(t)?;
    Ok((1.0 - params.rho).sqrt() * e - params.perturbation_allowance())
}

/// `⌈(1+ε) t⌉`, robust to `(1+ε) t` landing a rounding error above an
/// integer, and always strictly greater than `t`.
pub fn next_level(t: u64, eps: f64) -> u64 {
    let v = (1.0 + eps) * t as f64;
    let nearest = v.round();
    let c = if (v - nearest).abs() <= 1e-9 * v {
        nearest
    } else {
        v.ceil()
    };
    (c as u64).max(t + 1)
}

/// Levels `t_0 = 2, t_{r+1} = ⌈(1+ε) t_r⌉`, stopping at the first level
/// `>= n`, which is clamped to `n`.
pub fn grid_levels(n: u64, eps: f64) -> Vec<u64> {
    let mut levels = vec![2u64.min(n)];
    while *levels.last().unwrap() < n {
        let next = next_level(*levels.last().unwrap(), eps);
        levels.push(next.min(n));
    }
    levels
}

/// Geometric grid with data-independent thresholds.
///
/// Threshold `θ_r` separates `k <= t_r` from `k >= t'_r = ⌈(1+ε) t_r⌉`:
/// `θ_r = (U(t_r) + L(t'_r)) / 2`. Away from the top of the grid
/// `t'_r = t_{r+1}`; only the last level differs, where `t_R` has been
/// clamped to `n` but the separation partner is not.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdGrid {
    levels: Vec<u64>,
    partners: Vec<u64>,
    thetas: Vec<f64>,
    uppers: Vec<f64>,
    lowers: Vec<f64>,
    params: EstimatorParams,
    warnings: Vec<String>,
}

/// Result of one threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub k_hat: u64,
    /// Index `r` of the first threshold with `S <= θ_r`; `None` when the
    /// statistic clears every threshold.
    pub fired: Option<usize>,
    pub statistic: f64,
}

impl ThresholdGrid {
    pub fn build(params: EstimatorParams, table: &GaussianMaxTable) -> Result<Self> {
        params.validate()?;
        let levels = grid_levels(params.n, params.eps);
        let r_len = levels.len() - 1;
        let mut partners = Vec::with_capacity(r_len);
        let mut thetas = Vec::with_capacity(r_len);
        let mut uppers = Vec::with_capacity(r_len);
        let mut lowers = Vec::with_capacity(r_len);
        for (r, &t) in levels[..r_len].iter().enumerate() {
            let partner = next_level(t, params.eps);
            let u = band_upper(t, &params, table)?;
            let l = band_lower(partner, &params, table)?;
            let gap = l - u;
            if !(gap > 0.0) {
                return Err(Error::GridUnsound {
                    level: r,
                    t,
                    t_next: partner,
                    gap,
                });
            }
            partners.push(partner);
            uppers.push(u);
            lowers.push(l);
            thetas.push(0.5 * (u + l));
        }
        debug_assert!(thetas.windows(2).all(|w| w[0] < w[1]));
        if let Some(r) = thetas.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::GridUnsound {
                level: r + 1,
                t: levels[r + 1],
                t_next: partners[r + 1],
                gap: thetas[r + 1] - thetas[r],
            });
        }
        Ok(Self {
            levels,
            partners,
            thetas,
            uppers,
            lowers,
            warnings: params.condition_warnings(),
            params,
        })
    }

    /// `t_0..t_R`.
    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    /// `θ_0..θ_{R-1}`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thetas
    }

    /// `t'_r` paired with each threshold.
    pub fn partners(&self) -> &[u64] {
        &self.partners
    }

    pub fn upper_bands(&self) -> &[f64] {
        &self.uppers
    }

    pub fn lower_bands(&self) -> &[f64] {
        &self.lowers
    }

    /// Number of thresholds `R`.
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn params(&self) -> &EstimatorParams {
        &self.params
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Smallest `L(t'_r) - U(t_r)` over the grid.
    pub fn min_gap(&self) -> Option<f64> {
        self.lowers
            .iter()
            .zip(&self.uppers)
            .map(|(l, u)| l - u)
            .reduce(f64::min)
    }

    /// `k̂ = t_{r+1}` for the first `r` with `S <= θ_r`, else `t_R`.
    pub fn estimate(&self, statistic: f64) -> Result<Estimate> {
        if statistic.is_nan() {
            return Err(Error::input("statistic is NaN"));
        }
        let r = self.thetas.partition_point(|&theta| statistic > theta);
        let (k_hat, fired) = if r < self.thetas.len() {
            (self.levels[r + 1], Some(r))
        } else {
            (*self.levels.last().unwrap(), None)
        };
        Ok(Estimate {
            k_hat,
            fired,
            statistic,
        })
    }

    /// Audit table, header `r,t_r,theta_r,U_tr,L_tr1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,t_r,theta_r,U_tr,L_tr1\n");
        for r in 0..self.thetas.len() {
            out.push_str(&format!(
                "{r},{},{},{},{}\n",
                self.levels[r],
                fmt_real(self.thetas[r]),
                fmt_real(self.uppers[r]),
                fmt_real(self.lowers[r]),
            ));
        }
        out
    }
}

/// Parsed audit CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub r: usize,
    pub t: u64,
    pub theta: f64,
    pub upper: f64,
    pub lower_next: f64,
}

/// Reads back [`ThresholdGrid::to_csv`] output.
pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut lines = text.lines();
    let mut offset = 0u64;
    match lines.next() {
        Some(h) if h.trim() == "r,t_r,theta_r,U_tr,L_tr1" => offset += h.len() as u64 + 1,
        _ => return Err(Error::format(0, "missing grid CSV header")),
    }
    let mut rows = Vec::new();
    for line in lines {
        let bad = || Error::format(offset, format!("malformed grid row {line:?}"));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        rows.push(GridRow {
            r: f[0].parse().map_err(|_| bad())?,
            t: f[1].parse().map_err(|_| bad())?,
            theta: f[2].parse().map_err(|_| bad())?,
            upper: f[3].parse().map_err(|_| bad())?,
            lower_next: f[4].parse().map_err(|_| bad())?,
        });
        offset += line.len() as u64 + 1;
    }
    Ok(rows)
}

/// Projection count `⌈C ln n ln(2R/δ) / ε²⌉`, with `R` the number of grid
/// thresholds for `(n, ε)` (at least 1).
pub fn required_m(n: u64, eps: f64, delta: f64, c_m: f64) -> u64 {
    let n = n.max(2);
    let r = (grid_levels(n, eps).len() - 1).max(1) as f64;
    let v = c_m * (n as f64).ln() * (2.0 * r / delta).ln() / (eps * eps);
    v.ceil().max(1.0) as u64
}
