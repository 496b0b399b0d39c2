//! Monte Carlo and quadrature checks of the Gaussian-maxima facts the
//! estimator relies on.
//!
//! Every check is deterministic in `(inputs, seed)` and returns an
//! [`McReport`] carrying the estimate, its standard error, the claimed
//! interval and a pass flag. Monte Carlo claims are judged with a 4σ margin.
//!
//! Batches of Gaussian directions are evaluated through [`MaxSketch`]: with
//! `m` directions, slot `j` of the sketch is exactly `max_i <w_j, x_i>` for
//! trial `j`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::GaussianMaxTable;
use crate::sketch::{MaxSketch, ProjectionSet};
use crate::streamgen::{derive_seed, GeneratedStream};

/// Width of the Monte Carlo acceptance margin, in standard errors.
pub const SIGMA_SLACK: f64 = 4.0;

const TRIAL_BLOCK: usize = 2048;

/// `c_0 = (1 - e^{-1}) / (2 e^2)`.
pub fn gap_constant_c0() -> f64 {
    (1.0 - (-1.0f64).exp()) / (2.0 * 1.0f64.exp().powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    pub bound_lo: f64,
    pub bound_hi: f64,
    pub pass: bool,
    /// Check-specific diagnostics (margins, secondary statistics).
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl McReport {
    fn interval(name: &str, estimate: f64, stderr: f64, trials: u64, seed: u64, lo: f64, hi: f64) -> Self {
        let pass = estimate + SIGMA_SLACK * stderr >= lo && estimate - SIGMA_SLACK * stderr <= hi;
        let mut extra = BTreeMap::new();
        extra.insert("margin_lo".into(), estimate + SIGMA_SLACK * stderr - lo);
        extra.insert("margin_hi".into(), hi - (estimate - SIGMA_SLACK * stderr));
        Self {
            name: name.into(),
            estimate,
            stderr,
            trials,
            seed,
            bound_lo: lo,
            bound_hi: hi,
            pass,
            extra,
        }
    }

    /// Whether `value` lies within `nsigma` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, nsigma: f64) -> bool {
        (self.estimate - value).abs() <= nsigma * self.stderr
    }

    /// `{name, estimate, stderr, bound, pass, trials, seed}` plus extras.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "bound": [finite_or_null(self.bound_lo), finite_or_null(self.bound_hi)],
            "pass": self.pass,
            "trials": self.trials,
            "seed": self.seed,
            "extra": self.extra,
        })
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Default, Clone, Copy)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Per-trial maxima `max_i <w_t, x_i>` for `trials` fresh directions `w_t`;
/// trial blocks are keyed by `(seed, block)`.
fn projected_maxima(
    rows: &[f64],
    d: usize,
    trials: usize,
    seed: u64,
    mut sink: impl FnMut(usize, f64),
) -> Result<()> {
    let mut done = 0;
    let mut block = 0u64;
    while done < trials {
        let len = TRIAL_BLOCK.min(trials - done);
        let proj = ProjectionSet::<f64>::new(d, len, derive_seed(seed, block))?;
        let mut sketch = MaxSketch::new(&proj);
        sketch.update_batch(rows, &proj)?;
        for (j, v) in sketch.maxima().iter().enumerate() {
            sink(done + j, *v);
        }
        done += len;
        block += 1;
    }
    Ok(())
}

/// Monte Carlo `E_w[max_r <w, x_r>]` over unit vectors `vectors` (row-major,
/// dimension `d`).
pub fn mc_expected_max(vectors: &[f64], d: usize, trials: usize, seed: u64) -> Result<McReport> {
    if d == 0 || vectors.is_empty() || !vectors.len().is_multiple_of(d) {
        return Err(Error::input("mc_expected_max needs at least one d-dimensional vector"));
    }
    if trials < 1000 {
        return Err(Error::param("mc_expected_max needs at least 1000 trials"));
    }
    let mut acc = Moments::default();
    projected_maxima(vectors, d, trials, seed, |_, v| acc.push(v))?;
    let mut r = McReport::interval(
        "expected-max",
        acc.mean(),
        acc.stderr(),
        trials as u64,
        seed,
        f64::NEG_INFINITY,
        f64::INFINITY,
    );
    r.extra.insert("k".into(), (vectors.len() / d) as f64);
    Ok(r)
}

/// Equicorrelated family `G'_r = √(1-ρ) Z_r + √ρ Z`: checks
/// `√(1-ρ) E[max_k Z] <= E[max_r G'_r] <= √(1+ρ) E[max_k Z]`.
pub fn check_slepian(
    k: u64,
    rho: f64,
    trials: usize,
    seed: u64,
    table: &GaussianMaxTable,
) -> Result<McReport> {
    if k == 0 {
        return Err(Error::param("k must be >= 1"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::param(format!("rho must be in [0, 1), got {rho}")));
    }
    if trials < 2 {
        return Err(Error::param("need at least 2 trials"));
    }
    let e = table.get(k)?;
    let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Moments::default();
    for _ in 0..trials {
        let common: f64 = rng.sample(StandardNormal);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..k {
            let z: f64 = rng.sample(StandardNormal);
            best = best.max(a * z + b * common);
        }
        acc.push(best);
    }
    let mut r = McReport::interval(
        "slepian",
        acc.mean(),
        acc.stderr(),
        trials as u64,
        seed,
        (1.0 - rho).sqrt() * e,
        (1.0 + rho).sqrt() * e,
    );
    r.extra.insert("k".into(), k as f64);
    r.extra.insert("rho".into(), rho);
    r.extra.insert("expected_max_iid".into(), e);
    Ok(r)
}

/// How the two expectations in the perturbation check are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// One direction per trial feeds both maxima.
    CommonRandomNumbers,
    /// Stream and centers see independent directions.
    Independent,
}

/// `|E[max_i <w, x̃_i>] - E[max_r <w, x^(r)>]| <= √(2 η ln n)`.
pub fn check_perturbation(stream: &GeneratedStream, trials: usize, seed: u64) -> Result<McReport> {
    check_perturbation_with(stream, trials, seed, Pairing::CommonRandomNumbers)
}

pub fn check_perturbation_with(
    stream: &GeneratedStream,
    trials: usize,
    seed: u64,
    pairing: Pairing,
) -> Result<McReport> {
    if trials < 2 {
        return Err(Error::param("need at least 2 trials"));
    }
    let d = stream.dim();
    let n = stream.len();
    let mut observed = vec![0.0; trials];
    projected_maxima(&stream.vectors, d, trials, seed, |j, v| observed[j] = v)?;
    let center_seed = match pairing {
        Pairing::CommonRandomNumbers => seed,
        Pairing::Independent => derive_seed(seed, u64::MAX),
    };
    let mut acc = Moments::default();
    let mut exact_zero = true;
    projected_maxima(&stream.centers.centers, d, trials, center_seed, |j, v| {
        let diff = observed[j] - v;
        exact_zero &= diff == 0.0;
        acc.push(diff);
    })?;
    let stderr = acc.stderr();
    let bound = (2.0 * stream.spec.eta * (n.max(1) as f64).ln()).sqrt();
    let mut r = McReport::interval(
        "perturbation",
        acc.mean(),
        stderr,
        trials as u64,
        seed,
        -bound,
        bound,
    );
    r.extra.insert("bound".into(), bound);
    r.extra.insert("eta".into(), stream.spec.eta);
    r.extra.insert("n".into(), n as f64);
    r.extra.insert("all_trials_zero".into(), if exact_zero { 1.0 } else { 0.0 });
    Ok(r)
}

/// `⌈(1+ε) k⌉` without forcing growth, so degenerate ceilings stay visible.
fn ceil_scaled(k: u64, eps: f64) -> u64 {
    let v = (1.0 + eps) * k as f64;
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 * v {
        nearest as u64
    } else {
        v.ceil() as u64
    }
}

/// `Δ₁(k, ε) = E[max_{⌈(1+ε)k⌉} Z] - E[max_k Z] >= (c_0/20) ε / √(ln k)`,
/// both expectations by quadrature.
pub fn check_gap(k: u64, eps: f64, table: &GaussianMaxTable) -> Result<McReport> {
    if k < 2 {
        return Err(Error::param("k must be >= 2"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param(format!("eps must be in (0, 1], got {eps}")));
    }
    let k_next = ceil_scaled(k, eps);
    let delta1 = table.get(k_next)? - table.get(k)?;
    let ln_k = (k as f64).ln();
    let bound = gap_constant_c0() / 20.0 * eps / ln_k.sqrt();
    let vacuous = k_next <= k;
    let mut extra = BTreeMap::new();
    extra.insert("k_next".into(), k_next as f64);
    extra.insert("ratio".into(), delta1 * ln_k.sqrt() / eps);
    extra.insert("vacuous".into(), if vacuous { 1.0 } else { 0.0 });
    extra.insert("margin_lo".into(), delta1 - bound);
    Ok(McReport {
        name: "gap".into(),
        estimate: delta1,
        stderr: 0.0,
        trials: 0,
        seed: 0,
        bound_lo: bound,
        bound_hi: f64::INFINITY,
        pass: vacuous || delta1 >= bound,
        extra,
    })
}

/// Spread of `S` over independent projection draws on a fixed stream.
///
/// Checks that the empirical standard deviation is at most `1.5/√m` and
/// that `Pr(|S - E S| >= 3/√m)` stays below `2 e^{-9/2}` plus a 4σ binomial
/// allowance, with the sample mean standing in for `E S`.
pub fn check_concentration(
    vectors: &[f64],
    d: usize,
    m: usize,
    redraws: usize,
    seed: u64,
) -> Result<McReport> {
    if redraws < 100 {
        return Err(Error::param("check_concentration needs at least 100 redraws"));
    }
    if d == 0 || vectors.is_empty() || !vectors.len().is_multiple_of(d) {
        return Err(Error::input("need at least one d-dimensional vector"));
    }
    let mut stats = Vec::with_capacity(redraws);
    for r in 0..redraws {
        let proj = ProjectionSet::<f64>::new(d, m, derive_seed(seed, r as u64))?;
        let mut sketch = MaxSketch::new(&proj);
        sketch.update_batch(vectors, &proj)?;
        stats.push(sketch.statistic()?);
    }
    let mut acc = Moments::default();
    stats.iter().for_each(|&s| acc.push(s));
    let std = acc.std_dev();
    let t = 3.0 / (m as f64).sqrt();
    let exceed = stats.iter().filter(|&&s| (s - acc.mean()).abs() >= t).count() as f64
        / redraws as f64;
    let tail = 2.0 * (-4.5f64).exp();
    let tail_limit = tail + SIGMA_SLACK * (tail * (1.0 - tail) / redraws as f64).sqrt();
    let std_bound = 1.5 / (m as f64).sqrt();
    let mut extra = BTreeMap::new();
    extra.insert("m".into(), m as f64);
    extra.insert("mean_statistic".into(), acc.mean());
    extra.insert("exceedance".into(), exceed);
    extra.insert("exceedance_limit".into(), tail_limit);
    extra.insert("margin_std".into(), std_bound - std);
    Ok(McReport {
        name: "concentration".into(),
        estimate: std,
        // normal-theory standard error of a sample standard deviation
        stderr: std / (2.0 * (redraws as f64 - 1.0)).sqrt(),
        trials: redraws as u64,
        seed,
        bound_lo: 0.0,
        bound_hi: std_bound,
        pass: std <= std_bound && exceed <= tail_limit,
        extra,
    })
}
