//! Expected maximum of `k` i.i.d. standard normals,
//! `E[max_k Z] = ∫ z k φ(z) Φ(z)^{k-1} dz`, by adaptive Gauss–Kronrod
//! quadrature on `[-12, 12]`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::RwLock;

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const LOWER: f64 = -12.0;
const UPPER: f64 = 12.0;
const PANELS: usize = 48;
const MAX_DEPTH: u32 = 40;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `ln Φ(z)`, accurate in both tails.
pub fn ln_normal_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else {
        (0.5 * libm::erfc(-z * FRAC_1_SQRT_2)).ln()
    }
}

/// Density of the maximum of `k` i.i.d. standard normals.
pub fn max_density(k: u64, z: f64) -> f64 {
    let kf = k as f64;
    let tail = if k == 1 {
        1.0
    } else {
        ((kf - 1.0) * ln_normal_cdf(z)).exp()
    };
    kf * normal_pdf(z) * tail
}

/// `E[max of k i.i.d. N(0,1)]` to absolute tolerance `tol`.
pub fn expected_max_iid(k: u64, tol: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("quadrature tolerance must be positive"));
    }
    if k == 1 {
        return Ok(0.0);
    }
    Ok(integrate(|z| z * max_density(k, z), LOWER, UPPER, tol))
}

/// Integral of `f` over `[a, b]`: fixed panels, each refined adaptively to
/// its share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let width = (b - a) / PANELS as f64;
    let local = tol / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == PANELS { b } else { lo + width };
            adaptive(&f, lo, hi, local, MAX_DEPTH)
        })
        .sum()
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (kronrod, gauss) = gauss_kronrod_15(f, a, b);
    if (kronrod - gauss).abs() <= tol || depth == 0 {
        return kronrod;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, 0.5 * tol, depth - 1) + adaptive(f, mid, b, 0.5 * tol, depth - 1)
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, gauss * half)
}

/// Memoized `k -> E[max_k Z]`, safe for concurrent lookups.
#[derive(Debug)]
pub struct GaussianMaxTable {
    tol: f64,
    entries: RwLock<HashMap<u64, f64>>,
}

impl Default for GaussianMaxTable {
    fn default() -> Self {
        Self::new(DEFAULT_TOLERANCE).expect("default tolerance is positive")
    }
}

impl GaussianMaxTable {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::param("quadrature tolerance must be positive"));
        }
        Ok(Self {
            tol,
            entries: RwLock::new(HashMap::new()),
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn get(&self, k: u64) -> Result<f64> {
        if let Some(v) = self.entries.read().expect("table lock poisoned").get(&k) {
            return Ok(*v);
        }
        let v = expected_max_iid(k, self.tol)?;
        self.entries
            .write()
            .expect("table lock poisoned")
            .insert(k, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("table lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
