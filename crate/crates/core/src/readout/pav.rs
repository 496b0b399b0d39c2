use crate::error::Result;
use crate::scalar::Scalar;

use super::step::{check_samples, CalibrationSample, MonotoneStepFn, ReadoutKind};

/// A pooled run of consecutive inputs sharing one fitted value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block<T> {
    pub start: usize,
    pub len: usize,
    pub weight: T,
    pub value: T,
}

/// Weighted least-squares nondecreasing fit of `values` (already in
/// predictor order). Adjacent blocks are merged while they violate
/// monotonicity; the result has strictly increasing block values.
pub fn pool_adjacent_violators<T: Scalar>(values: &[T], weights: &[T]) -> Vec<Block<T>> {
    assert_eq!(values.len(), weights.len(), "values and weights differ in length");
    let mut blocks: Vec<Block<T>> = Vec::with_capacity(values.len());
    for (i, (&v, &w)) in values.iter().zip(weights).enumerate() {
        let mut cur = Block {
            start: i,
            len: 1,
            weight: w,
            value: v,
        };
        while let Some(prev) = blocks.last() {
            if prev.value < cur.value {
                break;
            }
            let prev = blocks.pop().unwrap();
            let weight = prev.weight + cur.weight;
            cur = Block {
                start: prev.start,
                len: prev.len + cur.len,
                weight,
                value: (prev.value * prev.weight + cur.value * cur.weight) / weight,
            };
        }
        blocks.push(cur);
    }
    blocks
}

/// Isotonic regression of `k` on `s`.
///
/// Samples with equal `s` are averaged first, so the fit is a function of
/// `s`. The step function jumps at the smallest `s` of each pooled block.
pub fn pav_fit(samples: &[CalibrationSample]) -> Result<MonotoneStepFn> {
    check_samples(samples)?;
    let mut sorted: Vec<CalibrationSample> = samples.to_vec();
    sorted.sort_by(|a, b| a.s.total_cmp(&b.s));

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for c in &sorted {
        match xs.last() {
            Some(&x) if x == c.s => {
                let last = ys.len() - 1;
                ys[last] += c.k as f64;
                ws[last] += 1.0;
            }
            _ => {
                xs.push(c.s);
                ys.push(c.k as f64);
                ws.push(1.0);
            }
        }
    }
    for (y, w) in ys.iter_mut().zip(&ws) {
        *y /= *w;
    }

    let blocks = pool_adjacent_violators(&ys, &ws);
    let breakpoints = blocks.iter().map(|b| xs[b.start]).collect();
    let levels = blocks.iter().map(|b| b.value).collect();
    MonotoneStepFn::new(ReadoutKind::Isotonic, breakpoints, levels, None)
}
