use crate::error::{Error, Result};
use crate::estimator::next_level;

use super::step::{check_samples, CalibrationSample, MonotoneStepFn, ReadoutKind};

/// `L_0 = 1, L_{t+1} = ⌈(1+ε) L_t⌉`, up to the first level `>= max_k`.
pub fn multiplicative_levels(max_k: u64, eps: f64) -> Vec<u64> {
    let mut levels = vec![1u64];
    while *levels.last().unwrap() < max_k {
        levels.push(next_level(*levels.last().unwrap(), eps));
    }
    levels
}

/// Learns one split per multiplicative level.
///
/// Split `τ_t` separates samples with `k <= L_t` (expected below) from
/// samples with `k >= L_{t+1}` (expected above) by minimizing the number of
/// misplaced samples. Candidates are midpoints between consecutive distinct
/// statistics over the whole sample set, plus one point below and one above
/// all of them; among equally good candidates the smallest wins. Splits that
/// come out non-increasing are pushed just above their predecessor.
pub fn learn_thresholds(samples: &[CalibrationSample], eps: f64) -> Result<MonotoneStepFn> {
    check_samples(samples)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    let k_min = samples.iter().map(|c| c.k).min().unwrap();
    let k_max = samples.iter().map(|c| c.k).max().unwrap();
    if k_min == k_max {
        return Err(Error::input(format!(
            "all calibration samples have k = {k_min}; nothing to separate"
        )));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.s.total_cmp(&b.s));
    // group boundaries: sorted[groups[g]..groups[g+1]] share one statistic
    let mut groups = vec![0usize];
    for i in 1..sorted.len() {
        if sorted[i].s != sorted[i - 1].s {
            groups.push(i);
        }
    }
    groups.push(sorted.len());
    let distinct: Vec<f64> = groups[..groups.len() - 1].iter().map(|&g| sorted[g].s).collect();
    let mut candidates = Vec::with_capacity(distinct.len() + 1);
    candidates.push(distinct[0] - 1.0);
    for w in distinct.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(distinct[distinct.len() - 1] + 1.0);

    let levels = multiplicative_levels(k_max, eps);
    let mut breakpoints = Vec::with_capacity(levels.len() - 1);
    for t in 0..levels.len() - 1 {
        let (low, high) = (levels[t], levels[t + 1]);
        // candidate 0 puts every sample above the split
        let mut errors = sorted.iter().filter(|c| c.k <= low).count() as i64;
        let mut best = (errors, 0usize);
        for g in 0..distinct.len() {
            for c in &sorted[groups[g]..groups[g + 1]] {
                if c.k <= low {
                    errors -= 1;
                } else if c.k >= high {
                    errors += 1;
                }
            }
            if errors < best.0 {
                best = (errors, g + 1);
            }
        }
        let mut tau = candidates[best.1];
        if let Some(&prev) = breakpoints.last() {
            if tau <= prev {
                tau = f64::next_up(prev);
            }
        }
        breakpoints.push(tau);
    }

    let out_levels = levels[1..].iter().map(|&l| l as f64).collect();
    MonotoneStepFn::new(ReadoutKind::ThresholdGrid, breakpoints, out_levels, Some(eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn training_error(f: &MonotoneStepFn, samples: &[CalibrationSample], eps: f64) -> usize {
        let levels = multiplicative_levels(samples.iter().map(|c| c.k).max().unwrap(), eps);
        let mut err = 0;
        for (t, tau) in f.breakpoints.iter().enumerate() {
            for c in samples {
                if (c.k <= levels[t] && c.s >= *tau) || (c.k >= levels[t + 1] && c.s < *tau) {
                    err += 1;
                }
            }
        }
        err
    }

    #[test]
    fn level_recursion() {
        assert_eq!(multiplicative_levels(8, 1.0), vec![1, 2, 4, 8]);
        assert_eq!(multiplicative_levels(64, 0.5), vec![1, 2, 3, 5, 8, 12, 18, 27, 41, 62, 93]);
    }

    #[test]
    fn doubling_levels_give_three_thresholds() {
        let samples: Vec<_> = [1u64, 2, 4, 8]
            .iter()
            .flat_map(|&k| (0..5).map(move |i| CalibrationSample::new(k as f64 + 0.01 * i as f64, k)))
            .collect();
        let f = learn_thresholds(&samples, 1.0).unwrap();
        assert_eq!(f.breakpoints.len(), 3);
        assert_eq!(f.levels, vec![2.0, 4.0, 8.0]);
        assert_eq!(training_error(&f, &samples, 1.0), 0);
        for c in &samples {
            let p = f.apply(c.s).unwrap();
            assert!(p >= c.k || c.k == 1, "k={} -> {p}", c.k);
        }
        assert_eq!(f.apply(4.02).unwrap(), 4);
        assert_eq!(f.apply(8.0).unwrap(), 8);
    }

    #[test]
    fn separable_levels_zero_error_and_smallest_split() {
        let samples = vec![
            CalibrationSample::new(0.10, 2),
            CalibrationSample::new(0.12, 2),
            CalibrationSample::new(0.30, 3),
            CalibrationSample::new(0.33, 3),
            CalibrationSample::new(0.60, 5),
        ];
        let f = learn_thresholds(&samples, 0.5).unwrap();
        assert_eq!(training_error(&f, &samples, 0.5), 0);
        // τ_1 separates k <= 2 from k >= 3: smallest zero-error midpoint
        assert!((f.breakpoints[1] - 0.21).abs() < 1e-12);
        assert_eq!(f.apply(0.11).unwrap(), 2);
        assert_eq!(f.apply(0.31).unwrap(), 3);
        assert_eq!(f.apply(0.61).unwrap(), 5);
    }

    #[test]
    fn crossing_splits_are_repaired() {
        // k=3 statistics below k=2 ones: the raw splits invert
        let samples = vec![
            CalibrationSample::new(0.5, 2),
            CalibrationSample::new(0.1, 3),
            CalibrationSample::new(0.9, 5),
        ];
        let f = learn_thresholds(&samples, 0.5).unwrap();
        assert!(f.breakpoints.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn degenerate_samples_rejected() {
        let samples = vec![CalibrationSample::new(0.1, 4), CalibrationSample::new(0.2, 4)];
        assert!(matches!(learn_thresholds(&samples, 0.5), Err(Error::InvalidInput(_))));
        assert!(learn_thresholds(&[], 0.5).is_err());
    }
}
