use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Where the projection directions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionSource {
    /// Regenerable from `(seed, m, d)`.
    Seeded(u64),
    /// Supplied verbatim by the caller; cannot be regenerated or serialized.
    Explicit,
}

#[derive(Debug, Clone)]
enum Storage<T> {
    Materialized(Vec<T>),
    /// Rows are regenerated from the seed whenever they are needed.
    OnTheFly,
}

/// The `m` fixed Gaussian directions `w_1..w_m` in `R^d`.
///
/// Row `j` is drawn from a ChaCha8 stream keyed by `(seed, j)`, so any single
/// direction can be recomputed without generating the others. This is what
/// makes the on-the-fly mode possible and keeps materialized and regenerated
/// projections bit-identical.
#[derive(Debug, Clone)]
pub struct ProjectionSet<T: Scalar = f64> {
    source: ProjectionSource,
    dim: usize,
    count: usize,
    fingerprint: u64,
    storage: Storage<T>,
}

impl<T: Scalar> ProjectionSet<T> {
    /// Draws and stores the full `m x d` matrix.
    pub fn new(dim: usize, count: usize, seed: u64) -> Result<Self> {
        check_shape(dim, count)?;
        let mut data = Vec::with_capacity(dim * count);
        for j in 0..count {
            extend_row(&mut data, seed, j, dim);
        }
        Ok(Self {
            source: ProjectionSource::Seeded(seed),
            dim,
            count,
            fingerprint: seeded_fingerprint(seed, count, dim),
            storage: Storage::Materialized(data),
        })
    }

    /// Same directions as [`ProjectionSet::new`], but nothing is stored: rows
    /// are regenerated in blocks during every update. Memory stays `O(d)` per
    /// block at the cost of redoing the Gaussian draws.
    pub fn on_the_fly(dim: usize, count: usize, seed: u64) -> Result<Self> {
        check_shape(dim, count)?;
        Ok(Self {
            source: ProjectionSource::Seeded(seed),
            dim,
            count,
            fingerprint: seeded_fingerprint(seed, count, dim),
            storage: Storage::OnTheFly,
        })
    }

    /// Wraps a caller-supplied row-major `count x dim` matrix.
    pub fn from_rows(dim: usize, count: usize, rows: Vec<T>) -> Result<Self> {
        check_shape(dim, count)?;
        if rows.len() != dim * count {
            return Err(Error::Dimension {
                expected: dim * count,
                actual: rows.len(),
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("projection entries must be finite"));
        }
        let fingerprint = explicit_fingerprint(dim, count, &rows);
        Ok(Self {
            source: ProjectionSource::Explicit,
            dim,
            count,
            fingerprint,
            storage: Storage::Materialized(rows),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn source(&self) -> ProjectionSource {
        self.source
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            ProjectionSource::Seeded(s) => Some(s),
            ProjectionSource::Explicit => None,
        }
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.storage, Storage::Materialized(_))
    }

    /// Direction `w_j`.
    pub fn row(&self, j: usize) -> Cow<'_, [T]> {
        self.rows(j, 1)
    }

    /// Rows `start..start + len`, row-major.
    pub fn rows(&self, start: usize, len: usize) -> Cow<'_, [T]> {
        assert!(start + len <= self.count, "projection row range out of bounds");
        match &self.storage {
            Storage::Materialized(data) => {
                Cow::Borrowed(&data[start * self.dim..(start + len) * self.dim])
            }
            Storage::OnTheFly => {
                let seed = match self.source {
                    ProjectionSource::Seeded(s) => s,
                    ProjectionSource::Explicit => unreachable!("explicit sets are materialized"),
                };
                let mut data = Vec::with_capacity(len * self.dim);
                for j in start..start + len {
                    extend_row(&mut data, seed, j, self.dim);
                }
                Cow::Owned(data)
            }
        }
    }

    /// Materialized matrix if there is one.
    pub fn as_slice(&self) -> Option<&[T]> {
        match &self.storage {
            Storage::Materialized(data) => Some(data),
            Storage::OnTheFly => None,
        }
    }
}

fn check_shape(dim: usize, count: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::param("projection dimension d must be >= 1"));
    }
    if count == 0 {
        return Err(Error::param("projection count m must be >= 1"));
    }
    Ok(())
}

fn extend_row<T: Scalar>(out: &mut Vec<T>, seed: u64, row: usize, dim: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    out.extend((0..dim).map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal))));
}

/// Fingerprint of a seeded projection set. Depends only on `(seed, m, d)`,
/// which is exactly what a serialized sketch records.
pub fn seeded_fingerprint(seed: u64, count: usize, dim: usize) -> u64 {
    let mut h = mix(0x4d58_534b_5345_4544); // "MXSKSEED"
    h = mix(h ^ seed);
    h = mix(h ^ count as u64);
    mix(h ^ dim as u64)
}

fn explicit_fingerprint<T: Scalar>(dim: usize, count: usize, rows: &[T]) -> u64 {
    let mut h = mix(0x4d58_534b_4558_504c); // "MXSKEXPL"
    h = mix(h ^ count as u64);
    h = mix(h ^ dim as u64);
    for v in rows {
        h = mix(h ^ v.to_f64_lossless().to_bits());
    }
    h
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = ProjectionSet::<f64>::new(3, 2, 42).unwrap();
        let b = ProjectionSet::<f64>::new(3, 2, 42).unwrap();
        assert_eq!(a.as_slice().unwrap(), b.as_slice().unwrap());
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.as_slice().unwrap().len(), 6);
    }

    #[test]
    fn rows_are_independently_recomputable() {
        let full = ProjectionSet::<f64>::new(5, 10, 9).unwrap();
        let lazy = ProjectionSet::<f64>::on_the_fly(5, 10, 9).unwrap();
        for j in 0..10 {
            assert_eq!(full.row(j), lazy.row(j));
        }
        assert_eq!(full.rows(3, 4), lazy.rows(3, 4));
        assert_eq!(full.fingerprint(), lazy.fingerprint());
    }

    #[test]
    fn sample_mean_near_zero() {
        // 4 sigma of the mean of m*d standard normals.
        let p = ProjectionSet::<f64>::new(8, 4096, 7).unwrap();
        let data = p.as_slice().unwrap();
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        assert!(mean.abs() <= 4.0 / ((4096.0f64 * 8.0).sqrt()), "mean = {mean}");
        let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / data.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "var = {var}");
    }

    #[test]
    fn zero_shape_rejected() {
        assert!(matches!(
            ProjectionSet::<f64>::new(0, 1, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            ProjectionSet::<f64>::new(1, 0, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn f32_rows_are_rounded_f64_rows() {
        let p64 = ProjectionSet::<f64>::new(4, 3, 1).unwrap();
        let p32 = ProjectionSet::<f32>::new(4, 3, 1).unwrap();
        for (a, b) in p64.as_slice().unwrap().iter().zip(p32.as_slice().unwrap()) {
            assert_eq!(*a as f32, *b);
        }
    }

    #[test]
    fn distinct_seeds_distinct_fingerprints() {
        assert_ne!(seeded_fingerprint(1, 4, 4), seeded_fingerprint(2, 4, 4));
        assert_ne!(seeded_fingerprint(1, 4, 8), seeded_fingerprint(1, 8, 4));
    }
}
