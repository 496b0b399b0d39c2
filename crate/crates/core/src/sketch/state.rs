use std::mem;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::projection::{ProjectionSet, ProjectionSource};

/// Accepted distance of an input norm from 1 before renormalization.
pub const NORM_TOLERANCE: f64 = 1e-3;

/// Input rows are projected in chunks of this many vectors.
pub const INGEST_CHUNK: usize = 256;

/// Projection directions are applied in blocks of this many rows.
pub const PROJECTION_BLOCK: usize = 1024;

/// A point on the unit sphere `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector<T: Scalar = f64> {
    coords: Vec<T>,
}

impl<T: Scalar> UnitVector<T> {
    /// Renormalizes `coords` if its norm is within [`NORM_TOLERANCE`] of 1,
    /// rejects it otherwise.
    pub fn new(mut coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::input("vector must have at least one coordinate"));
        }
        normalize(&mut coords)?;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<T> {
        self.coords
    }
}

impl<T: Scalar> AsRef<[T]> for UnitVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.coords
    }
}

/// Divides `v` by its Euclidean norm after checking the ingestion contract.
pub fn normalize<T: Scalar>(v: &mut [T]) -> Result<()> {
    let mut sq = 0.0f64;
    for x in v.iter() {
        let x = x.to_f64_lossless();
        if !x.is_finite() {
            return Err(Error::input("vector contains NaN or infinite entries"));
        }
        sq += x * x;
    }
    let norm = sq.sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::input(format!(
            "vector norm {norm:.6} is not within {NORM_TOLERANCE} of 1"
        )));
    }
    let inv = T::from_f64_lossy(norm);
    for x in v.iter_mut() {
        *x = *x / inv;
    }
    Ok(())
}

/// What a sketch is bound to: a particular projection set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Binding {
    pub source: ProjectionSource,
    pub count: usize,
    pub dim: usize,
    pub fingerprint: u64,
}

impl Binding {
    pub fn of<T: Scalar>(proj: &ProjectionSet<T>) -> Self {
        Self {
            source: proj.source(),
            count: proj.count(),
            dim: proj.dim(),
            fingerprint: proj.fingerprint(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            ProjectionSource::Seeded(seed) => Some(seed),
            ProjectionSource::Explicit => None,
        }
    }
}

/// Running maxima `M_j = max_i <w_j, x_i>` over a stream.
///
/// Only `m` scalars and an item counter are stored. An empty sketch holds
/// `-inf` in every slot; the statistic is undefined until the first update.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSketch<T: Scalar = f64> {
    maxima: Vec<T>,
    items_seen: u64,
    binding: Binding,
}

impl<T: Scalar> MaxSketch<T> {
    pub fn new(proj: &ProjectionSet<T>) -> Self {
        Self::empty(Binding::of(proj))
    }

    pub(crate) fn empty(binding: Binding) -> Self {
        Self {
            maxima: vec![T::neg_infinity(); binding.count],
            items_seen: 0,
            binding,
        }
    }

    pub(crate) fn from_parts(maxima: Vec<T>, items_seen: u64, binding: Binding) -> Result<Self> {
        if maxima.len() != binding.count {
            return Err(Error::Dimension {
                expected: binding.count,
                actual: maxima.len(),
            });
        }
        let all_empty = maxima.iter().all(|v| *v == T::neg_infinity());
        if (items_seen == 0) != all_empty {
            return Err(Error::input(
                "items_seen = 0 must coincide with an all -inf maxima vector",
            ));
        }
        if maxima.iter().any(|v| v.is_nan() || *v == T::infinity()) {
            return Err(Error::input("maxima must be finite or -inf"));
        }
        Ok(Self {
            maxima,
            items_seen,
            binding,
        })
    }

    pub fn maxima(&self) -> &[T] {
        &self.maxima
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn is_empty(&self) -> bool {
        self.items_seen == 0
    }

    pub fn binding(&self) -> Binding {
        self.binding
    }

    pub fn fingerprint(&self) -> u64 {
        self.binding.fingerprint
    }

    pub fn dim(&self) -> usize {
        self.binding.dim
    }

    pub fn count(&self) -> usize {
        self.binding.count
    }

    /// Bytes held by the sketch: the `m` maxima plus the fixed-size header
    /// (counter and binding). Independent of the stream length.
    pub fn state_bytes(&self) -> usize {
        self.maxima.len() * mem::size_of::<T>() + mem::size_of::<Self>()
    }

    fn check_bound(&self, proj: &ProjectionSet<T>) -> Result<()> {
        if proj.fingerprint() != self.binding.fingerprint
            || proj.count() != self.binding.count
            || proj.dim() != self.binding.dim
        {
            return Err(Error::Binding(format!(
                "sketch is bound to projections {:016x}, got {:016x}",
                self.binding.fingerprint,
                proj.fingerprint()
            )));
        }
        Ok(())
    }

    /// Folds one vector into the sketch.
    pub fn update(&mut self, x: &UnitVector<T>, proj: &ProjectionSet<T>) -> Result<()> {
        self.check_bound(proj)?;
        if x.dim() != proj.dim() {
            return Err(Error::Dimension {
                expected: proj.dim(),
                actual: x.dim(),
            });
        }
        self.ingest(x.as_slice(), proj, false)
    }

    /// Folds a row-major block of vectors into the sketch. Every row goes
    /// through the ingestion normalization of [`UnitVector::new`].
    ///
    /// Results are bit-identical whatever the batching, so updating row by
    /// row, in one batch, or across merged shards all agree exactly.
    pub fn update_batch(&mut self, rows: &[T], proj: &ProjectionSet<T>) -> Result<()> {
        self.ingest(rows, proj, true)
    }

    fn ingest(&mut self, rows: &[T], proj: &ProjectionSet<T>, normalize_rows: bool) -> Result<()> {
        self.check_bound(proj)?;
        let d = proj.dim();
        if !rows.len().is_multiple_of(d) {
            return Err(Error::Dimension {
                expected: d,
                actual: rows.len() % d,
            });
        }
        let n = rows.len() / d;
        if n == 0 {
            return Ok(());
        }
        let chunk = n.min(INGEST_CHUNK);
        let mut scratch = vec![T::zero(); chunk * d];
        let mut products = Vec::new();
        for block in rows.chunks(chunk * d) {
            let r = block.len() / d;
            let x = &mut scratch[..r * d];
            x.copy_from_slice(block);
            for (i, row) in x.chunks_mut(d).enumerate().filter(|_| normalize_rows) {
                normalize(row).map_err(|e| match e {
                    Error::InvalidInput(msg) => Error::input(format!(
                        "row {}: {msg}",
                        self.items_seen + (i as u64)
                    )),
                    other => other,
                })?;
            }
            fold_projected(&mut self.maxima, x, r, proj, &mut products);
            self.items_seen += r as u64;
        }
        Ok(())
    }

    /// `S = (1/m) sum_j M_j`.
    pub fn statistic(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptySketch);
        }
        let sum: f64 = self.maxima.iter().map(|v| v.to_f64_lossless()).sum();
        Ok(sum / self.maxima.len() as f64)
    }

    /// Elementwise max of two sketches over the same projections. Equal to
    /// the sketch of the concatenated streams.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.binding != other.binding {
            return Err(Error::Binding(format!(
                "cannot merge sketches bound to {:016x} and {:016x}",
                self.binding.fingerprint, other.binding.fingerprint
            )));
        }
        let maxima = self
            .maxima
            .iter()
            .zip(&other.maxima)
            .map(|(a, b)| max_total(*a, *b))
            .collect();
        Ok(Self {
            maxima,
            items_seen: self.items_seen + other.items_seen,
            binding: self.binding,
        })
    }

    pub fn merge_in(&mut self, other: &Self) -> Result<()> {
        *self = self.merge(other)?;
        Ok(())
    }
}

/// Computes `<w_j, x_i>` for an `r x d` block and folds the row maxima into
/// `maxima`. `products` is reused scratch.
pub(crate) fn fold_projected<T: Scalar>(
    maxima: &mut [T],
    x: &[T],
    r: usize,
    proj: &ProjectionSet<T>,
    products: &mut Vec<T>,
) {
    let d = proj.dim();
    let m = proj.count();
    let mut start = 0;
    while start < m {
        let len = PROJECTION_BLOCK.min(m - start);
        let w = proj.rows(start, len);
        products.clear();
        products.resize(r * len, T::zero());
        // products (r x len) = x (r x d) * w^T (d x len)
        T::gemm(
            r,
            d,
            len,
            x,
            d as isize,
            1,
            &w,
            1,
            d as isize,
            products,
            len as isize,
            1,
        );
        let out = &mut maxima[start..start + len];
        for row in products.chunks(len) {
            for (cur, &v) in out.iter_mut().zip(row) {
                *cur = max_total(*cur, v);
            }
        }
        start += len;
    }
}

/// Maximum under the IEEE total order restricted to non-NaN values, so that
/// `+0` beats `-0` regardless of argument order.
#[inline]
pub(crate) fn max_total<T: Scalar>(a: T, b: T) -> T {
    if b > a || (b == a && a.is_sign_negative() && b.is_sign_positive()) {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_projections() -> ProjectionSet<f64> {
        // w_1 = (1, 0), w_2 = (0.6, -0.8)
        ProjectionSet::from_rows(2, 2, vec![1.0, 0.0, 0.6, -0.8]).unwrap()
    }

    #[test]
    fn orthogonal_projection_is_zero() {
        let p = ProjectionSet::<f64>::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
        let mut s = MaxSketch::new(&p);
        s.update(&UnitVector::new(vec![0.0, 1.0]).unwrap(), &p).unwrap();
        assert_eq!(s.maxima(), &[0.0]);
        assert!(s.maxima()[0].is_sign_positive());
    }

    #[test]
    fn three_vector_brute_force() {
        let p = hand_projections();
        let xs = [[0.6, 0.8], [-1.0, 0.0], [0.0, -1.0]];
        let mut s = MaxSketch::new(&p);
        for x in &xs {
            s.update(&UnitVector::new(x.to_vec()).unwrap(), &p).unwrap();
        }
        let w = [[1.0, 0.0], [0.6, -0.8]];
        let mut expected = [f64::NEG_INFINITY; 2];
        for (j, wj) in w.iter().enumerate() {
            for x in &xs {
                expected[j] = expected[j].max(wj[0] * x[0] + wj[1] * x[1]);
            }
        }
        // (1,0): max(0.6, -1, 0) = 0.6 ; (0.6,-0.8): max(-0.28, -0.6, 0.8) = 0.8
        for j in 0..2 {
            assert!((s.maxima()[j] - expected[j]).abs() < 1e-15);
        }
        let mean = (expected[0] + expected[1]) / 2.0;
        assert!((s.statistic().unwrap() - mean).abs() < 1e-15);
        assert_eq!(s.items_seen(), 3);
    }

    #[test]
    fn idempotent_update() {
        let p = ProjectionSet::<f64>::new(4, 16, 3).unwrap();
        let x = UnitVector::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let mut s = MaxSketch::new(&p);
        s.update(&x, &p).unwrap();
        let before = s.maxima().to_vec();
        s.update(&x, &p).unwrap();
        assert_eq!(before, s.maxima());
        assert_eq!(s.items_seen(), 2);
    }

    #[test]
    fn statistic_of_known_maxima() {
        let binding = Binding {
            source: ProjectionSource::Explicit,
            count: 2,
            dim: 1,
            fingerprint: 0,
        };
        let s = MaxSketch::from_parts(vec![1.0, 3.0], 1, binding).unwrap();
        assert_eq!(s.statistic().unwrap(), 2.0);
        let c = MaxSketch::from_parts(vec![0.25; 7], 1, Binding { count: 7, ..binding }).unwrap();
        assert_eq!(c.statistic().unwrap(), 0.25);
    }

    #[test]
    fn empty_sketch_statistic_errors() {
        let p = ProjectionSet::<f64>::new(3, 4, 0).unwrap();
        let s = MaxSketch::new(&p);
        assert!(s.maxima().iter().all(|v| *v == f64::NEG_INFINITY));
        assert!(matches!(s.statistic(), Err(Error::EmptySketch)));
    }

    #[test]
    fn dimension_and_binding_errors() {
        let p = ProjectionSet::<f64>::new(3, 4, 0).unwrap();
        let q = ProjectionSet::<f64>::new(3, 4, 1).unwrap();
        let mut s = MaxSketch::new(&p);
        let x2 = UnitVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(s.update(&x2, &p), Err(Error::Dimension { .. })));
        let x3 = UnitVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(s.update(&x3, &q), Err(Error::Binding(_))));
        assert!(matches!(
            s.merge(&MaxSketch::new(&q)),
            Err(Error::Binding(_))
        ));
    }

    #[test]
    fn normalization_contract() {
        let v = UnitVector::new(vec![1.0005f64, 0.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
        assert!(UnitVector::new(vec![1.01f64, 0.0]).is_err());
        assert!(UnitVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(UnitVector::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let p = ProjectionSet::<f64>::new(3, 8, 5).unwrap();
        let mut s = MaxSketch::new(&p);
        s.update_batch(&[1.0, 0.0, 0.0, 0.0, 0.6, 0.8], &p).unwrap();
        let merged = s.merge(&MaxSketch::new(&p)).unwrap();
        assert_eq!(merged, s);
    }

    #[test]
    fn single_and_batch_updates_agree() {
        let p = ProjectionSet::<f64>::new(7, 1500, 11).unwrap();
        let rows: Vec<f64> = (0..300 * 7)
            .map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0)
            .collect();
        let mut unit = Vec::new();
        for r in rows.chunks(7) {
            let n: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            unit.extend(r.iter().map(|v| v / n));
        }
        let mut batch = MaxSketch::new(&p);
        batch.update_batch(&unit, &p).unwrap();
        let mut single = MaxSketch::new(&p);
        for r in unit.chunks(7) {
            single.update(&UnitVector::new(r.to_vec()).unwrap(), &p).unwrap();
        }
        assert_eq!(batch, single);

        let lazy = ProjectionSet::<f64>::on_the_fly(7, 1500, 11).unwrap();
        let mut s_lazy = MaxSketch::new(&lazy);
        s_lazy.update_batch(&unit, &lazy).unwrap();
        assert_eq!(batch.maxima(), s_lazy.maxima());
    }

    #[test]
    fn f32_sketch() {
        let p = ProjectionSet::<f32>::new(3, 64, 2).unwrap();
        let mut s = MaxSketch::new(&p);
        s.update_batch(&[0.0f32, 1.0, 0.0, 0.0, 0.0, 1.0], &p).unwrap();
        let s_val = s.statistic().unwrap();
        assert!(s_val > 0.0 && s_val < 3.0);
    }

    #[test]
    fn state_size_is_independent_of_stream_length() {
        let p = ProjectionSet::<f64>::new(4, 32, 1).unwrap();
        let mut s = MaxSketch::new(&p);
        let before = s.state_bytes();
        for _ in 0..50 {
            s.update_batch(&[0.5; 4 * 20], &p).unwrap();
        }
        assert_eq!(s.state_bytes(), before);
        assert_eq!(before, 32 * 8 + std::mem::size_of::<MaxSketch<f64>>());
    }
}
