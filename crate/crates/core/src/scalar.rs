//! Scalar abstraction shared by the projection and sketch code.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point type a sketch can be instantiated over: `f32` or `f64`.
///
/// Besides the usual arithmetic, each scalar knows how to run the dense
/// `rows x projections^T` product that every sketch update reduces to.
pub trait Scalar:
    Float + FromPrimitive + NumCast + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// `C (m x n) = A (m x k) * B (k x n)` with arbitrary strides; `C` is
    /// overwritten.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("Scalar always converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path) => {
        impl Scalar for $t {
            #[inline]
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
                // SAFETY: callers pass slices at least as large as the
                // strided extents, checked above in debug builds and by the
                // sketch code's shape validation in release builds.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        0.0,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);
