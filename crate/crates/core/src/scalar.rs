//! Element types usable inside a [`Tensor`](crate::Tensor).
//!
//! Training and inference run in `f32`; gradient verification runs in `f64`.

use core::fmt::Debug;
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Storage tag written to checkpoint files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    F64 = 1,
}

pub trait Scalar:
    Float
    + Default
    + Debug
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    const DTYPE: DType;

    fn of(value: f64) -> Self;

    fn as_f64(self) -> f64;

    /// `C = A·B + beta·C` on row-major matrices, with `A` of size m×k and
    /// `B` of size k×n. Either operand may be given transposed in storage.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        a_transposed: bool,
        b: &[Self],
        b_transposed: bool,
        beta: Self,
        c: &mut [Self],
    );
}

/// Row and column strides of an m×k operand stored either row-major or as
/// its row-major transpose.
fn strides(rows: usize, cols: usize, transposed: bool) -> (isize, isize) {
    if transposed {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

macro_rules! impl_scalar {
    ($ty:ty, $tag:expr, $kernel:path) => {
        impl Scalar for $ty {
            const DTYPE: DType = $tag;

            #[inline]
            fn of(value: f64) -> Self {
                value as $ty
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                a_transposed: bool,
                b: &[Self],
                b_transposed: bool,
                beta: Self,
                c: &mut [Self],
            ) {
                assert!(a.len() >= m * k, "gemm: lhs too short");
                assert!(b.len() >= k * n, "gemm: rhs too short");
                assert!(c.len() >= m * n, "gemm: output too short");
                if m == 0 || n == 0 {
                    return;
                }
                let (rsa, csa) = strides(m, k, a_transposed);
                let (rsb, csb) = strides(k, n, b_transposed);
                // SAFETY: the asserts above guarantee every index touched by
                // the strided access patterns lies inside the slices.
                unsafe {
                    $kernel(
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
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, DType::F32, matrixmultiply::sgemm);
impl_scalar!(f64, DType::F64, matrixmultiply::dgemm);
