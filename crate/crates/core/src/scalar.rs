//! Scalar abstraction shared by the numeric kernels.
//!
//! Dense layers, metrics and the small linear-algebra helpers are written
//! against [`Scalar`], which is implemented for `f32` and `f64`. The only
//! method beyond `num_traits::Float` is [`Scalar::gemm`], which dispatches to
//! the matching `matrixmultiply` kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Strided read-only view of a row- or column-major matrix.
#[derive(Clone, Copy, Debug)]
pub struct MatView<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: isize,
    pub col_stride: isize,
}

impl<'a, T> MatView<'a, T> {
    /// Row-major `rows x cols` view.
    pub fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        debug_assert!(data.len() >= rows * cols);
        Self { data, rows, cols, row_stride: cols as isize, col_stride: 1 }
    }

    /// The transpose of this view; no data is moved.
    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }
}

pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// `c = alpha * a * b + beta * c`, `c` row-major with `b.cols` columns.
    fn gemm(alpha: Self, a: MatView<'_, Self>, b: MatView<'_, Self>, beta: Self, c: &mut [Self]);

    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_scalar {
    ($ty:ty, $kernel:path) => {
        impl Scalar for $ty {
            fn gemm(alpha: Self, a: MatView<'_, Self>, b: MatView<'_, Self>, beta: Self, c: &mut [Self]) {
                assert_eq!(a.cols, b.rows, "inner dimensions differ");
                let (m, k, n) = (a.rows, a.cols, b.cols);
                assert!(c.len() >= m * n);
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: the views cover `rows x cols` elements at the given
                // strides (checked on construction) and `c` holds `m * n`.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        alpha,
                        a.data.as_ptr(),
                        a.row_stride,
                        a.col_stride,
                        b.data.as_ptr(),
                        b.row_stride,
                        b.col_stride,
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

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    out[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        out
    }

    #[test]
    fn gemm_matches_naive_including_transpose() {
        let a: Vec<f64> = (0..6).map(|v| v as f64 * 0.5 - 1.0).collect();
        let b: Vec<f64> = (0..12).map(|v| (v as f64).sin()).collect();
        let mut c = vec![0.0; 8];
        f64::gemm(1.0, MatView::row_major(&a, 2, 3), MatView::row_major(&b, 3, 4), 0.0, &mut c);
        for (x, y) in c.iter().zip(naive(&a, &b, 2, 3, 4)) {
            assert!((x - y).abs() < 1e-14);
        }

        // a^T stored as 3x2, read transposed.
        let at: Vec<f64> = vec![a[0], a[3], a[1], a[4], a[2], a[5]];
        let mut c2 = vec![0.0; 8];
        f64::gemm(1.0, MatView::row_major(&at, 3, 2).t(), MatView::row_major(&b, 3, 4), 0.0, &mut c2);
        for (x, y) in c.iter().zip(&c2) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
