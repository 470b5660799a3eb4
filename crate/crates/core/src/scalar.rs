//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the pipeline is generic over (`f32` or `f64`).
///
/// Besides the arithmetic supplied by [`RealField`], a scalar knows how to run
/// a dense symmetric eigensolve; this is the one place where a specialised
/// backend is plugged in.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + LowerExp + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Dense eigendecomposition of a symmetric matrix. Eigenvalues come back in
    /// ascending order, eigenvectors as the matching columns.
    fn symmetric_eigen(matrix: &DMatrix<Self>) -> (Vec<Self>, DMatrix<Self>);
}

/// Task count handed to the eigensolver. Fixed rather than taken from the
/// thread pool so that results do not depend on the number of threads.
const EIGEN_TASKS: usize = 8;

fn pin_solver_parallelism() {
    static PINNED: std::sync::Once = std::sync::Once::new();
    PINNED.call_once(|| faer::set_global_parallelism(faer::Parallelism::Rayon(EIGEN_TASKS)));
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn symmetric_eigen(matrix: &DMatrix<$t>) -> (Vec<$t>, DMatrix<$t>) {
                let n = matrix.nrows();
                if n == 0 {
                    return (Vec::new(), DMatrix::zeros(0, 0));
                }
                pin_solver_parallelism();
                let dense = faer::Mat::<$t>::from_fn(n, n, |i, j| matrix[(i, j)]);
                let evd = dense.selfadjoint_eigendecomposition(faer::Side::Lower);
                let s = evd.s().column_vector();
                let u = evd.u();
                let values = (0..n).map(|i| s.read(i)).collect();
                let vectors = DMatrix::from_fn(n, n, |i, j| u.read(i, j));
                (values, vectors)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0_f64, 1.0, 2.0]));
        let (vals, vecs) = f64::symmetric_eigen(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
        let residual = &m * &vecs - &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
        assert!(residual.amax() < 1e-12);
    }

    #[test]
    fn f32_backend_runs() {
        let m = DMatrix::<f32>::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, _) = f32::symmetric_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-5);
        assert!((vals[1] - 3.0).abs() < 1e-5);
    }
}
