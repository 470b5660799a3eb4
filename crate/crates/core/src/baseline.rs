//! Classical diffusion maps, kept as a comparison baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{HodgeError, Result};
use crate::geometry::PointCloud;
use crate::scalar::Real;

/// Row-stochastic Markov matrix `P = D⁻¹G` with its right eigenpairs.
#[derive(Debug, Clone)]
pub struct DiffusionOperator<T: Real> {
    pub epsilon: T,
    pub transition: DMatrix<T>,
    /// Eigenvalues of `P`, descending; the first is the trivial 1.
    pub eigenvalues: Vec<T>,
    /// Right eigenvectors `φ_l` as columns, scaled so that `φ_0 ≡ 1`.
    pub eigenvectors: DMatrix<T>,
}

impl<T: Real> DiffusionOperator<T> {
    /// Gaussian affinities `g_ij = exp(-‖x_i - x_j‖²/ε)` (self included),
    /// row-normalised; eigenpairs come from the symmetric conjugate
    /// `D^{-1/2} G D^{-1/2}`.
    pub fn new(cloud: &PointCloud<T>, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(HodgeError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let n = cloud.len();
        let g = DMatrix::from_fn(n, n, |i, j| (-cloud.squared_distance(i, j) / epsilon).exp());
        let degree: DVector<T> = DVector::from_fn(n, |i, _| g.row(i).sum());
        let transition = DMatrix::from_fn(n, n, |i, j| g[(i, j)] / degree[i]);
        let inv_sqrt = degree.map(|v| T::one() / v.sqrt());
        let mut sym = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * g[(i, j)] * inv_sqrt[j]);
        // exact symmetry for the solver
        for c in 0..n {
            for r in 0..c {
                sym[(c, r)] = sym[(r, c)];
            }
        }
        let (ascending, vecs) = T::symmetric_eigen(&sym);
        let volume = degree.sum().sqrt();
        let eigenvalues: Vec<T> = ascending.iter().rev().copied().collect();
        let mut eigenvectors = DMatrix::from_fn(n, n, |i, l| vecs[(i, n - 1 - l)] * inv_sqrt[i] * volume);
        for mut col in eigenvectors.column_iter_mut() {
            let mut best = 0;
            for r in 1..col.len() {
                if col[r].abs() > col[best].abs() {
                    best = r;
                }
            }
            if col[best] < T::zero() {
                col.neg_mut();
            }
        }
        Ok(DiffusionOperator { epsilon, transition, eigenvalues, eigenvectors })
    }
}

/// Diffusion-map coordinates `ψ_i = (λ_1 φ_1(i), …, λ_m φ_m(i))`, skipping the
/// trivial eigenpair.
#[derive(Debug, Clone)]
pub struct DiffusionMap<T: Real> {
    pub eigenvalues: Vec<T>,
    pub coords: DMatrix<T>,
}

pub fn diffusion_map<T: Real>(cloud: &PointCloud<T>, epsilon: T, m: usize) -> Result<DiffusionMap<T>> {
    let n = cloud.len();
    if m == 0 || m >= n {
        return Err(HodgeError::InvalidParameter(format!("need 1 <= m < N, got m = {m}, N = {n}")));
    }
    let op = DiffusionOperator::new(cloud, epsilon)?;
    let coords = DMatrix::from_fn(n, m, |i, l| op.eigenvalues[l + 1] * op.eigenvectors[(i, l + 1)]);
    Ok(DiffusionMap { eigenvalues: op.eigenvalues[1..=m].to_vec(), coords })
}
