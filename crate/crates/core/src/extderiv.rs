//! Block-sparse exterior-derivative matrices `ED_k` and their application to
//! coefficient fields.
//!
//! Row block `i` of `ED_k` couples point `i` to `{i} ∪ knn(i)`. Off-diagonal
//! block entries are
//!
//! ```text
//! ED(i,j)[M,J] = det([A_M(i,j) | O_Mᵀ(x_i) O^J(x_j)]) / d̄(x_i)
//! ```
//!
//! with `A(i,j) = exp(-‖x_j - x_i‖²/2t²) O(x_i)ᵀ(x_j - x_i)`, and the diagonal
//! block carries the negated self term built from `Σ_l A(i,l)`, so that a
//! single matrix realises `ED¹_k - ED²_k`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{HodgeError, Result};
use crate::frames::TangentFrameSet;
use crate::geometry::{gaussian_weight, normalizer, NeighborGraph, PointCloud};
use crate::multilinear::{binomial, det_in_place, enumerate_multi_indices, MultiIndex};
use crate::scalar::Real;

/// `A(i,j)`: the Gaussian-weighted displacement `x_j - x_i` expressed in the
/// frame at `x_i`.
pub fn displacement_vector<T: Real>(
    cloud: &PointCloud<T>,
    frames: &TangentFrameSet<T>,
    i: usize,
    j: usize,
    t: T,
) -> DVector<T> {
    let delta = cloud.displacement(i, j);
    let w = gaussian_weight(delta.norm_squared(), t);
    frames.frame(i).tr_mul(&delta) * w
}

/// Per-point frame coefficients of a k-form, `N · C(d,k)` values laid out
/// point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField<T: Real> {
    order: usize,
    block_len: usize,
    values: Vec<T>,
}

impl<T: Real> CoefficientField<T> {
    pub fn new(order: usize, dim: usize, values: Vec<T>) -> Result<Self> {
        let block_len = binomial(dim, order);
        if block_len == 0 && !values.is_empty() || block_len > 0 && !values.len().is_multiple_of(block_len) {
            return Err(HodgeError::ShapeMismatch(format!(
                "{} values do not split into blocks of C({dim},{order}) = {block_len}",
                values.len()
            )));
        }
        Ok(CoefficientField { order, block_len, values })
    }

    /// Evaluates `f(i)` at every point (one coefficient block per point).
    pub fn from_fn(order: usize, dim: usize, n_points: usize, mut f: impl FnMut(usize) -> Vec<T>) -> Result<Self> {
        let mut values = Vec::new();
        for i in 0..n_points {
            values.extend(f(i));
        }
        let field = Self::new(order, dim, values)?;
        if field.block_len > 0 && field.values.len() != n_points * field.block_len {
            return Err(HodgeError::ShapeMismatch("coefficient blocks of wrong length".into()));
        }
        Ok(field)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn block(&self, i: usize) -> &[T] {
        &self.values[i * self.block_len..(i + 1) * self.block_len]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `N × N` grid of dense `C(d,k+1) × C(d,k)` blocks stored in block-CSR form;
/// columns within a block row ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseOperator<T: Real> {
    order: usize,
    dim: usize,
    n_points: usize,
    bandwidth: T,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Row-major block values, `block_rows · block_cols` per stored block.
    values: Vec<T>,
}

impl<T: Real> BlockSparseOperator<T> {
    /// Assembles an operator from explicit `(i, j, row-major block)` triples,
    /// which must be sorted by `(i, j)` without duplicates.
    pub fn from_blocks(
        order: usize,
        dim: usize,
        n_points: usize,
        bandwidth: T,
        blocks: Vec<(usize, usize, Vec<T>)>,
    ) -> Result<Self> {
        let size = binomial(dim, order + 1) * binomial(dim, order);
        let mut row_ptr = vec![0; n_points + 1];
        let mut col_idx = Vec::with_capacity(blocks.len());
        let mut values = Vec::with_capacity(blocks.len() * size);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, b) in blocks {
            if i >= n_points || j >= n_points || b.len() != size || last.is_some_and(|l| l >= (i, j)) {
                return Err(HodgeError::ShapeMismatch(format!("bad block ({i},{j}) of {} values", b.len())));
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.extend(b);
        }
        for i in 0..n_points {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(BlockSparseOperator { order, dim, n_points, bandwidth, row_ptr, col_idx, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// `C(d, k+1)`.
    pub fn block_rows(&self) -> usize {
        binomial(self.dim, self.order + 1)
    }

    /// `C(d, k)`.
    pub fn block_cols(&self) -> usize {
        binomial(self.dim, self.order)
    }

    pub fn block_size(&self) -> usize {
        self.block_rows() * self.block_cols()
    }

    pub fn num_blocks(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and row-major values of the blocks stored in row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &[T])> + '_ {
        let size = self.block_size();
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .map(move |p| (self.col_idx[p], &self.values[p * size..(p + 1) * size]))
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&[T]> {
        self.row(i).find(|&(c, _)| c == j).map(|(_, b)| b)
    }

    /// Every stored block as `(i, j, values)` in row order.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, &[T])> + '_ {
        (0..self.n_points).flat_map(move |i| self.row(i).map(move |(j, b)| (i, j, b)))
    }

    /// For each block column, the `(row, storage position)` pairs that touch it,
    /// rows ascending.
    pub fn column_lists(&self) -> Vec<Vec<(usize, usize)>> {
        let mut cols = vec![Vec::new(); self.n_points];
        for i in 0..self.n_points {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                cols[self.col_idx[p]].push((i, p));
            }
        }
        cols
    }

    pub(crate) fn block_at(&self, position: usize) -> &[T] {
        let size = self.block_size();
        &self.values[position * size..(position + 1) * size]
    }

    /// Dense `(N·C(d,k+1)) × (N·C(d,k))` matrix; meant for small instances.
    pub fn to_dense(&self) -> DMatrix<T> {
        let (br, bc) = (self.block_rows(), self.block_cols());
        let mut out = DMatrix::zeros(self.n_points * br, self.n_points * bc);
        for (i, j, b) in self.blocks() {
            for r in 0..br {
                for c in 0..bc {
                    out[(i * br + r, j * bc + c)] = b[r * bc + c];
                }
            }
        }
        out
    }

    /// Sparse block mat-vec `ED_k f`.
    pub fn apply_raw(&self, f: &CoefficientField<T>) -> Result<CoefficientField<T>> {
        if f.order != self.order || f.block_len != self.block_cols() || f.values.len() != self.n_points * f.block_len {
            return Err(HodgeError::ShapeMismatch(format!(
                "field of order {} with {} values for ED_{} over {} points",
                f.order,
                f.values.len(),
                self.order,
                self.n_points
            )));
        }
        let (br, bc) = (self.block_rows(), self.block_cols());
        let rows: Vec<Vec<T>> = (0..self.n_points)
            .into_par_iter()
            .map(|i| {
                let mut out = vec![T::zero(); br];
                for (j, b) in self.row(i) {
                    let x = f.block(j);
                    for r in 0..br {
                        let mut acc = T::zero();
                        for c in 0..bc {
                            acc += b[r * bc + c] * x[c];
                        }
                        out[r] += acc;
                    }
                }
                out
            })
            .collect();
        CoefficientField::new(self.order + 1, self.dim, rows.concat())
    }
}

/// Fills the `(k+1)×(k+1)` matrix `[col0_M | G[M, J]]` and returns its
/// determinant.
fn minor_det<T: Real>(col0: &[T], g: impl Fn(usize, usize) -> T, m: &MultiIndex, j: &MultiIndex, scratch: &mut [T]) -> T {
    let size = m.order();
    for (p, &mp) in m.entries().iter().enumerate() {
        scratch[p * size] = col0[mp];
        for (q, &jq) in j.entries().iter().enumerate() {
            scratch[p * size + q + 1] = g(mp, jq);
        }
    }
    det_in_place(&mut scratch[..size * size], size)
}

/// Assembles `ED_k` over the neighbor graph.
pub fn build_ed<T: Real>(
    cloud: &PointCloud<T>,
    graph: &NeighborGraph<T>,
    frames: &TangentFrameSet<T>,
    k: usize,
) -> Result<BlockSparseOperator<T>> {
    let d = frames.intrinsic_dimension();
    if k > d {
        return Err(HodgeError::OrderOutOfRange { k, d });
    }
    let n_points = cloud.len();
    if frames.len() != n_points || graph.num_points() != n_points {
        return Err(HodgeError::ShapeMismatch(format!(
            "{} points, {} frames, graph over {} points",
            n_points,
            frames.len(),
            graph.num_points()
        )));
    }
    if frames.ambient_dim() != cloud.ambient_dim() {
        return Err(HodgeError::ShapeMismatch("frames live in a different ambient space".into()));
    }
    let t = graph.require_bandwidth()?;
    let rows_m = enumerate_multi_indices(d, k + 1);
    let cols_j = enumerate_multi_indices(d, k);
    let size = rows_m.len() * cols_j.len();

    let per_row: Vec<Vec<(usize, Vec<T>)>> = (0..n_points)
        .into_par_iter()
        .map(|i| -> Result<Vec<(usize, Vec<T>)>> {
            let inv_norm = T::one() / normalizer(graph, i)?;
            let oi = frames.frame(i);
            let mut scratch = vec![T::zero(); (k + 1) * (k + 1)];
            let mut total = DVector::zeros(d);
            let mut blocks = Vec::with_capacity(graph.k() + 1);
            for &j in graph.neighbors(i) {
                let a = displacement_vector(cloud, frames, i, j, t);
                total += &a;
                let g = oi.tr_mul(frames.frame(j));
                let mut b = Vec::with_capacity(size);
                for m in &rows_m {
                    for jj in &cols_j {
                        b.push(minor_det(a.as_slice(), |r, c| g[(r, c)], m, jj, &mut scratch) * inv_norm);
                    }
                }
                blocks.push((j, b));
            }
            let mut diag = Vec::with_capacity(size);
            let identity = |r: usize, c: usize| if r == c { T::one() } else { T::zero() };
            for m in &rows_m {
                for jj in &cols_j {
                    diag.push(-minor_det(total.as_slice(), identity, m, jj, &mut scratch) * inv_norm);
                }
            }
            blocks.push((i, diag));
            blocks.sort_by_key(|(j, _)| *j);
            Ok(blocks)
        })
        .collect::<Result<_>>()?;

    let blocks = per_row
        .into_iter()
        .enumerate()
        .flat_map(|(i, row)| row.into_iter().map(move |(j, b)| (i, j, b)))
        .collect();
    BlockSparseOperator::from_blocks(k, d, n_points, t, blocks)
}

/// Estimated exterior derivative `(√(k+1)/t²) ED_k f`, as frame coefficients of
/// a (k+1)-form.
pub fn apply_exterior_derivative<T: Real>(
    ed: &BlockSparseOperator<T>,
    f: &CoefficientField<T>,
) -> Result<CoefficientField<T>> {
    let raw = ed.apply_raw(f)?;
    let t = ed.bandwidth();
    let scale = T::lit((ed.order() + 1) as f64).sqrt() / (t * t);
    CoefficientField::new(raw.order, ed.intrinsic_dim(), raw.values.into_iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{local_frames, LocalPcaOptions};
    use crate::geometry::{default_bandwidth, knn};

    fn setup(rows: Vec<Vec<f64>>, k: usize) -> (PointCloud<f64>, NeighborGraph<f64>, TangentFrameSet<f64>) {
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let t = default_bandwidth(&cloud).unwrap();
        let g = knn(&cloud, k).unwrap().with_bandwidth(t).unwrap();
        let f = local_frames(&cloud, &g, &LocalPcaOptions::default()).unwrap();
        (cloud, g, f)
    }

    fn wavy(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let s = i as f64 * 0.21;
                vec![s, (1.3 * s).sin() * 0.4, 0.1 * s * s]
            })
            .collect()
    }

    #[test]
    fn displacement_examples() {
        let cloud = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let frames = TangentFrameSet::from_frames(vec![e1.clone(), e1.clone(), e1]).unwrap();
        let a = displacement_vector(&cloud, &frames, 0, 1, 1.0);
        assert!((a[0] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((a[0] - 0.60653).abs() < 1e-5);
        assert_eq!(displacement_vector(&cloud, &frames, 1, 1, 1.0)[0], 0.0);
        assert_eq!(displacement_vector(&cloud, &frames, 0, 2, 1.0)[0], 0.0);
    }

    #[test]
    fn order_zero_blocks_are_scaled_displacements() {
        let (cloud, g, frames) = setup(wavy(15), 4);
        let ed = build_ed(&cloud, &g, &frames, 0).unwrap();
        let t = g.bandwidth().unwrap();
        let d = frames.intrinsic_dimension();
        for i in 0..cloud.len() {
            let dn = normalizer(&g, i).unwrap();
            let mut sum = DVector::zeros(d);
            for &j in g.neighbors(i) {
                let a = displacement_vector(&cloud, &frames, i, j, t) / dn;
                sum += &a;
                let b = ed.block(i, j).unwrap();
                for r in 0..d {
                    assert!((b[r] - a[r]).abs() < 1e-15);
                }
            }
            let diag = ed.block(i, i).unwrap();
            for r in 0..d {
                assert!((diag[r] + sum[r]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let (cloud, g, frames) = setup(wavy(20), 5);
        let ed = build_ed(&cloud, &g, &frames, 0).unwrap();
        let c = CoefficientField::new(0, frames.intrinsic_dimension(), vec![2.75; cloud.len()]).unwrap();
        let out = apply_exterior_derivative(&ed, &c).unwrap();
        assert!(out.values().iter().all(|&v| v.abs() < 1e-12), "{:?}", out.values());
    }

    #[test]
    fn top_degree_has_empty_blocks() {
        let (cloud, g, frames) = setup(wavy(10), 3);
        assert_eq!(frames.intrinsic_dimension(), 1);
        let ed = build_ed(&cloud, &g, &frames, 1).unwrap();
        assert_eq!(ed.block_rows(), 0);
        let f = CoefficientField::new(1, 1, vec![1.0; 10]).unwrap();
        let out = apply_exterior_derivative(&ed, &f).unwrap();
        assert!(out.is_empty());
        assert!(matches!(build_ed(&cloud, &g, &frames, 2), Err(HodgeError::OrderOutOfRange { k: 2, d: 1 })));
    }

    #[test]
    fn sparsity_follows_the_graph() {
        let (cloud, g, frames) = setup(wavy(12), 3);
        let ed = build_ed(&cloud, &g, &frames, 0).unwrap();
        assert_eq!(ed.num_blocks(), 12 * 4);
        for (i, j, _) in ed.blocks() {
            assert!(g.in_neighborhood(i, j));
        }
    }

    #[test]
    fn apply_checks_shapes() {
        let (cloud, g, frames) = setup(wavy(8), 3);
        let ed = build_ed(&cloud, &g, &frames, 0).unwrap();
        let wrong = CoefficientField::new(0, 1, vec![1.0; 7]).unwrap();
        assert!(ed.apply_raw(&wrong).is_err());
        let wrong_order = CoefficientField::new(1, 1, vec![1.0; 8]).unwrap();
        assert!(ed.apply_raw(&wrong_order).is_err());
    }
}
