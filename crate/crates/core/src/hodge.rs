//! Hodge-Laplacian matrices, their spectra, and the Hodge diffusion map.
//!
//! `H_{k,t} = ((k+1) ED_kᵀ ED_k + k ED_{k-1} ED_{k-1}ᵀ) / t⁴` is assembled
//! densely as a sum of Gram forms (upper triangle computed, lower mirrored, so
//! it is symmetric to the bit). Powers of `H` are always taken through its
//! eigendecomposition.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{HodgeError, Result};
use crate::extderiv::BlockSparseOperator;
use crate::scalar::Real;

/// Relative tolerance for negative roundoff eigenvalues of a PSD matrix.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Dense `H_{k,t}`: `N × N` blocks of size `C(d,k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeMatrix<T: Real> {
    pub order: usize,
    pub block_len: usize,
    pub n_points: usize,
    pub bandwidth: T,
    pub matrix: DMatrix<T>,
}

impl<T: Real> HodgeMatrix<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Copy of block `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<T> {
        let c = self.block_len;
        self.matrix.view((i * c, j * c), (c, c)).into_owned()
    }
}

fn check_compatible<T: Real>(a: &BlockSparseOperator<T>, b: &BlockSparseOperator<T>) -> Result<()> {
    if a.intrinsic_dim() != b.intrinsic_dim() || a.n_points() != b.n_points() || a.bandwidth() != b.bandwidth() {
        return Err(HodgeError::ShapeMismatch(format!(
            "operators disagree: d {} vs {}, N {} vs {}, t {} vs {}",
            a.intrinsic_dim(),
            b.intrinsic_dim(),
            a.n_points(),
            b.n_points(),
            a.bandwidth(),
            b.bandwidth()
        )));
    }
    if a.order() != b.order() + 1 {
        return Err(HodgeError::ShapeMismatch(format!(
            "expected ED_{} alongside ED_{}, got ED_{}",
            a.order().wrapping_sub(1),
            a.order(),
            b.order()
        )));
    }
    Ok(())
}

/// Builds `H_{k,t}` from `ED_k` and, for `k ≥ 1`, `ED_{k-1}`.
pub fn build_hodge<T: Real>(
    ed_k: &BlockSparseOperator<T>,
    ed_km1: Option<&BlockSparseOperator<T>>,
) -> Result<HodgeMatrix<T>> {
    let k = ed_k.order();
    match (k, ed_km1) {
        (0, None) => {}
        (0, Some(_)) => {
            return Err(HodgeError::InvalidParameter("ED_{-1} does not exist for k = 0".into()));
        }
        (_, None) => {
            return Err(HodgeError::InvalidParameter(format!("ED_{} is required for k = {k}", k - 1)));
        }
        (_, Some(prev)) => check_compatible(ed_k, prev)?,
    }
    let n = ed_k.n_points();
    let c = ed_k.block_cols();
    let dim = n * c;
    let t = ed_k.bandwidth();
    let t2 = t * t;
    let coef_up = T::lit((k + 1) as f64) / (t2 * t2);
    let coef_down = T::lit(k as f64) / (t2 * t2);

    let mut h = DMatrix::<T>::zeros(dim, dim);
    if dim == 0 {
        return Ok(HodgeMatrix { order: k, block_len: c, n_points: n, bandwidth: t, matrix: h });
    }

    // Column strip `a` of the upper triangle: rows b ≤ a.
    let up_cols = ed_k.column_lists();
    let down = ed_km1.map(|p| (p, p.column_lists()));
    let strips: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|a| {
            // strip stored column-major: (a+1)·c rows × c columns
            let rows = (a + 1) * c;
            let mut strip = vec![T::zero(); rows * c];
            let br = ed_k.block_rows();
            if br > 0 {
                // (ED_kᵀ ED_k)(b, a) = Σ_i ED(i,b)ᵀ ED(i,a)
                for &(i, pa) in &up_cols[a] {
                    let ba = ed_k.block_at(pa);
                    for (b, bb) in ed_k.row(i) {
                        if b > a {
                            continue;
                        }
                        for q in 0..c {
                            for p in 0..c {
                                let mut acc = T::zero();
                                for r in 0..br {
                                    acc += bb[r * c + p] * ba[r * c + q];
                                }
                                strip[q * rows + b * c + p] += coef_up * acc;
                            }
                        }
                    }
                }
            }
            if let Some((prev, prev_cols)) = &down {
                // (ED_{k-1} ED_{k-1}ᵀ)(b, a) = Σ_col ED(b,col) ED(a,col)ᵀ
                let pc = prev.block_cols();
                for (col, ba) in prev.row(a) {
                    for &(b, pb) in &prev_cols[col] {
                        if b > a {
                            continue;
                        }
                        let bb = prev.block_at(pb);
                        for q in 0..c {
                            for p in 0..c {
                                let mut acc = T::zero();
                                for s in 0..pc {
                                    acc += bb[p * pc + s] * ba[q * pc + s];
                                }
                                strip[q * rows + b * c + p] += coef_down * acc;
                            }
                        }
                    }
                }
            }
            strip
        })
        .collect();

    for (a, strip) in strips.into_iter().enumerate() {
        let rows = (a + 1) * c;
        for q in 0..c {
            for r in 0..rows {
                h[(r, a * c + q)] = strip[q * rows + r];
            }
        }
    }
    // Mirror the strictly upper part (including the upper half of each
    // diagonal block) into the lower triangle.
    for col in 0..dim {
        for row in 0..col {
            h[(col, row)] = h[(row, col)];
        }
    }
    Ok(HodgeMatrix { order: k, block_len: c, n_points: n, bandwidth: t, matrix: h })
}

/// Eigenpairs of `H_{k,t}`, eigenvalues descending and clamped at zero;
/// eigenvector `l` is column `l` of `vectors`, split into `N` blocks of
/// length `C(d,k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeSpectrum<T: Real> {
    pub order: usize,
    pub block_len: usize,
    pub n_points: usize,
    pub bandwidth: T,
    pub tm: u32,
    pub eigenvalues: Vec<T>,
    pub vectors: DMatrix<T>,
    /// Smallest eigenvalue before clamping.
    pub raw_min_eigenvalue: T,
}

impl<T: Real> HodgeSpectrum<T> {
    /// `N · C(d,k)`: the size of the full eigenbasis.
    pub fn full_dim(&self) -> usize {
        self.n_points * self.block_len
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.full_dim()
    }

    /// Block `i` of eigenvector `l`.
    pub fn block(&self, l: usize, i: usize) -> &[T] {
        let c = self.block_len;
        let start = l * self.vectors.nrows() + i * c;
        &self.vectors.as_slice()[start..start + c]
    }

    pub fn with_tm(mut self, tm: u32) -> Result<Self> {
        if tm == 0 {
            return Err(HodgeError::InvalidParameter("diffusion time tm must be >= 1".into()));
        }
        self.tm = tm;
        Ok(self)
    }

    /// Keeps only the leading `count` eigenpairs.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.count());
        HodgeSpectrum {
            eigenvalues: self.eigenvalues[..count].to_vec(),
            vectors: self.vectors.columns(0, count).into_owned(),
            ..self.clone()
        }
    }

    /// `λ_l^tm`.
    pub fn power(&self, l: usize) -> T {
        self.eigenvalues[l].powi(self.tm as i32)
    }

    pub fn leading(&self) -> T {
        self.eigenvalues.first().copied().unwrap_or_else(T::zero)
    }
}

/// Full dense symmetric eigendecomposition of `H`, returning at least
/// `m_request` leading eigenpairs (all of them at this scale).
pub fn spectrum<T: Real>(h: &HodgeMatrix<T>, m_request: usize, tm: u32) -> Result<HodgeSpectrum<T>> {
    let dim = h.dim();
    if m_request == 0 || m_request > dim {
        return Err(HodgeError::InvalidParameter(format!(
            "requested {m_request} eigenpairs of a {dim}-dimensional matrix"
        )));
    }
    if tm == 0 {
        return Err(HodgeError::InvalidParameter("diffusion time tm must be >= 1".into()));
    }
    let (ascending, vecs) = T::symmetric_eigen(&h.matrix);
    let mut order: Vec<usize> = (0..dim).collect();
    // stable: equal eigenvalues keep the solver's order
    order.sort_by(|&a, &b| ascending[b].partial_cmp(&ascending[a]).expect("finite eigenvalues"));
    let raw: Vec<T> = order.iter().map(|&o| ascending[o]).collect();
    let lead = raw[0];
    let min = raw[dim - 1];
    if min < -(T::lit(PSD_TOLERANCE) * lead.abs()) {
        return Err(HodgeError::NotPositiveSemidefinite { min: min.as_f64(), max: lead.as_f64() });
    }
    let mut vectors = DMatrix::from_fn(dim, dim, |r, c| vecs[(r, order[c])]);
    for mut col in vectors.column_iter_mut() {
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
    Ok(HodgeSpectrum {
        order: h.order,
        block_len: h.block_len,
        n_points: h.n_points,
        bandwidth: h.bandwidth,
        tm,
        eigenvalues: raw.into_iter().map(|v| if v < T::zero() { T::zero() } else { v }).collect(),
        vectors,
        raw_min_eigenvalue: min,
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `‖H^tm(i,j)‖²_F`, evaluated from the (possibly truncated) eigenbasis as
/// `Σ_{l1,l2} λ_{l1}^tm λ_{l2}^tm ⟨b_{l1}(i), b_{l2}(i)⟩ ⟨b_{l1}(j), b_{l2}(j)⟩`
/// via the block `Σ_l λ_l^tm b_l(i) b_l(j)ᵀ`.
pub fn affinity<T: Real>(spec: &HodgeSpectrum<T>, i: usize, j: usize) -> T {
    let c = spec.block_len;
    let mut block = vec![T::zero(); c * c];
    for l in 0..spec.count() {
        let w = spec.power(l);
        if w == T::zero() {
            continue;
        }
        let (bi, bj) = (spec.block(l, i), spec.block(l, j));
        for p in 0..c {
            for q in 0..c {
                block[p * c + q] += w * bi[p] * bj[q];
            }
        }
    }
    block.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

/// Affinity divided by `λ_1^{2tm}`.
pub fn normalized_affinity<T: Real>(spec: &HodgeSpectrum<T>, i: usize, j: usize) -> Result<T> {
    let lead = leading_power(spec)?;
    Ok(affinity(spec, i, j) / (lead * lead))
}

fn leading_power<T: Real>(spec: &HodgeSpectrum<T>) -> Result<T> {
    if !(spec.leading() > T::zero()) {
        return Err(HodgeError::DegenerateSpectrum);
    }
    Ok(spec.power(0))
}

/// Per-point symmetric `m × m` matrices of the Hodge diffusion map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T: Real> {
    pub m: usize,
    pub points: Vec<DMatrix<T>>,
}

impl<T: Real> EmbeddingMatrix<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &DMatrix<T> {
        &self.points[i]
    }

    /// `⟨η(x_i), η(x_j)⟩_F`.
    pub fn inner(&self, i: usize, j: usize) -> T {
        self.points[i].dot(&self.points[j])
    }

    /// Diagonal entries `η(x_i)[l,l]` for `l < count`.
    pub fn diagonal(&self, i: usize, count: usize) -> Vec<T> {
        (0..count.min(self.m)).map(|l| self.points[i][(l, l)]).collect()
    }
}

/// `η(x_i)[l1,l2] = √(λ_{l1}^tm) √(λ_{l2}^tm) ⟨b_{l1}(i), b_{l2}(i)⟩`.
pub fn embed<T: Real>(spec: &HodgeSpectrum<T>, m: usize) -> Result<EmbeddingMatrix<T>> {
    if m == 0 || m > spec.count() {
        return Err(HodgeError::InvalidParameter(format!(
            "truncation level m = {m} with {} eigenpairs available",
            spec.count()
        )));
    }
    let roots: Vec<T> = (0..m).map(|l| spec.power(l).sqrt()).collect();
    let points = (0..spec.n_points)
        .into_par_iter()
        .map(|i| {
            let mut eta = DMatrix::zeros(m, m);
            for l1 in 0..m {
                for l2 in l1..m {
                    let v = roots[l1] * roots[l2] * dot(spec.block(l1, i), spec.block(l2, i));
                    eta[(l1, l2)] = v;
                    eta[(l2, l1)] = v;
                }
            }
            eta
        })
        .collect();
    Ok(EmbeddingMatrix { m, points })
}

/// Embedding divided by `λ_1^tm`.
pub fn normalized_embed<T: Real>(spec: &HodgeSpectrum<T>, m: usize) -> Result<EmbeddingMatrix<T>> {
    let lead = leading_power(spec)?;
    let mut emb = embed(spec, m)?;
    for eta in &mut emb.points {
        *eta /= lead;
    }
    Ok(emb)
}

/// Squared Hodge diffusion distance
/// `‖η(x_i)‖²_F + ‖η(x_j)‖²_F - 2⟨η(x_i), η(x_j)⟩_F`, clamped at zero.
pub fn hodge_distance<T: Real>(emb: &EmbeddingMatrix<T>, i: usize, j: usize) -> T {
    let d2 = emb.inner(i, i) + emb.inner(j, j) - T::lit(2.0) * emb.inner(i, j);
    if d2 < T::zero() {
        T::zero()
    } else {
        d2
    }
}

/// Upper bound `(λ_{m+1}/λ_1)^tm ((N·C(d,k))² - m²)` on the normalized
/// truncation error of the affinity.
pub fn truncation_bound<T: Real>(spec: &HodgeSpectrum<T>, m: usize) -> Result<T> {
    let lead = spec.leading();
    if !(lead > T::zero()) {
        return Err(HodgeError::DegenerateSpectrum);
    }
    let full = spec.full_dim();
    if m == 0 || m > full {
        return Err(HodgeError::InvalidParameter(format!("m = {m} outside 1..={full}")));
    }
    let next = if m == full {
        T::zero()
    } else if m < spec.count() {
        spec.eigenvalues[m]
    } else {
        return Err(HodgeError::InvalidParameter(format!(
            "λ_{} is not available from {} eigenpairs",
            m + 1,
            spec.count()
        )));
    };
    let ratio = (next / lead).powi(spec.tm as i32);
    let terms = T::lit((full * full - m * m) as f64);
    Ok(ratio * terms)
}
