//! Multi-indices, alternating arrays and wedge products.
//!
//! A k-alternating array on `R^n` is a dense `n^k` table that changes sign
//! under any transposition of its indices. The production pipeline never
//! materialises these tables (it works with determinants of minors in
//! [`crate::extderiv`]); they exist here for small cases and as an
//! independent check on the determinant formulas.
//!
//! Wedge convention: `a ∧ b = 1/(k1! k2!) Σ_σ sgn(σ) (a ⊗ b)^σ`, so that
//! `v1 ∧ … ∧ vk` of orthonormal vectors has squared Frobenius norm `k!` and
//! `(1/√k!) v1 ∧ … ∧ vk` is a unit array.

use std::fmt;

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{HodgeError, Result};
use crate::scalar::Real;

/// Strictly increasing tuple of 0-based axis indices (displayed 1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HodgeError::InvalidParameter(format!(
                "multi-index entries must be strictly increasing: {entries:?}"
            )));
        }
        Ok(MultiIndex(entries))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Entries shifted to the 1-based convention.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|e| e + 1).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.one_based().iter().join(","))
    }
}

/// All strictly increasing `k`-tuples from `0..d`, in lexicographic order.
///
/// This ordering is the canonical row/column ordering of every block in the
/// crate.
pub fn enumerate_multi_indices(d: usize, k: usize) -> Vec<MultiIndex> {
    if k > d {
        return Vec::new();
    }
    (0..d).combinations(k).map(MultiIndex).collect()
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Sign of a permutation given as a slice of images.
pub fn permutation_sign(perm: &[usize]) -> i32 {
    let mut inversions = 0;
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if perm[a] > perm[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Determinant of a small square matrix stored row-major, by Gaussian
/// elimination with partial pivoting. The buffer is consumed as scratch.
pub fn det_in_place<T: Real>(a: &mut [T], n: usize) -> T {
    debug_assert_eq!(a.len(), n * n);
    let mut det = T::one();
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == T::zero() {
            return T::zero();
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor != T::zero() {
                for c in col + 1..n {
                    let v = a[col * n + c];
                    a[row * n + c] -= factor * v;
                }
            }
        }
    }
    det
}

/// Compound matrix `C_k(R)`: entry `(L, J)` is `det(R[L, J])`, rows and
/// columns in lexicographic multi-index order. For orthogonal `R` this is the
/// induced rotation on coefficients with respect to a wedge basis.
pub fn compound_matrix<T: Real>(r: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let rows = enumerate_multi_indices(r.nrows(), k);
    let cols = enumerate_multi_indices(r.ncols(), k);
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    let mut scratch = vec![T::zero(); k * k];
    for (a, l) in rows.iter().enumerate() {
        for (b, j) in cols.iter().enumerate() {
            for (p, &lp) in l.entries().iter().enumerate() {
                for (q, &jq) in j.entries().iter().enumerate() {
                    scratch[p * k + q] = r[(lp, jq)];
                }
            }
            out[(a, b)] = det_in_place(&mut scratch, k);
        }
    }
    out
}

/// Dense k-dimensional array over `R^n` (index tuples in row-major order).
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingArray<T> {
    order: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> AlternatingArray<T> {
    pub fn zeros(order: usize, dim: usize) -> Self {
        AlternatingArray { order, dim, data: vec![T::zero(); dim.pow(order as u32)] }
    }

    /// The 0-array holding a single scalar.
    pub fn scalar(value: T) -> Self {
        AlternatingArray { order: 0, dim: 0, data: vec![value] }
    }

    /// A 1-array, i.e. a covector identified with `v`.
    pub fn from_vector(v: &[T]) -> Self {
        AlternatingArray { order: 1, dim: v.len(), data: v.to_vec() }
    }

    /// Builds an array from raw row-major data without checking antisymmetry.
    pub fn from_raw(order: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim.pow(order as u32) {
            return Err(HodgeError::ShapeMismatch(format!(
                "{} entries for order {order} over R^{dim}",
                data.len()
            )));
        }
        Ok(AlternatingArray { order, dim, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        index.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn scale(&self, s: T) -> Self {
        AlternatingArray {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(AlternatingArray {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn frobenius_norm_squared(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// Largest deviation from antisymmetry over all transpositions.
    pub fn antisymmetry_defect(&self) -> T {
        let mut worst = T::zero();
        let mut idx = vec![0; self.order];
        for flat in 0..self.data.len() {
            decode(flat, self.dim, &mut idx);
            for a in 0..self.order {
                for b in a + 1..self.order {
                    let mut swapped = idx.clone();
                    swapped.swap(a, b);
                    let defect = (self.data[flat] + self.get(&swapped)).abs();
                    if defect > worst {
                        worst = defect;
                    }
                }
            }
        }
        worst
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.data.len() != other.data.len() {
            return Err(HodgeError::ShapeMismatch(format!(
                "order {} over R^{} vs order {} over R^{}",
                self.order, self.dim, other.order, other.dim
            )));
        }
        Ok(())
    }
}

fn decode(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

fn ambient_dim<T: Real>(a: &AlternatingArray<T>, b: &AlternatingArray<T>) -> Result<usize> {
    match (a.order, b.order) {
        (0, _) => Ok(b.dim),
        (_, 0) => Ok(a.dim),
        _ if a.dim == b.dim => Ok(a.dim),
        _ => Err(HodgeError::ShapeMismatch(format!(
            "wedge of arrays over R^{} and R^{}",
            a.dim, b.dim
        ))),
    }
}

/// Wedge product of two alternating arrays.
pub fn wedge_arrays<T: Real>(
    a: &AlternatingArray<T>,
    b: &AlternatingArray<T>,
) -> Result<AlternatingArray<T>> {
    let n = ambient_dim(a, b)?;
    let (k1, k2) = (a.order, b.order);
    let order = k1 + k2;
    let perms: Vec<(Vec<usize>, T)> = (0..order)
        .permutations(order)
        .map(|p| {
            let s = T::lit(permutation_sign(&p) as f64);
            (p, s)
        })
        .collect();
    let norm = T::lit(1.0 / (factorial(k1) * factorial(k2)) as f64);
    let mut out = AlternatingArray::zeros(order, n);
    if order == 0 {
        out.dim = n;
        out.data[0] = a.data[0] * b.data[0];
        return Ok(out);
    }
    let mut idx = vec![0; order];
    let mut permuted = vec![0; order];
    for flat in 0..out.data.len() {
        decode(flat, n, &mut idx);
        let mut acc = T::zero();
        for (p, sign) in &perms {
            for (slot, &src) in permuted.iter_mut().zip(p) {
                *slot = idx[src];
            }
            let va = if k1 == 0 { a.data[0] } else { a.get(&permuted[..k1]) };
            let vb = if k2 == 0 { b.data[0] } else { b.get(&permuted[k1..]) };
            acc += *sign * va * vb;
        }
        out.data[flat] = acc * norm;
    }
    Ok(out)
}

/// Frobenius inner product `Σ a[I] b[I]` over all index tuples.
pub fn frobenius_inner<T: Real>(a: &AlternatingArray<T>, b: &AlternatingArray<T>) -> Result<T> {
    a.check_same_shape(b)?;
    Ok(a.data.iter().zip(&b.data).fold(T::zero(), |acc, (&x, &y)| acc + x * y))
}

/// The orthonormal basis `O_J = (1/√k!) O_{j1} ∧ … ∧ O_{jk}` of k-arrays on the
/// span of the frame columns, in lexicographic `J` order.
pub fn wedge_basis<T: Real>(frame: &DMatrix<T>, k: usize) -> Vec<AlternatingArray<T>> {
    let n = frame.nrows();
    let scale = T::one() / T::lit(factorial(k) as f64).sqrt();
    enumerate_multi_indices(frame.ncols(), k)
        .into_iter()
        .map(|j| {
            let mut acc = AlternatingArray::scalar(T::one());
            acc.dim = n;
            for &col in j.entries() {
                let v: Vec<T> = frame.column(col).iter().copied().collect();
                acc = wedge_arrays(&acc, &AlternatingArray::from_vector(&v))
                    .expect("frame columns share the ambient dimension");
            }
            acc.scale(scale)
        })
        .collect()
}

/// Coefficients of the orthogonal projection of `w` onto the wedge basis
/// spanned by an orthonormal frame: `⟨w, O_J⟩_F` for each `J`.
pub fn project_alternating<T: Real>(w: &AlternatingArray<T>, frame: &DMatrix<T>) -> Result<Vec<T>> {
    if w.order > 0 && w.dim != frame.nrows() {
        return Err(HodgeError::ShapeMismatch(format!(
            "array over R^{} projected on a frame in R^{}",
            w.dim,
            frame.nrows()
        )));
    }
    wedge_basis(frame, w.order)
        .iter()
        .map(|basis| {
            if w.order == 0 {
                Ok(w.data[0] * basis.data[0])
            } else {
                frobenius_inner(w, basis)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> AlternatingArray<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        AlternatingArray::from_vector(&v)
    }

    fn tuples(v: &[MultiIndex]) -> Vec<Vec<usize>> {
        v.iter().map(|m| m.one_based()).collect()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(tuples(&enumerate_multi_indices(3, 2)), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(tuples(&enumerate_multi_indices(5, 0)), vec![Vec::<usize>::new()]);
        assert!(enumerate_multi_indices(2, 3).is_empty());
        for d in 0..7 {
            for k in 0..8 {
                assert_eq!(enumerate_multi_indices(d, k).len(), binomial(d, k));
            }
        }
    }

    #[test]
    fn multi_index_rejects_unsorted() {
        assert!(MultiIndex::new(vec![1, 1]).is_err());
        assert!(MultiIndex::new(vec![2, 0]).is_err());
        assert_eq!(MultiIndex::new(vec![0, 2]).unwrap().to_string(), "(1,3)");
    }

    #[test]
    fn wedge_of_basis_vectors() {
        let w = wedge_arrays(&e(2, 0), &e(2, 1)).unwrap();
        assert_eq!(w.data(), &[0.0, 1.0, -1.0, 0.0]);
        let zero = wedge_arrays(&e(3, 0), &e(3, 0)).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
        let swapped = wedge_arrays(&e(3, 1), &e(3, 0)).unwrap();
        let forward = wedge_arrays(&e(3, 0), &e(3, 1)).unwrap();
        assert_eq!(forward.add(&swapped).unwrap().frobenius_norm_squared(), 0.0);
    }

    #[test]
    fn wedge_rejects_mismatched_dims() {
        assert!(wedge_arrays(&e(2, 0), &e(3, 0)).is_err());
    }

    #[test]
    fn frobenius_examples() {
        let w = AlternatingArray::from_raw(2, 2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        assert_eq!(frobenius_inner(&w, &w).unwrap(), 2.0);
        assert_eq!(frobenius_inner(&w, &AlternatingArray::zeros(2, 2)).unwrap(), 0.0);
        let unit = wedge_arrays(&e(2, 0), &e(2, 1)).unwrap().scale(1.0 / 2f64.sqrt());
        assert!((frobenius_inner(&unit, &unit).unwrap() - 1.0).abs() < 1e-15);
        assert!(frobenius_inner(&w, &AlternatingArray::zeros(1, 2)).is_err());
    }

    #[test]
    fn projection_of_basis_element() {
        let frame = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let o12 = wedge_arrays(&e(3, 0), &e(3, 1)).unwrap().scale(1.0 / 2f64.sqrt());
        let c = project_alternating(&o12, &frame).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0] - 1.0).abs() < 1e-15);

        // built from a normal direction: invisible to the tangent wedges
        let normal = wedge_arrays(&e(3, 0), &e(3, 2)).unwrap();
        let c = project_alternating(&normal, &frame).unwrap();
        assert_eq!(c, vec![0.0]);
        let c1 = project_alternating(&e(3, 2), &frame).unwrap();
        assert_eq!(c1, vec![0.0, 0.0]);
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(det_in_place::<f64>(&mut [], 0), 1.0);
        assert_eq!(det_in_place(&mut [2.5], 1), 2.5);
        assert_eq!(det_in_place(&mut [0.0, 1.0, 1.0, 0.0], 2), -1.0);
        let mut m = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        assert!((det_in_place::<f64>(&mut m, 3) - 4.0).abs() < 1e-14);
        assert_eq!(det_in_place(&mut [1.0, 2.0, 2.0, 4.0], 2), 0.0);
    }

    #[test]
    fn compound_of_identity_is_identity() {
        let id = DMatrix::<f64>::identity(4, 4);
        for k in 0..=4 {
            let c = compound_matrix(&id, k);
            assert_eq!(c, DMatrix::identity(binomial(4, k), binomial(4, k)));
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(30, 15), 155_117_520);
    }
}
