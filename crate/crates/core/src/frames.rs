//! Local PCA: per-point orthonormal tangent frames and the intrinsic dimension.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{HodgeError, Result};
use crate::geometry::{gaussian_weight, NeighborGraph, PointCloud};
use crate::scalar::Real;

/// What to do with a point whose weighted neighborhood matrix is identically
/// zero (every neighbor coincides with the point).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    /// Fail with [`HodgeError::DegenerateNeighborhood`].
    #[default]
    Reject,
    /// Leave the point out of the dimension vote and give it the frame of the
    /// nearest point (by distance, then index) whose neighborhood is not
    /// degenerate.
    BorrowNearest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPcaOptions {
    /// Cumulative singular-value energy threshold, in `(0, 1)`.
    pub gamma: f64,
    pub degenerate: DegeneratePolicy,
}

impl Default for LocalPcaOptions {
    fn default() -> Self {
        LocalPcaOptions { gamma: 0.9, degenerate: DegeneratePolicy::Reject }
    }
}

/// Orthonormal `n × d` tangent bases, one per point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrameSet<T: Real> {
    dim: usize,
    frames: Vec<DMatrix<T>>,
    local_dims: Vec<usize>,
    borrowed: Vec<usize>,
}

impl<T: Real> TangentFrameSet<T> {
    /// Wraps externally supplied frames (e.g. deserialized ones). Columns are
    /// checked for orthonormality to `1e-6`.
    pub fn from_frames(frames: Vec<DMatrix<T>>) -> Result<Self> {
        let dim = frames.first().map_or(0, |f| f.ncols());
        let n = frames.first().map_or(0, |f| f.nrows());
        for (i, f) in frames.iter().enumerate() {
            if f.ncols() != dim || f.nrows() != n {
                return Err(HodgeError::ShapeMismatch(format!("frame {i} has shape {:?}", f.shape())));
            }
            if orthonormality_defect(f) > T::lit(1e-6) {
                return Err(HodgeError::InvalidParameter(format!("frame {i} is not orthonormal")));
            }
        }
        let local_dims = vec![dim; frames.len()];
        Ok(TangentFrameSet { dim, frames, local_dims, borrowed: Vec::new() })
    }

    pub fn intrinsic_dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frames.first().map_or(0, |f| f.nrows())
    }

    pub fn frame(&self, i: usize) -> &DMatrix<T> {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[DMatrix<T>] {
        &self.frames
    }

    /// Raw per-point dimension estimates `d_i` (0 for degenerate points).
    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    /// Points whose frame was borrowed from a neighbor.
    pub fn borrowed(&self) -> &[usize] {
        &self.borrowed
    }

    /// Replaces every frame `O(x_i)` by `O(x_i) R_i`.
    pub fn rotated(&self, rotations: &[DMatrix<T>]) -> Result<Self> {
        if rotations.len() != self.frames.len() {
            return Err(HodgeError::ShapeMismatch(format!(
                "{} rotations for {} frames",
                rotations.len(),
                self.frames.len()
            )));
        }
        let frames = self
            .frames
            .iter()
            .zip(rotations)
            .map(|(o, r)| {
                if r.shape() != (self.dim, self.dim) {
                    return Err(HodgeError::ShapeMismatch(format!("rotation of shape {:?}", r.shape())));
                }
                Ok(o * r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TangentFrameSet { frames, ..self.clone() })
    }
}

/// `max |OᵀO - I|`.
pub fn orthonormality_defect<T: Real>(frame: &DMatrix<T>) -> T {
    let gram = frame.transpose() * frame;
    (gram - DMatrix::identity(frame.ncols(), frame.ncols())).amax()
}

/// Lower median of a list of integers.
pub fn lower_median(values: &[usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

/// Smallest `d` whose leading singular values carry at least `gamma` of the
/// total, or `None` when all vanish.
pub fn energy_dimension<T: Real>(singular_values: &[T], gamma: f64) -> Option<usize> {
    let total = singular_values.iter().fold(T::zero(), |a, &s| a + s.abs());
    if !(total > T::zero()) {
        return None;
    }
    let mut acc = T::zero();
    for (idx, s) in singular_values.iter().enumerate() {
        acc += s.abs();
        if (acc / total).as_f64() >= gamma {
            return Some(idx + 1);
        }
    }
    Some(singular_values.len())
}

struct LocalSvd<T: Real> {
    /// Left singular vectors sorted by decreasing singular value.
    basis: DMatrix<T>,
    dim: Option<usize>,
}

fn local_svd<T: Real>(
    cloud: &PointCloud<T>,
    graph: &NeighborGraph<T>,
    i: usize,
    t: T,
    gamma: f64,
) -> LocalSvd<T> {
    let n = cloud.ambient_dim();
    let nb = graph.neighbors(i);
    let mut m = DMatrix::zeros(n, nb.len());
    for (col, (&j, &dist)) in nb.iter().zip(graph.distances(i)).enumerate() {
        let w = gaussian_weight(dist * dist, t);
        for r in 0..n {
            m[(r, col)] = (cloud.points()[(j, r)] - cloud.points()[(i, r)]) * w;
        }
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
            .then(a.cmp(&b))
    });
    let sv: Vec<T> = order.iter().map(|&o| svd.singular_values[o]).collect();
    let cap = nb.len().min(n);
    let dim = energy_dimension(&sv, gamma).map(|d| d.clamp(1, cap));
    let basis = DMatrix::from_fn(n, order.len(), |r, c| u[(r, order[c])]);
    LocalSvd { basis, dim }
}

/// Flips each column so that its largest-magnitude entry (first on ties) is
/// positive.
fn fix_signs<T: Real>(frame: &mut DMatrix<T>) {
    for mut col in frame.column_iter_mut() {
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
}

/// Runs local PCA on every point: weighted displacement matrix, SVD,
/// per-point dimension by singular-value energy, global dimension as the lower
/// median, then the leading `d` left singular vectors as the frame.
pub fn local_frames<T: Real>(
    cloud: &PointCloud<T>,
    graph: &NeighborGraph<T>,
    options: &LocalPcaOptions,
) -> Result<TangentFrameSet<T>> {
    if !(options.gamma > 0.0 && options.gamma < 1.0) {
        return Err(HodgeError::InvalidParameter(format!(
            "gamma must lie in (0, 1), got {}",
            options.gamma
        )));
    }
    if graph.num_points() != cloud.len() {
        return Err(HodgeError::ShapeMismatch(format!(
            "graph over {} points, cloud of {}",
            graph.num_points(),
            cloud.len()
        )));
    }
    let t = graph.require_bandwidth()?;
    let local: Vec<LocalSvd<T>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| local_svd(cloud, graph, i, t, options.gamma))
        .collect();

    let degenerate: Vec<usize> = local
        .iter()
        .enumerate()
        .filter(|(_, l)| l.dim.is_none())
        .map(|(i, _)| i)
        .collect();
    if let (Some(&first), DegeneratePolicy::Reject) = (degenerate.first(), options.degenerate) {
        return Err(HodgeError::DegenerateNeighborhood(first));
    }
    let votes: Vec<usize> = local.iter().filter_map(|l| l.dim).collect();
    let dim = lower_median(&votes).ok_or(HodgeError::DegenerateNeighborhood(0))?;

    let mut frames: Vec<Option<DMatrix<T>>> = local
        .iter()
        .map(|l| {
            l.dim.map(|_| {
                let mut f = l.basis.columns(0, dim).into_owned();
                fix_signs(&mut f);
                f
            })
        })
        .collect();
    for &i in &degenerate {
        let donor = (0..cloud.len())
            .filter(|&j| local[j].dim.is_some())
            .min_by(|&a, &b| {
                cloud
                    .squared_distance(i, a)
                    .partial_cmp(&cloud.squared_distance(i, b))
                    .expect("finite distances")
                    .then(a.cmp(&b))
            })
            .expect("at least one non-degenerate point");
        frames[i] = frames[donor].clone();
    }
    Ok(TangentFrameSet {
        dim,
        frames: frames.into_iter().map(|f| f.expect("every frame assigned")).collect(),
        local_dims: local.iter().map(|l| l.dim.unwrap_or(0)).collect(),
        borrowed: degenerate,
    })
}
