//! Point clouds, exact k-nearest-neighbor graphs and Gaussian kernel weights.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{HodgeError, Result};
use crate::scalar::Real;

/// `N` points in `R^n`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T: Real> {
    points: DMatrix<T>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: DMatrix<T>) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(HodgeError::InvalidParameter(format!(
                "a point cloud needs at least 2 points, got {}",
                points.nrows()
            )));
        }
        if points.ncols() < 1 {
            return Err(HodgeError::InvalidParameter("ambient dimension must be >= 1".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(HodgeError::InvalidParameter("point coordinates must be finite".into()));
        }
        Ok(PointCloud { points })
    }

    /// Builds a cloud from row vectors of equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(HodgeError::ShapeMismatch("rows of unequal length".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<T> {
        &self.points
    }

    pub fn point(&self, i: usize) -> Vec<T> {
        self.points.row(i).iter().copied().collect()
    }

    /// `x_j - x_i` as a column vector.
    pub fn displacement(&self, i: usize, j: usize) -> nalgebra::DVector<T> {
        nalgebra::DVector::from_fn(self.ambient_dim(), |c, _| {
            self.points[(j, c)] - self.points[(i, c)]
        })
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> T {
        let mut acc = T::zero();
        for c in 0..self.ambient_dim() {
            let d = self.points[(j, c)] - self.points[(i, c)];
            acc += d * d;
        }
        acc
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        self.squared_distance(i, j).sqrt()
    }
}

/// Gaussian weight `exp(-r² / 2t²)` for squared distance `r²`.
#[inline]
pub fn gaussian_weight<T: Real>(squared_distance: T, t: T) -> T {
    (-squared_distance / (T::lit(2.0) * t * t)).exp()
}

/// Per-point K nearest neighbors (self excluded), sorted by distance and then
/// by index, plus the kernel bandwidth once it has been chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph<T: Real> {
    k: usize,
    neighbors: Vec<usize>,
    distances: Vec<T>,
    bandwidth: Option<T>,
}

impl<T: Real> NeighborGraph<T> {
    pub fn num_points(&self) -> usize {
        self.neighbors.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[T] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    pub fn bandwidth(&self) -> Option<T> {
        self.bandwidth
    }

    pub fn require_bandwidth(&self) -> Result<T> {
        self.bandwidth.ok_or(HodgeError::BandwidthUnset)
    }

    pub fn with_bandwidth(mut self, t: T) -> Result<Self> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(HodgeError::InvalidBandwidth(t.as_f64()));
        }
        self.bandwidth = Some(t);
        Ok(self)
    }

    /// Whether `j` belongs to `{i} ∪ knn(i)`.
    pub fn in_neighborhood(&self, i: usize, j: usize) -> bool {
        i == j || self.neighbors(i).contains(&j)
    }
}

/// Exact Euclidean K-nearest neighbors by brute force.
pub fn knn<T: Real>(cloud: &PointCloud<T>, k: usize) -> Result<NeighborGraph<T>> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(HodgeError::NeighborCount { k, n });
    }
    let rows: Vec<(Vec<usize>, Vec<T>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (cloud.squared_distance(i, j), j))
                .collect();
            let by_distance_then_index = |a: &(T, usize), b: &(T, usize)| {
                a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1))
            };
            cand.select_nth_unstable_by(k - 1, by_distance_then_index);
            cand.truncate(k);
            cand.sort_by(by_distance_then_index);
            cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).unzip()
        })
        .collect();
    let mut neighbors = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for (nb, ds) in rows {
        neighbors.extend(nb);
        distances.extend(ds);
    }
    Ok(NeighborGraph { k, neighbors, distances, bandwidth: None })
}

/// Mean over points of the distance to the nearest other point.
pub fn default_bandwidth<T: Real>(cloud: &PointCloud<T>) -> Result<T> {
    let n = cloud.len();
    let nearest: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| cloud.squared_distance(i, j))
                .fold(T::max_value().expect("bounded float"), |a, b| if b < a { b } else { a })
                .sqrt()
        })
        .collect();
    let t = nearest.iter().fold(T::zero(), |a, &b| a + b) / T::lit(n as f64);
    if !(t > T::zero()) {
        return Err(HodgeError::InvalidBandwidth(t.as_f64()));
    }
    Ok(t)
}

/// Kernel normalizer `Σ_{j ∈ {i} ∪ knn(i)} exp(-‖x_j - x_i‖² / 2t²)`.
///
/// The self term makes the result at least one.
pub fn normalizer<T: Real>(graph: &NeighborGraph<T>, i: usize) -> Result<T> {
    let t = graph.require_bandwidth()?;
    Ok(graph
        .distances(i)
        .iter()
        .fold(T::one(), |acc, &d| acc + gaussian_weight(d * d, t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointCloud<f64> {
        PointCloud::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn knn_on_a_line() {
        let g = knn(&line(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.neighbors(2), &[1]);
        let full = knn(&line(&[0.0, 1.0, 3.0]), 2).unwrap();
        assert_eq!(full.neighbors(2), &[1, 0]);
        assert_eq!(full.distances(2), &[2.0, 3.0]);
    }

    #[test]
    fn knn_ties_break_by_index() {
        // unit square corners: 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1)
        let sq = PointCloud::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let g = knn(&sq, 2).unwrap();
        // brute force: each corner has two neighbors at distance 1, one at √2
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.neighbors(1), &[0, 3]);
        assert_eq!(g.neighbors(2), &[0, 3]);
        assert_eq!(g.neighbors(3), &[1, 2]);
        let g1 = knn(&sq, 1).unwrap();
        assert_eq!(g1.neighbors(3), &[1]);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let c = line(&[0.0, 1.0, 3.0]);
        assert!(matches!(knn(&c, 0), Err(HodgeError::NeighborCount { .. })));
        assert!(matches!(knn(&c, 3), Err(HodgeError::NeighborCount { .. })));
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(default_bandwidth(&line(&[0.0, 1.0])).unwrap(), 1.0);
        assert!((default_bandwidth(&line(&[0.0, 1.0, 3.0])).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            default_bandwidth(&line(&[2.0, 2.0, 2.0])),
            Err(HodgeError::InvalidBandwidth(_))
        ));
    }

    #[test]
    fn normalizer_examples() {
        // far neighbors: only the self term survives
        let g = knn(&line(&[0.0, 100.0, 200.0]), 2).unwrap().with_bandwidth(1.0).unwrap();
        assert!((normalizer(&g, 0).unwrap() - 1.0).abs() < 1e-12);

        // neighbor at distance t·√(2 ln 2) has weight exactly one half
        let t = 0.7;
        let r = t * (2.0 * 2f64.ln()).sqrt();
        let g = knn(&line(&[0.0, r]), 1).unwrap().with_bandwidth(t).unwrap();
        assert!((normalizer(&g, 0).unwrap() - 1.5).abs() < 1e-14);

        let g = knn(&line(&[5.0, 5.0, 5.0]), 2).unwrap().with_bandwidth(0.3).unwrap();
        assert_eq!(normalizer(&g, 1).unwrap(), 3.0);
    }

    #[test]
    fn normalizer_needs_bandwidth() {
        let g = knn(&line(&[0.0, 1.0]), 1).unwrap();
        assert!(matches!(normalizer(&g, 0), Err(HodgeError::BandwidthUnset)));
        assert!(g.clone().with_bandwidth(0.0).is_err());
        assert!(g.with_bandwidth(f64::NAN).is_err());
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::from_rows(&[vec![1.0]]).is_err());
        assert!(PointCloud::from_rows(&[vec![1.0], vec![f64::INFINITY]]).is_err());
        assert!(PointCloud::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
