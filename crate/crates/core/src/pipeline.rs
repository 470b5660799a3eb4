//! End-to-end fit: neighbors, frames, exterior derivatives, Hodge matrix,
//! spectrum and normalized embedding.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{HodgeError, Result};
use crate::extderiv::{build_ed, BlockSparseOperator};
use crate::frames::{local_frames, DegeneratePolicy, LocalPcaOptions, TangentFrameSet};
use crate::geometry::{default_bandwidth, knn, NeighborGraph, PointCloud};
use crate::hodge::{build_hodge, normalized_embed, spectrum, truncation_bound, EmbeddingMatrix, HodgeSpectrum};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Form degree `k`.
    pub order: usize,
    /// Neighbor count `K`.
    pub knn: usize,
    pub gamma: f64,
    /// Truncation level `m`.
    pub m: usize,
    /// Diffusion time.
    pub tm: u32,
    /// Kernel bandwidth; `None` uses the mean nearest-neighbor distance.
    pub bandwidth: Option<f64>,
    pub seed: u64,
    pub degenerate: DegeneratePolicy,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            order: 1,
            knn: 30,
            gamma: 0.9,
            m: 3,
            tm: 1,
            bandwidth: None,
            seed: 0,
            degenerate: DegeneratePolicy::Reject,
        }
    }
}

impl RunConfig {
    /// Sets one field from its textual `key` and `value`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
            value
                .trim()
                .parse()
                .map_err(|_| HodgeError::InvalidParameter(format!("bad value {value:?} for {key}")))
        }
        match key.trim() {
            "k" | "k_order" | "k-order" | "order" => self.order = num(key, value)?,
            "knn" | "K" => self.knn = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "tm" => self.tm = num(key, value)?,
            "t" | "bandwidth" => self.bandwidth = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "degenerate" => {
                self.degenerate = match value.trim() {
                    "reject" => DegeneratePolicy::Reject,
                    "borrow" => DegeneratePolicy::BorrowNearest,
                    other => return Err(HodgeError::InvalidParameter(format!("unknown degenerate policy {other:?}"))),
                }
            }
            other => return Err(HodgeError::InvalidParameter(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HodgeError::Parse { line: idx + 1, msg: "expected key = value".into() })?;
            self.set(key, value).map_err(|e| HodgeError::Parse { line: idx + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(HodgeError::InvalidParameter("m must be >= 1".into()));
        }
        if self.tm == 0 {
            return Err(HodgeError::InvalidParameter("tm must be >= 1".into()));
        }
        if let Some(t) = self.bandwidth {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HodgeError::InvalidBandwidth(t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub n_points: usize,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub order: usize,
    pub bandwidth: f64,
    /// `λ_1 … λ_{m+1}` (fewer when the spectrum is smaller).
    pub leading_eigenvalues: Vec<f64>,
    pub raw_min_eigenvalue: f64,
    pub truncation_bound: f64,
    pub borrowed_frames: usize,
    pub wall_seconds: f64,
}

impl FitSummary {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "ambient_dim = {}", self.ambient_dim);
        let _ = writeln!(s, "intrinsic_dim = {}", self.intrinsic_dim);
        let _ = writeln!(s, "k = {}", self.order);
        let _ = writeln!(s, "t = {:.16e}", self.bandwidth);
        for (l, v) in self.leading_eigenvalues.iter().enumerate() {
            let _ = writeln!(s, "lambda_{} = {:.16e}", l + 1, v);
        }
        let _ = writeln!(s, "raw_min_eigenvalue = {:.16e}", self.raw_min_eigenvalue);
        let _ = writeln!(s, "truncation_bound = {:.16e}", self.truncation_bound);
        let _ = writeln!(s, "borrowed_frames = {}", self.borrowed_frames);
        let _ = writeln!(s, "wall_seconds = {:.3}", self.wall_seconds);
        s
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T: Real> {
    pub config: RunConfig,
    pub graph: NeighborGraph<T>,
    pub frames: TangentFrameSet<T>,
    pub ed: BlockSparseOperator<T>,
    pub spectrum: HodgeSpectrum<T>,
    pub embedding: EmbeddingMatrix<T>,
    pub summary: FitSummary,
}

/// Neighbor graph with the configured (or default) bandwidth attached, and
/// local frames.
pub fn prepare<T: Real>(cloud: &PointCloud<T>, config: &RunConfig) -> Result<(NeighborGraph<T>, TangentFrameSet<T>)> {
    config.validate()?;
    let t = match config.bandwidth {
        Some(t) => T::lit(t),
        None => default_bandwidth(cloud)?,
    };
    let graph = knn(cloud, config.knn)?.with_bandwidth(t)?;
    let options = LocalPcaOptions { gamma: config.gamma, degenerate: config.degenerate };
    let frames = local_frames(cloud, &graph, &options)?;
    Ok((graph, frames))
}

pub fn fit<T: Real>(cloud: &PointCloud<T>, config: &RunConfig) -> Result<FitResult<T>> {
    let start = Instant::now();
    let (graph, frames) = prepare(cloud, config)?;
    let d = frames.intrinsic_dimension();
    let k = config.order;
    if k > d {
        return Err(HodgeError::OrderOutOfRange { k, d });
    }
    let ed = build_ed(cloud, &graph, &frames, k)?;
    let lower = if k > 0 { Some(build_ed(cloud, &graph, &frames, k - 1)?) } else { None };
    let h = build_hodge(&ed, lower.as_ref())?;
    drop(lower);
    let dim = h.dim();
    if config.m > dim {
        return Err(HodgeError::InvalidParameter(format!("m = {} exceeds the {dim} available eigenpairs", config.m)));
    }
    let spec = spectrum(&h, (config.m + 1).min(dim), config.tm)?;
    drop(h);
    let embedding = normalized_embed(&spec, config.m)?;
    let bound = truncation_bound(&spec, config.m)?;
    let summary = FitSummary {
        n_points: cloud.len(),
        ambient_dim: cloud.ambient_dim(),
        intrinsic_dim: d,
        order: k,
        bandwidth: graph.require_bandwidth()?.as_f64(),
        leading_eigenvalues: spec.eigenvalues.iter().take(config.m + 1).map(|v| v.as_f64()).collect(),
        raw_min_eigenvalue: spec.raw_min_eigenvalue.as_f64(),
        truncation_bound: bound.as_f64(),
        borrowed_frames: frames.borrowed().len(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(FitResult { config: config.clone(), graph, frames, ed, spectrum: spec, embedding, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::circle;

    #[test]
    fn config_file_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_file("# tuned\nk = 0\nknn=12\n\nt = 0.25\ndegenerate = borrow\n").unwrap();
        assert_eq!(c.order, 0);
        assert_eq!(c.knn, 12);
        assert_eq!(c.bandwidth, Some(0.25));
        assert_eq!(c.degenerate, DegeneratePolicy::BorrowNearest);
        assert!(matches!(c.apply_file("m 3"), Err(HodgeError::Parse { line: 1, .. })));
        assert!(c.set("colour", "red").is_err());
    }

    #[test]
    fn zero_bandwidth_is_rejected() {
        let cloud = circle::<f64>(40).unwrap().cloud;
        let cfg = RunConfig { bandwidth: Some(0.0), knn: 6, ..RunConfig::default() };
        assert!(matches!(fit(&cloud, &cfg), Err(HodgeError::InvalidBandwidth(_))));
    }

    #[test]
    fn circle_fit_shapes() {
        let cloud = circle::<f64>(60).unwrap().cloud;
        let cfg = RunConfig { order: 0, knn: 8, ..RunConfig::default() };
        let r = fit(&cloud, &cfg).unwrap();
        assert_eq!(r.summary.intrinsic_dim, 1);
        assert_eq!(r.embedding.len(), 60);
        assert_eq!(r.embedding.m, 3);
        assert_eq!(r.summary.leading_eigenvalues.len(), 4);
        // normalized: the leading diagonal entries average to 1/N
        let mean: f64 = (0..60).map(|i| r.embedding.point(i)[(0, 0)]).sum::<f64>() / 60.0;
        assert!((mean - 1.0 / 60.0).abs() < 1e-12);
        let over = RunConfig { order: 2, ..cfg };
        assert!(matches!(fit(&cloud, &over), Err(HodgeError::OrderOutOfRange { k: 2, d: 1 })));
    }
}
