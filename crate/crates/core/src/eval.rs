//! Evaluation suites: structural invariants, convergence of the estimated
//! exterior derivative on the circle, and the torus/sphere reproduction runs.

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::datasets::{circle, circle_tangent, sphere_grid, torus_grid, torus_random, CircleForm};
use crate::error::{HodgeError, Result};
use crate::extderiv::{apply_exterior_derivative, build_ed, CoefficientField};
use crate::frames::{local_frames, DegeneratePolicy, LocalPcaOptions, TangentFrameSet};
use crate::geometry::{default_bandwidth, knn, NeighborGraph, PointCloud};
use crate::hodge::{
    affinity, build_hodge, embed, hodge_distance, normalized_affinity, normalized_embed, spectrum, truncation_bound,
    HodgeMatrix, HodgeSpectrum,
};
use crate::pipeline::{fit, prepare, FitResult, RunConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
}

impl CriterionOutcome {
    fn new(id: u8, name: &'static str, passed: bool, measured: String) -> Self {
        CriterionOutcome { id, name, passed, measured }
    }

    fn failed(id: u8, name: &'static str, err: HodgeError) -> Self {
        CriterionOutcome { id, name, passed: false, measured: format!("error: {err}") }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}. {}: {}", self.id, self.name, self.measured)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariants,
    Convergence,
    Paper,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "invariants" => Some(Suite::Invariants),
            "convergence" => Some(Suite::Convergence),
            "paper" => Some(Suite::Paper),
            _ => None,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<CriterionOutcome> {
    match suite {
        Suite::Invariants => vec![laplacian_structure(), basis_invariance(seed), spectral_identity(), truncation_check()],
        Suite::Convergence => vec![circle_convergence()],
        Suite::Paper => {
            let mut out = vec![intrinsic_dimension()];
            match torus_reference_fit() {
                Ok((res, secs)) => {
                    out.push(section_straightness(&res));
                    out.push(runtime_budget(secs));
                }
                Err(e) => {
                    out.push(CriterionOutcome::new(7, SECTIONS, false, format!("error: {e}")));
                    out.push(CriterionOutcome::failed(8, BUDGET, e));
                }
            }
            out
        }
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn graph_for<T: Real>(cloud: &PointCloud<T>, k: usize, t: Option<T>) -> Result<NeighborGraph<T>> {
    let t = match t {
        Some(t) => t,
        None => default_bandwidth(cloud)?,
    };
    knn(cloud, k)?.with_bandwidth(t)
}

fn hodge_for(
    cloud: &PointCloud<f64>,
    graph: &NeighborGraph<f64>,
    frames: &TangentFrameSet<f64>,
    k: usize,
) -> Result<HodgeMatrix<f64>> {
    let ed = build_ed(cloud, graph, frames, k)?;
    let lower = if k > 0 { Some(build_ed(cloud, graph, frames, k - 1)?) } else { None };
    build_hodge(&ed, lower.as_ref())
}

// ---------------------------------------------------------------- 1

const DIMENSION: &str = "intrinsic dimension on torus and sphere grids";

/// Local PCA on the 50×50 torus and sphere grids at the default parameters.
/// Sphere-pole duplicates borrow their frame from the nearest regular point.
pub fn intrinsic_dimension() -> CriterionOutcome {
    let run = || -> Result<CriterionOutcome> {
        let start = Instant::now();
        let cfg = RunConfig { degenerate: DegeneratePolicy::BorrowNearest, ..RunConfig::default() };
        let torus = torus_grid::<f64>(50)?;
        let sphere = sphere_grid::<f64>(50)?;
        let (_, tf) = prepare(&torus.cloud, &cfg)?;
        let (_, sf) = prepare(&sphere.cloud, &cfg)?;
        let secs = start.elapsed().as_secs_f64();
        let (dt, ds) = (tf.intrinsic_dimension(), sf.intrinsic_dimension());
        Ok(CriterionOutcome::new(
            1,
            DIMENSION,
            dt == 2 && ds == 2 && secs <= 60.0,
            format!(
                "torus d={dt}, sphere d={ds} ({} degenerate pole points), {secs:.2} s (limit 60 s)",
                sf.borrowed().len()
            ),
        ))
    };
    run().unwrap_or_else(|e| CriterionOutcome::failed(1, DIMENSION, e))
}

// ---------------------------------------------------------------- 2

const CONVERGENCE: &str = "exterior derivative of sin on the circle";

/// Max coefficient error of the estimated `d(sin θ)` against `cos θ` in each
/// point's frame, for every bandwidth in `scales` (multiples of the default).
pub fn circle_derivative_errors(n: usize, knn_count: usize, scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    let data = circle::<f64>(n)?;
    let base = default_bandwidth(&data.cloud)?;
    let form = CircleForm::Sin;
    let mut out = Vec::with_capacity(scales.len());
    for &s in scales {
        let t = base * s;
        let graph = graph_for(&data.cloud, knn_count, Some(t))?;
        let frames = local_frames(&data.cloud, &graph, &LocalPcaOptions::default())?;
        if frames.intrinsic_dimension() != 1 {
            return Err(HodgeError::InvalidParameter(format!(
                "circle frames have dimension {}",
                frames.intrinsic_dimension()
            )));
        }
        let ed = build_ed(&data.cloud, &graph, &frames, 0)?;
        let f = CoefficientField::from_fn(0, 1, n, |i| vec![form.value(data.params[i].0)])?;
        let g = apply_exterior_derivative(&ed, &f)?;
        let mut err = 0.0f64;
        for i in 0..n {
            let theta = data.params[i].0;
            let tau = circle_tangent(theta);
            let o = frames.frame(i);
            let along = o[(0, 0)] * tau[0] + o[(1, 0)] * tau[1];
            err = err.max((g.block(i)[0] - form.derivative(theta) * along).abs());
        }
        out.push((t, err));
    }
    Ok(out)
}

pub fn circle_convergence() -> CriterionOutcome {
    let run = || -> Result<CriterionOutcome> {
        let start = Instant::now();
        let errors = circle_derivative_errors(2000, 30, &[4.0, 2.0, 1.0])?;
        let secs = start.elapsed().as_secs_f64();
        let monotone = errors.windows(2).all(|w| w[1].1 < w[0].1);
        let last = errors.last().map_or(f64::INFINITY, |e| e.1);
        let table: Vec<String> = errors.iter().map(|(t, e)| format!("t={t:.4e}: {e:.3e}")).collect();
        Ok(CriterionOutcome::new(
            2,
            CONVERGENCE,
            monotone && last <= 0.1 && secs <= 30.0,
            format!("{} (monotone: {monotone}, final <= 0.1), {secs:.2} s", table.join(", ")),
        ))
    };
    run().unwrap_or_else(|e| CriterionOutcome::failed(2, CONVERGENCE, e))
}

// ---------------------------------------------------------------- 3

const STRUCTURE: &str = "Hodge matrix symmetry, PSD and constants";

/// On the 20×20 torus grid for k = 0, 1, 2: exact symmetry, smallest raw
/// eigenvalue against `-1e-8·λ_1`, and `‖H·1‖_∞ ≤ 1e-10·λ_1` at k = 0.
pub fn laplacian_structure() -> CriterionOutcome {
    let run = || -> Result<CriterionOutcome> {
        let torus = torus_grid::<f64>(20)?;
        let (graph, frames) = prepare(&torus.cloud, &RunConfig::default())?;
        let mut passed = frames.intrinsic_dimension() == 2;
        let mut notes = vec![format!("d={}", frames.intrinsic_dimension())];
        for k in 0..=2usize.min(frames.intrinsic_dimension()) {
            let h = hodge_for(&torus.cloud, &graph, &frames, k)?;
            let symmetric = h.matrix == h.matrix.transpose();
            let (values, _) = f64::symmetric_eigen(&h.matrix);
            let (min, max) = (values[0], values[values.len() - 1]);
            let psd = min >= -1e-8 * max;
            passed &= symmetric && psd && max > 0.0;
            let mut note = format!("k={k}: symmetric={symmetric}, lambda_min/lambda_1={:.2e}", min / max);
            if k == 0 {
                let ones = nalgebra::DVector::from_element(h.dim(), 1.0);
                let residual = (&h.matrix * ones).amax();
                passed &= residual <= 1e-10 * max;
                note.push_str(&format!(", |H1|/lambda_1={:.2e}", residual / max));
            }
            notes.push(note);
        }
        Ok(CriterionOutcome::new(3, STRUCTURE, passed, notes.join("; ")))
    };
    run().unwrap_or_else(|e| CriterionOutcome::failed(3, STRUCTURE, e))
}

// ---------------------------------------------------------------- 4

const INVARIANCE: &str = "invariance under frame rotations";

/// Haar-distributed `d × d` orthogonal matrix.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Largest relative change of the normalized affinity and of the Hodge
/// distance (m = 3) over `pairs` neighbor pairs when every frame is replaced
/// by `O_i R_i` with random orthogonal `R_i`.
pub fn rotation_sensitivity(seed: u64, n: usize, pairs: usize) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = torus_random::<f64, _>(n, &mut rng)?;
    let cfg = RunConfig { knn: 20, ..RunConfig::default() };
    let (graph, frames) = prepare(&data.cloud, &cfg)?;
    let rotations: Vec<DMatrix<f64>> =
        (0..n).map(|_| random_orthogonal(frames.intrinsic_dimension(), &mut rng)).collect();
    let rotated = frames.rotated(&rotations)?;

    let full = |fr: &TangentFrameSet<f64>| -> Result<HodgeSpectrum<f64>> {
        let h = hodge_for(&data.cloud, &graph, fr, 1)?;
        spectrum(&h, h.dim(), 1)
    };
    let (a, b) = (full(&frames)?, full(&rotated)?);
    let (ea, eb) = (normalized_embed(&a, 3)?, normalized_embed(&b, 3)?);

    let mut worst_affinity = 0.0f64;
    let mut worst_distance = 0.0f64;
    for _ in 0..pairs {
        let i = rng.gen_range(0..n);
        let j = *graph.neighbors(i).choose(&mut rng).expect("K >= 1");
        worst_affinity = worst_affinity.max(rel_diff(normalized_affinity(&a, i, j)?, normalized_affinity(&b, i, j)?));
        worst_distance = worst_distance.max(rel_diff(hodge_distance(&ea, i, j), hodge_distance(&eb, i, j)));
    }
    Ok((worst_affinity, worst_distance))
}

pub fn basis_invariance(seed: u64) -> CriterionOutcome {
    match rotation_sensitivity(seed, 300, 50) {
        Ok((aff, dist)) => CriterionOutcome::new(
            4,
            INVARIANCE,
            aff <= 1e-8 && dist <= 1e-8,
            format!("max relative change: affinity {aff:.2e}, distance {dist:.2e} (limit 1e-8, 50 pairs)"),
        ),
        Err(e) => CriterionOutcome::failed(4, INVARIANCE, e),
    }
}

// ---------------------------------------------------------------- 5, 6

/// Five irregularly spaced points on a line in the plane.
pub fn small_line() -> Result<PointCloud<f64>> {
    let s = [0.0, 0.7, 1.5, 3.0, 3.4];
    PointCloud::from_rows(&s.iter().map(|&s| vec![0.8 * s, 0.6 * s]).collect::<Vec<_>>())
}

fn small_line_hodge() -> Result<HodgeMatrix<f64>> {
    let cloud = small_line()?;
    let graph = graph_for(&cloud, 4, None)?;
    let frames = local_frames(&cloud, &graph, &LocalPcaOptions::default())?;
    if frames.intrinsic_dimension() != 1 {
        return Err(HodgeError::InvalidParameter(format!("line has dimension {}", frames.intrinsic_dimension())));
    }
    hodge_for(&cloud, &graph, &frames, 0)
}

/// Reference computations by explicit matrix powers.
pub mod oracle {
    use nalgebra::DMatrix;

    /// `H^tm` by repeated multiplication.
    pub fn matrix_power(h: &DMatrix<f64>, tm: u32) -> DMatrix<f64> {
        let mut p = DMatrix::identity(h.nrows(), h.ncols());
        for _ in 0..tm {
            p = &p * h;
        }
        p
    }

    /// `‖P(i,j)‖²_F` for the `c × c` block `(i, j)` of `p`.
    pub fn block_frobenius_squared(p: &DMatrix<f64>, c: usize, i: usize, j: usize) -> f64 {
        p.view((i * c, j * c), (c, c)).norm_squared()
    }
}

const IDENTITY: &str = "embedding inner products equal H^tm block norms";

/// Worst relative gap between `⟨η(i), η(j)⟩_F` (full m) and the explicit
/// `‖H^tm(i,j)‖²_F` over all pairs and `tm ∈ {1, 2, 3}`.
pub fn spectral_identity_gap() -> Result<f64> {
    let h = small_line_hodge()?;
    let n = h.n_points;
    let mut worst = 0.0f64;
    for tm in 1..=3 {
        let spec = spectrum(&h, h.dim(), tm)?;
        let emb = embed(&spec, h.dim())?;
        let power = oracle::matrix_power(&h.matrix, tm);
        for i in 0..n {
            for j in 0..n {
                let expected = oracle::block_frobenius_squared(&power, h.block_len, i, j);
                worst = worst.max(rel_diff(emb.inner(i, j), expected));
            }
        }
    }
    Ok(worst)
}

pub fn spectral_identity() -> CriterionOutcome {
    match spectral_identity_gap() {
        Ok(gap) => CriterionOutcome::new(
            5,
            IDENTITY,
            gap <= 1e-8,
            format!("N=5, d=1, k=0: max relative gap {gap:.2e} over tm in 1..=3 (limit 1e-8)"),
        ),
        Err(e) => CriterionOutcome::failed(5, IDENTITY, e),
    }
}

const TRUNCATION: &str = "truncation error within the spectral bound";

/// `(tm, m, measured, bound)` where `measured` is the largest normalized
/// affinity error of the rank-`m` truncation.
pub fn truncation_table() -> Result<Vec<(u32, usize, f64, f64)>> {
    let h = small_line_hodge()?;
    let n = h.n_points;
    let mut rows = Vec::new();
    for tm in 1..=3 {
        let spec = spectrum(&h, h.dim(), tm)?;
        let scale = spec.power(0) * spec.power(0);
        for m in 1..=3 {
            let cut = spec.truncated(m);
            let mut measured = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    measured = measured.max((affinity(&spec, i, j) - affinity(&cut, i, j)).abs() / scale);
                }
            }
            rows.push((tm, m, measured, truncation_bound(&spec, m)?));
        }
    }
    Ok(rows)
}

pub fn truncation_check() -> CriterionOutcome {
    match truncation_table() {
        Ok(rows) => {
            let passed = rows.iter().all(|r| r.2 <= r.3);
            let worst = rows.iter().map(|r| r.2 / r.3).fold(0.0, f64::max);
            CriterionOutcome::new(
                6,
                TRUNCATION,
                passed,
                format!("{} (tm, m) cases, worst error/bound ratio {worst:.3}", rows.len()),
            )
        }
        Err(e) => CriterionOutcome::failed(6, TRUNCATION, e),
    }
}

// ---------------------------------------------------------------- 7, 8

const SECTIONS: &str = "torus sections map to near-straight lines";
const BUDGET: &str = "full torus pipeline within 10 minutes";

/// The k = 1 fit of the 50×50 torus at the default parameters, with its wall
/// time in seconds.
pub fn torus_reference_fit() -> Result<(FitResult<f64>, f64)> {
    let torus = torus_grid::<f64>(50)?;
    let start = Instant::now();
    let res = fit(&torus.cloud, &RunConfig::default())?;
    Ok((res, start.elapsed().as_secs_f64()))
}

/// Share of variance on the first principal axis for each `u` section of
/// the `steps × steps` torus grid in the `(η[1,1], η[2,2])` plane.
pub fn section_linearity(res: &FitResult<f64>, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| {
            let pts: Vec<(f64, f64)> = (0..steps)
                .map(|j| {
                    let eta = res.embedding.point(i * steps + j);
                    (eta[(0, 0)], eta[(1, 1)])
                })
                .collect();
            let len = pts.len() as f64;
            let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / len, a.1 + p.1 / len));
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for &(x, y) in &pts {
                sxx += (x - mx) * (x - mx);
                syy += (y - my) * (y - my);
                sxy += (x - mx) * (y - my);
            }
            let trace = sxx + syy;
            if trace <= 0.0 {
                return 1.0;
            }
            let disc = ((sxx - syy) * (sxx - syy) / 4.0 + sxy * sxy).sqrt();
            (trace / 2.0 + disc) / trace
        })
        .collect()
}

pub fn section_straightness(res: &FitResult<f64>) -> CriterionOutcome {
    let ratios = section_linearity(res, 50);
    let straight = ratios.iter().filter(|&&r| r >= 0.9).count();
    let share = straight as f64 / ratios.len() as f64;
    let median = {
        let mut s = ratios.clone();
        s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        s[s.len() / 2]
    };
    CriterionOutcome::new(
        7,
        SECTIONS,
        share >= 0.8,
        format!("{straight}/50 sections with first-axis share >= 0.9 (need 80%), median share {median:.3}"),
    )
}

pub fn runtime_budget(seconds: f64) -> CriterionOutcome {
    CriterionOutcome::new(8, BUDGET, seconds <= 600.0, format!("{seconds:.1} s (limit 600 s)"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse("paper"), Some(Suite::Paper));
        assert_eq!(Suite::parse("all"), None);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..5 {
            let q = random_orthogonal(d, &mut rng);
            assert!((q.transpose() * &q - DMatrix::identity(d, d)).amax() < 1e-12);
        }
    }

    #[test]
    fn outcome_line() {
        let o = CriterionOutcome::new(3, "x", false, "y".into());
        assert_eq!(o.to_string(), "[FAIL] 3. x: y");
    }

    #[test]
    fn matrix_power_oracle() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.0]);
        assert_eq!(oracle::matrix_power(&h, 0), DMatrix::identity(2, 2));
        assert_eq!(oracle::matrix_power(&h, 2), DMatrix::from_row_slice(2, 2, &[5.0, 2.0, 2.0, 1.0]));
        assert_eq!(oracle::block_frobenius_squared(&h, 1, 0, 1), 1.0);
    }
}
