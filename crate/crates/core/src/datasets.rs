//! Synthetic manifolds: torus and sphere grids, and the unit circle with
//! closed-form 0-forms whose exterior derivatives are known.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{HodgeError, Result};
use crate::geometry::PointCloud;
use crate::scalar::Real;

/// A generated cloud plus, for grids, the `(i, j)` grid position and the
/// `(u, v)` parameters of every point.
#[derive(Debug, Clone)]
pub struct SyntheticManifold<T: Real> {
    pub name: &'static str,
    pub cloud: PointCloud<T>,
    pub grid: Vec<(usize, usize)>,
    pub params: Vec<(T, T)>,
}

fn grid_manifold<T: Real>(
    name: &'static str,
    steps: usize,
    offset: f64,
    omega: impl Fn(T, T) -> [T; 3],
) -> Result<SyntheticManifold<T>> {
    if steps < 2 {
        return Err(HodgeError::InvalidParameter(format!("grid needs at least 2 steps, got {steps}")));
    }
    let param = |i: usize| T::lit(i as f64 / steps as f64 - offset);
    let mut pts = DMatrix::zeros(steps * steps, 3);
    let mut grid = Vec::with_capacity(steps * steps);
    let mut params = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let (u, v) = (param(i), param(j));
            let p = omega(u, v);
            let row = i * steps + j;
            for c in 0..3 {
                pts[(row, c)] = p[c];
            }
            grid.push((i, j));
            params.push((u, v));
        }
    }
    Ok(SyntheticManifold { name, cloud: PointCloud::new(pts)?, grid, params })
}

/// Torus `((2 + cos 2πv) cos 2πu, (2 + cos 2πv) sin 2πu, sin 2πv)` sampled at
/// `u_i = i/steps - 1/2` for both parameters; row `i·steps + j` holds
/// `(u_i, u_j)`.
pub fn torus_grid<T: Real>(steps: usize) -> Result<SyntheticManifold<T>> {
    grid_manifold("torus", steps, 0.5, |u: T, v: T| {
        let two_pi = T::two_pi();
        let r = T::lit(2.0) + (two_pi * v).cos();
        [r * (two_pi * u).cos(), r * (two_pi * u).sin(), (two_pi * v).sin()]
    })
}

/// Sphere `(cos 2πu sin πv, sin 2πu sin πv, cos πv)` sampled at `u_i = i/steps`.
/// The `v = 0` row collapses onto the pole; those duplicates are kept.
pub fn sphere_grid<T: Real>(steps: usize) -> Result<SyntheticManifold<T>> {
    grid_manifold("sphere", steps, 0.0, |u: T, v: T| {
        let (two_pi, pi) = (T::two_pi(), T::pi());
        let s = (pi * v).sin();
        [(two_pi * u).cos() * s, (two_pi * u).sin() * s, (pi * v).cos()]
    })
}

/// `n` torus points at independent uniform `(u, v)` in `[-1/2, 1/2)²`.
pub fn torus_random<T: Real, R: Rng>(n: usize, rng: &mut R) -> Result<SyntheticManifold<T>> {
    let params: Vec<(T, T)> = (0..n).map(|_| (T::lit(rng.gen::<f64>() - 0.5), T::lit(rng.gen::<f64>() - 0.5))).collect();
    let two_pi = T::two_pi();
    let pts = DMatrix::from_fn(n, 3, |r, c| {
        let (u, v) = params[r];
        let ring = T::lit(2.0) + (two_pi * v).cos();
        match c {
            0 => ring * (two_pi * u).cos(),
            1 => ring * (two_pi * u).sin(),
            _ => (two_pi * v).sin(),
        }
    });
    Ok(SyntheticManifold { name: "torus", cloud: PointCloud::new(pts)?, grid: (0..n).map(|i| (i, 0)).collect(), params })
}

/// `n` equally spaced points `θ_i = 2πi/n` on the unit circle.
pub fn circle<T: Real>(n: usize) -> Result<SyntheticManifold<T>> {
    if n < 4 {
        return Err(HodgeError::InvalidParameter(format!("circle needs at least 4 points, got {n}")));
    }
    let angles: Vec<T> = (0..n).map(|i| T::two_pi() * T::lit(i as f64) / T::lit(n as f64)).collect();
    circle_at(angles)
}

/// `n` points on the unit circle at independent uniform angles.
pub fn circle_random<T: Real, R: Rng>(n: usize, rng: &mut R) -> Result<SyntheticManifold<T>> {
    if n < 4 {
        return Err(HodgeError::InvalidParameter(format!("circle needs at least 4 points, got {n}")));
    }
    let angles = (0..n).map(|_| T::lit(rng.gen::<f64>() * std::f64::consts::TAU)).collect();
    circle_at(angles)
}

fn circle_at<T: Real>(angles: Vec<T>) -> Result<SyntheticManifold<T>> {
    let pts = DMatrix::from_fn(angles.len(), 2, |r, c| if c == 0 { angles[r].cos() } else { angles[r].sin() });
    Ok(SyntheticManifold {
        name: "circle",
        cloud: PointCloud::new(pts)?,
        grid: (0..angles.len()).map(|i| (i, 0)).collect(),
        params: angles.into_iter().map(|a| (a, T::zero())).collect(),
    })
}

/// Closed-form 0-forms on the circle, parametrised by angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleForm {
    Sin,
    Cos,
    Constant(f64),
}

impl CircleForm {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(CircleForm::Sin),
            "cos" => Some(CircleForm::Cos),
            other => other.strip_prefix("const:").and_then(|c| c.parse().ok()).map(CircleForm::Constant),
        }
    }

    pub fn value<T: Real>(self, theta: T) -> T {
        match self {
            CircleForm::Sin => theta.sin(),
            CircleForm::Cos => theta.cos(),
            CircleForm::Constant(c) => T::lit(c),
        }
    }

    /// Coefficient of `df` in the unit tangent frame `(-sin θ, cos θ)`.
    pub fn derivative<T: Real>(self, theta: T) -> T {
        match self {
            CircleForm::Sin => theta.cos(),
            CircleForm::Cos => -theta.sin(),
            CircleForm::Constant(_) => T::zero(),
        }
    }
}

/// Unit tangent `(-sin θ, cos θ)` of the circle.
pub fn circle_tangent<T: Real>(theta: T) -> [T; 2] {
    [-theta.sin(), theta.cos()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_examples() {
        let t = torus_grid::<f64>(50).unwrap();
        assert_eq!(t.cloud.len(), 2500);
        // (u, v) = (0, 0) sits at grid position (25, 25)
        let idx = 25 * 50 + 25;
        assert_eq!(t.params[idx], (0.0, 0.0));
        let p = t.cloud.point(idx);
        assert!((p[0] - 3.0).abs() < 1e-15 && p[1].abs() < 1e-15 && p[2].abs() < 1e-15);
        for i in 0..t.cloud.len() {
            let p = t.cloud.point(i);
            let ring = (p[0].hypot(p[1]) - 2.0).powi(2) + p[2] * p[2];
            assert!((ring - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_examples() {
        let s = sphere_grid::<f64>(50).unwrap();
        assert_eq!(s.cloud.len(), 2500);
        // (u, v) = (0, 0.5) is grid position (0, 25)
        let p = s.cloud.point(25);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15 && p[2].abs() < 1e-15);
        for i in 0..s.cloud.len() {
            let p = s.cloud.point(i);
            assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-12);
        }
        let small = sphere_grid::<f64>(2).unwrap();
        assert_eq!(small.cloud.len(), 4);
        assert_eq!(small.cloud.point(0), vec![0.0, 0.0, 1.0]);
        assert!(small.cloud.distance(0, 2) == 0.0);
    }

    #[test]
    fn circle_examples() {
        let c = circle::<f64>(4).unwrap();
        let expected = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (i, (x, y)) in expected.iter().enumerate() {
            let p = c.cloud.point(i);
            assert!((p[0] - x).abs() < 1e-15 && (p[1] - y).abs() < 1e-15);
        }
        assert!(circle::<f64>(3).is_err());
        assert_eq!(CircleForm::Sin.derivative(0.0f64), 1.0);
        assert_eq!(CircleForm::Constant(4.0).derivative(1.3f64), 0.0);
        assert_eq!(CircleForm::parse("const:2.5"), Some(CircleForm::Constant(2.5)));
        assert_eq!(CircleForm::parse("tan"), None);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = torus_grid::<f64>(12).unwrap();
        let b = torus_grid::<f64>(12).unwrap();
        assert_eq!(a.cloud, b.cloud);
        assert!(torus_grid::<f64>(1).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for form in [CircleForm::Sin, CircleForm::Cos] {
            for k in 0..12 {
                let th = k as f64 * 0.53;
                let fd = (form.value(th + h) - form.value(th - h)) / (2.0 * h);
                assert!((fd - form.derivative(th)).abs() < 1e-8);
            }
        }
    }
}
