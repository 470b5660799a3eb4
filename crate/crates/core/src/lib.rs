//! Hodge diffusion maps for point clouds.
//!
//! The pipeline estimates tangent frames by local PCA, assembles the discrete
//! exterior derivative `ED_k` on `k`-forms written in those frames, builds the
//! Hodge-Laplacian matrix and embeds every point as a small symmetric matrix
//! built from its eigenvectors.
//!
//! Everything is generic over the scalar type through [`Real`]; the `f64`
//! aliases at the crate root cover the common case.

// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod extderiv;
pub mod frames;
pub mod geometry;
pub mod hodge;
pub mod io;
pub mod multilinear;
pub mod pipeline;
pub mod scalar;

pub use error::{HodgeError, Result};
pub use extderiv::{apply_exterior_derivative, build_ed, BlockSparseOperator, CoefficientField};
pub use frames::{local_frames, DegeneratePolicy, LocalPcaOptions, TangentFrameSet};
pub use geometry::{default_bandwidth, knn, NeighborGraph, PointCloud};
pub use hodge::{
    affinity, build_hodge, embed, hodge_distance, normalized_affinity, normalized_embed, spectrum,
    truncation_bound, EmbeddingMatrix, HodgeMatrix, HodgeSpectrum,
};
pub use multilinear::{AlternatingArray, MultiIndex};
pub use pipeline::{fit, FitResult, FitSummary, RunConfig};
pub use scalar::Real;

pub type Cloud = PointCloud<f64>;
pub type Graph = NeighborGraph<f64>;
pub type Frames = TangentFrameSet<f64>;
pub type Operator = BlockSparseOperator<f64>;
pub type Hodge = HodgeMatrix<f64>;
pub type Spectrum = HodgeSpectrum<f64>;
pub type Embedding = EmbeddingMatrix<f64>;

pub type Cloud32 = PointCloud<f32>;
pub type Frames32 = TangentFrameSet<f32>;
pub type Operator32 = BlockSparseOperator<f32>;
pub type Spectrum32 = HodgeSpectrum<f32>;
pub type Embedding32 = EmbeddingMatrix<f32>;
