//! Exact sampling of one- and two-dimensional fractional Brownian motion.

mod cholesky;
mod circulant;
mod covariance;
mod grid;
mod hurst;
pub mod io;
mod path;
mod seed;

pub use cholesky::{cholesky_sample, CholeskyFactor, CholeskySampler};
pub use circulant::{davies_harte_sample, CirculantSampler};
pub use covariance::{covariance_matrix, fbm_covariance, mixing_covariance, mixing_leading_term};
pub use grid::{GridKind, TimeGrid, DEFAULT_GEOMETRIC_RATIO};
pub use hurst::Hurst;
pub use path::{
    complex_fbm, scale_transform, time_inversion, ComplexPath, ComplexSampler, RealPath1D,
    RealSampler,
};
pub use seed::SeedSpec;
