//! Numerical laboratory for the complex (planar) fractional Brownian motion
//! with Hurst parameter above one half.
//!
//! The crate is split along the lines of the computation:
//!
//! - [`fbm`]: exact samplers (Cholesky on arbitrary grids, circulant
//!   embedding on uniform grids), deterministic covariance utilities and the
//!   scaling / time-inversion path maps.
//! - [`integral`]: pathwise integrals along sampled paths, the divergence
//!   correction for gradient integrands, the logarithmic integral
//!   `∫ dB/B`, winding angles, the clock `∫ |B|^{-1/H} ds` and the
//!   winding-like functional `Z_t`.
//! - [`constants`]: closed-form constants and the singular quadratures behind
//!   the limit variance `σ²(H)`.
//! - [`stats`]: streaming moments, goodness-of-fit tests and log-time slope
//!   regression.
//! - [`experiments`]: reproducible Monte Carlo runners that combine the above
//!   into pass/fail reports.

pub mod constants;
pub mod error;
pub mod experiments;
pub mod fbm;
pub mod integral;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
