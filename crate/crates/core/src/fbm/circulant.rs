use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Hurst, RealPath1D, SeedSpec, TimeGrid};
use crate::error::{domain, Error, Result};

/// Eigenvalues in `[-CLAMP·max, 0)` are treated as round-off and set to zero.
const CLAMP: f64 = 1e-9;

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
fn fgn_autocov(k: usize, two_h: f64) -> f64 {
    let k = k as f64;
    if k == 0.0 {
        return 1.0;
    }
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).powf(two_h))
}

/// Exact sampler on the uniform grid `{0, dt, …, n·dt}` by circulant
/// embedding of the increment covariance.
#[derive(Clone)]
pub struct CirculantSampler {
    grid: Arc<TimeGrid>,
    h: Hurst,
    n: usize,
    scale: f64,
    /// `sqrt(λ_j / m)` for the embedding of size `m`.
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("h", &self.h)
            .field("embedding", &self.sqrt_eig.len())
            .finish()
    }
}

impl CirculantSampler {
    pub fn new(n: usize, dt: f64, h: Hurst) -> Result<Self> {
        let grid = Arc::new(TimeGrid::uniform(n, dt)?);
        Self::with_grid(grid, h)
    }

    pub(crate) fn with_grid(grid: Arc<TimeGrid>, h: Hurst) -> Result<Self> {
        let super::GridKind::Uniform { dt } = grid.kind() else {
            return domain("circulant sampler needs a uniform grid");
        };
        let n = grid.len() - 1;
        let g = n.next_power_of_two();
        let m = 2 * g;
        let two_h = h.two_h();

        let mut row: Vec<Complex64> = (0..m)
            .map(|j| {
                let lag = if j <= g { j } else { m - j };
                Complex64::new(fgn_autocov(lag, two_h), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);

        let max = row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
        let mut sqrt_eig = Vec::with_capacity(m);
        for (index, c) in row.iter().enumerate() {
            let mut lambda = c.re;
            if lambda < 0.0 {
                if lambda < -CLAMP * max {
                    return Err(Error::Embedding {
                        index,
                        value: lambda,
                    });
                }
                lambda = 0.0;
            }
            sqrt_eig.push((lambda / m as f64).sqrt());
        }
        Ok(Self {
            grid,
            h,
            n,
            scale: dt.powf(two_h / 2.0),
            sqrt_eig,
            fft,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    /// Standard normals consumed per path.
    pub fn normals_needed(&self) -> usize {
        2 * self.sqrt_eig.len()
    }

    /// Fill `out` (length `n + 1`) with a path started at `start`.
    pub fn fill_from_normals(&self, start: f64, normals: &[f64], out: &mut [f64]) {
        assert_eq!(normals.len(), self.normals_needed());
        assert_eq!(out.len(), self.n + 1);
        // The real part of the transform of sqrt(λ/m)·(ξ + iη) has
        // exactly the circulant covariance.
        let mut buf: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .zip(normals.chunks_exact(2))
            .map(|(s, z)| Complex64::new(s * z[0], s * z[1]))
            .collect();
        self.fft.process(&mut buf);
        out[0] = start;
        let mut acc = start;
        for (o, w) in out[1..].iter_mut().zip(&buf) {
            acc += self.scale * w.re;
            *o = acc;
        }
    }

    pub fn sample(&self, start: f64, seed: SeedSpec) -> RealPath1D {
        let normals = seed.normals(self.normals_needed());
        let mut values = vec![0.0; self.n + 1];
        self.fill_from_normals(start, &normals, &mut values);
        RealPath1D::new(self.grid.clone(), values, start, self.h)
    }
}

/// One-shot circulant draw on `{0, dt, …, n·dt}`.
pub fn davies_harte_sample(n: usize, dt: f64, h: Hurst, start: f64, seed: SeedSpec) -> Result<RealPath1D> {
    if n == 0 {
        return domain("davies_harte_sample needs n ≥ 1");
    }
    Ok(CirculantSampler::new(n, dt, h)?.sample(start, seed))
}
