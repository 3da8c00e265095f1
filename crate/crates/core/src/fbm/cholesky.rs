use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::covariance::covariance_matrix;
use super::{Hurst, RealPath1D, SeedSpec, TimeGrid};
use crate::error::{domain, Error, Result};

/// Relative diagonal jitter applied once when a pivot fails.
const JITTER: f64 = 1e-12;

/// Lower Cholesky factor stored as packed rows.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    packed: Vec<f64>,
    jittered: bool,
}

impl CholeskyFactor {
    /// Factor a row-major symmetric matrix. On the first failed pivot the
    /// diagonal is shifted by `1e-12 × max diagonal` and the factorization is
    /// retried once.
    pub fn new(matrix: &[f64], n: usize) -> Result<Self> {
        assert_eq!(matrix.len(), n * n, "matrix is not {n}×{n}");
        match Self::try_factor(matrix, n, 0.0) {
            Ok(packed) => Ok(Self {
                n,
                packed,
                jittered: false,
            }),
            Err(_) => {
                let max_diag = (0..n).map(|i| matrix[i * n + i]).fold(0.0, f64::max);
                let packed = Self::try_factor(matrix, n, JITTER * max_diag)
                    .map_err(|(pivot, value)| Error::Factorization { pivot, value })?;
                Ok(Self {
                    n,
                    packed,
                    jittered: true,
                })
            }
        }
    }

    fn try_factor(a: &[f64], n: usize, shift: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
        let mut l = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            let row_i = i * (i + 1) / 2;
            for j in 0..=i {
                let row_j = j * (j + 1) / 2;
                let dot: f64 = l[row_i..row_i + j]
                    .iter()
                    .zip(&l[row_j..row_j + j])
                    .map(|(x, y)| x * y)
                    .sum();
                if i == j {
                    let d = a[i * n + i] + shift - dot;
                    if !(d > 0.0) || !d.is_finite() {
                        return Err((i, d));
                    }
                    l[row_i + i] = d.sqrt();
                } else {
                    l[row_i + j] = (a[i * n + j] - dot) / l[row_j + j];
                }
            }
        }
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn was_jittered(&self) -> bool {
        self.jittered
    }

    /// `L[i][j]` for `j ≤ i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(j <= i && i < self.n);
        self.packed[i * (i + 1) / 2 + j]
    }

    /// `out = L · z`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.packed[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            *o = row.iter().zip(z).map(|(l, x)| l * x).sum();
        }
    }
}

type CacheKey = (u64, u64);

fn factor_cache() -> &'static RwLock<HashMap<CacheKey, Arc<CholeskyFactor>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<CholeskyFactor>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Exact sampler on an arbitrary grid. Factors are shared through a
/// process-wide cache keyed by `(grid, H)`.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: Arc<TimeGrid>,
    h: Hurst,
    offset: usize,
    factor: Arc<CholeskyFactor>,
}

impl CholeskySampler {
    pub fn new(grid: Arc<TimeGrid>, h: Hurst) -> Result<Self> {
        let offset = usize::from(grid.starts_at_zero());
        if grid.len() <= offset {
            return domain("Cholesky sampling needs at least one positive grid time");
        }
        let key = (grid.cache_key(), h.value().to_bits());
        let cached = factor_cache().read().unwrap().get(&key).cloned();
        let factor = match cached {
            Some(f) => f,
            None => {
                let times = &grid.times()[offset..];
                let cov = covariance_matrix(times, h);
                let f = Arc::new(CholeskyFactor::new(&cov, times.len())?);
                factor_cache()
                    .write()
                    .unwrap()
                    .entry(key)
                    .or_insert(f)
                    .clone()
            }
        };
        Ok(Self {
            grid,
            h,
            offset,
            factor,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Number of standard normals consumed per path.
    pub fn normals_needed(&self) -> usize {
        self.factor.dim()
    }

    /// Fill `out` (one value per grid point) from the given normals.
    pub fn fill_from_normals(&self, start: f64, normals: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), self.grid.len());
        if self.offset == 1 {
            out[0] = 0.0;
        }
        self.factor.apply(normals, &mut out[self.offset..]);
        for v in out.iter_mut() {
            *v += start;
        }
    }

    pub fn sample(&self, start: f64, seed: SeedSpec) -> RealPath1D {
        let normals = seed.normals(self.normals_needed());
        let mut values = vec![0.0; self.grid.len()];
        self.fill_from_normals(start, &normals, &mut values);
        RealPath1D::new(self.grid.clone(), values, start, self.h)
    }
}

/// One-shot Cholesky draw on `grid`.
pub fn cholesky_sample(grid: &TimeGrid, h: Hurst, start: f64, seed: SeedSpec) -> Result<RealPath1D> {
    Ok(CholeskySampler::new(Arc::new(grid.clone()), h)?.sample(start, seed))
}
