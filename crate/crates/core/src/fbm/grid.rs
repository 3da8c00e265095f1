use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

use crate::error::{domain, Result};

/// Default ratio for log-uniform grids, roughly 47 points per decade.
pub const DEFAULT_GEOMETRIC_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    Uniform { dt: f64 },
    Geometric { t_min: f64, ratio: f64, count: usize },
    Explicit,
}

/// Strictly increasing, nonnegative discretization of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    kind: GridKind,
}

impl TimeGrid {
    /// `{0, dt, 2dt, …, n·dt}`.
    pub fn uniform(n: usize, dt: f64) -> Result<Self> {
        if n == 0 || !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("uniform grid needs n ≥ 1 and dt > 0 (n = {n}, dt = {dt})"));
        }
        let times = (0..=n).map(|i| i as f64 * dt).collect();
        Ok(Self {
            times,
            kind: GridKind::Uniform { dt },
        })
    }

    /// `t_min · ratio^i` for `i < count`, optionally preceded by the origin.
    pub fn geometric(t_min: f64, ratio: f64, count: usize, with_origin: bool) -> Result<Self> {
        if !(t_min > 0.0) || !(ratio > 1.0) || count == 0 || !(t_min * ratio).is_finite() {
            return domain(format!(
                "geometric grid needs t_min > 0, ratio > 1, count ≥ 1 (t_min = {t_min}, ratio = {ratio}, count = {count})"
            ));
        }
        let mut times = Vec::with_capacity(count + usize::from(with_origin));
        if with_origin {
            times.push(0.0);
        }
        times.extend((0..count).map(|i| t_min * ratio.powi(i as i32)));
        Ok(Self {
            times,
            kind: GridKind::Geometric {
                t_min,
                ratio,
                count,
            },
        })
    }

    /// Geometric grid from `t_min` reaching at least `t_max`.
    pub fn geometric_span(t_min: f64, t_max: f64, ratio: f64, with_origin: bool) -> Result<Self> {
        if !(t_max >= t_min) {
            return domain(format!("t_max {t_max} below t_min {t_min}"));
        }
        let steps = ((t_max / t_min).ln() / ratio.ln() - 1e-9).ceil().max(0.0) as usize;
        Self::geometric(t_min, ratio, steps + 1, with_origin)
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return domain("explicit grid is empty");
        }
        if !times.iter().all(|t| t.is_finite()) || times[0] < 0.0 {
            return domain("explicit grid times must be finite and nonnegative");
        }
        if let Some(w) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return domain(format!("explicit grid not strictly increasing at index {}", w + 1));
        }
        Ok(Self {
            times,
            kind: GridKind::Explicit,
        })
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn starts_at_zero(&self) -> bool {
        self.times[0] == 0.0
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Largest spacing between consecutive points.
    pub fn mesh(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the grid point equal to `t` up to relative tolerance `1e-9`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1e-300);
        let i = self.times.partition_point(|&x| x < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    pub(crate) fn cache_key(&self) -> u64 {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        self.times.len().hash(&mut hasher);
        for t in &self.times {
            t.to_bits().hash(&mut hasher);
        }
        hasher.finish()
    }
}
