use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::moments::Moments;
use crate::error::{domain, Error, Result};

pub const MIN_CHECKPOINTS: usize = 4;
/// Checkpoints must span at least this ratio `t_max / t_min`.
pub const MIN_SPAN: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Mean of the per-path slopes.
    pub slope: f64,
    pub stderr: f64,
    /// 95% Student-t interval for the mean slope.
    pub ci: (f64, f64),
    pub n_paths: usize,
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return domain(format!("OLS needs matching lengths ≥ 2 ({} vs {})", x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (sxy, sxx) = x.iter().zip(y).fold((0.0, 0.0), |(sxy, sxx), (a, b)| {
        (sxy + (a - mx) * (b - my), sxx + (a - mx) * (a - mx))
    });
    if sxx <= 0.0 {
        return domain("OLS needs at least two distinct abscissae");
    }
    Ok(sxy / sxx)
}

/// Per-path regression of `values[p][j]` against `ln times[j]`.
pub fn log_slope_regression(times: &[f64], values: &[Vec<f64>]) -> Result<SlopeEstimate> {
    if times.len() < MIN_CHECKPOINTS {
        return Err(Error::InsufficientData(format!(
            "slope regression needs ≥ {MIN_CHECKPOINTS} checkpoints, have {}",
            times.len()
        )));
    }
    if times.iter().any(|&t| !(t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return domain("checkpoints must be positive and increasing");
    }
    let span = times[times.len() - 1] / times[0];
    if span < MIN_SPAN * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!("checkpoints span a ratio of {span}, need ≥ {MIN_SPAN}")));
    }
    if values.is_empty() {
        return Err(Error::InsufficientData("no paths".into()));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let mut m = Moments::new();
    for v in values {
        m.push(ols_slope(&x, v)?);
    }
    let n = values.len();
    let stderr = if n >= 2 { m.stderr()? } else { 0.0 };
    let half = if n >= 2 && stderr > 0.0 {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        t.inverse_cdf(0.975) * stderr
    } else {
        0.0
    };
    Ok(SlopeEstimate {
        slope: m.mean(),
        stderr,
        ci: (m.mean() - half, m.mean() + half),
        n_paths: n,
    })
}
