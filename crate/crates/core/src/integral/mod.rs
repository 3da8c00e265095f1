//! Pathwise integrals along sampled planar paths.
//!
//! For `H > 1/2` Riemann sums of the integrands used here converge pathwise,
//! and the trapezoid rule is the default. The left-point rule is kept for
//! diagnostics.

mod divergence;
mod log;

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{ComplexPath, TimeGrid};

pub use divergence::{divergence_integral_gradient, DivergenceIntegral};
pub use log::{
    clock_integral, clock_integral_guarded, f_over_b_integral, f_over_b_integral_subdivided, log_derivative_integral,
    skew_product_residual, variation_sum, variation_sum_from, winding_angle, winding_functional_z,
    SkewResidual, MAX_SUBPANELS,
};

/// Default relative near-origin guard: points with `|B| < eps·|z0|` reject
/// the path.
pub const DEFAULT_GUARD_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Left,
    Midpoint,
    #[default]
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: Complex64,
    pub rule: Rule,
    pub mesh: f64,
    pub guard_hits: usize,
}

/// Cumulative values `I_{t_i}` of an integral started at the first grid
/// point. Real-valued integrals keep a zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningIntegral {
    grid: Arc<TimeGrid>,
    partial: Vec<Complex64>,
    guard_hits: usize,
    rejected: bool,
}

impl RunningIntegral {
    pub(crate) fn from_panels(grid: Arc<TimeGrid>, panels: impl Iterator<Item = Complex64>) -> Self {
        Self::from_panels_offset(grid, Complex64::new(0.0, 0.0), panels)
    }

    pub(crate) fn from_panels_offset(
        grid: Arc<TimeGrid>,
        start: Complex64,
        panels: impl Iterator<Item = Complex64>,
    ) -> Self {
        let mut partial = Vec::with_capacity(grid.len());
        let mut acc = start;
        partial.push(acc);
        for p in panels {
            acc += p;
            partial.push(acc);
        }
        debug_assert_eq!(partial.len(), grid.len());
        Self {
            grid,
            partial,
            guard_hits: 0,
            rejected: false,
        }
    }

    pub(crate) fn with_guard(mut self, hits: usize, rejected: bool) -> Self {
        self.guard_hits = hits;
        self.rejected = rejected;
        self
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.partial
    }

    /// Real parts, for real-valued integrals.
    pub fn real_values(&self) -> Vec<f64> {
        self.partial.iter().map(|z| z.re).collect()
    }

    pub fn final_value(&self) -> Complex64 {
        *self.partial.last().unwrap()
    }

    pub fn at(&self, t: f64) -> Option<Complex64> {
        self.grid.index_of(t).map(|i| self.partial[i])
    }

    /// Integral between grid indices `i ≤ j`.
    pub fn between(&self, i: usize, j: usize) -> Complex64 {
        self.partial[j] - self.partial[i]
    }

    pub fn guard_hits(&self) -> usize {
        self.guard_hits
    }

    pub fn is_rejected(&self) -> bool {
        self.rejected
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re", "im"])?;
        for (t, z) in self.times().iter().zip(&self.partial) {
            w.write_record([t.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_finite(u: &[Complex64]) -> Result<()> {
    match u.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("integrand at grid index {i}"))),
        None => Ok(()),
    }
}

fn panel_weight(rule: Rule, a: Complex64, b: Complex64) -> Complex64 {
    match rule {
        Rule::Left => a,
        Rule::Midpoint | Rule::Trapezoid => 0.5 * (a + b),
    }
}

/// `Σ u(τ_i)(B_{i+1} − B_i)` for integrand values sampled on the path grid.
/// With sampled values the midpoint rule uses the average of the two ends.
pub fn pathwise_integral(u: &[Complex64], path: &ComplexPath, rule: Rule) -> Result<IntegralResult> {
    Ok(IntegralResult {
        value: pathwise_running(u, path, rule)?.final_value(),
        rule,
        mesh: path.grid().mesh(),
        guard_hits: 0,
    })
}

pub fn pathwise_running(u: &[Complex64], path: &ComplexPath, rule: Rule) -> Result<RunningIntegral> {
    if u.len() != path.len() {
        return Err(Error::GridMismatch(format!(
            "integrand has {} values, path has {}",
            u.len(),
            path.len()
        )));
    }
    check_finite(u)?;
    let b = path.values();
    let panels = (0..b.len() - 1).map(|i| panel_weight(rule, u[i], u[i + 1]) * (b[i + 1] - b[i]));
    Ok(RunningIntegral::from_panels(path.grid().clone(), panels))
}

/// `∫ f(B) dB` with `f` evaluated on the path. The midpoint rule evaluates
/// `f` at the chord midpoint `(B_i + B_{i+1})/2`.
pub fn pathwise_integral_fn(
    f: impl Fn(Complex64) -> Complex64,
    path: &ComplexPath,
    rule: Rule,
) -> Result<IntegralResult> {
    let b = path.values();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut fa = f(b[0]);
    for i in 0..b.len() - 1 {
        let fb = f(b[i + 1]);
        let w = match rule {
            Rule::Left => fa,
            Rule::Midpoint => f(0.5 * (b[i] + b[i + 1])),
            Rule::Trapezoid => 0.5 * (fa + fb),
        };
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::NonFinite(format!("integrand on panel {i}")));
        }
        acc += w * (b[i + 1] - b[i]);
        fa = fb;
    }
    Ok(IntegralResult {
        value: acc,
        rule,
        mesh: path.grid().mesh(),
        guard_hits: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{complex_fbm, Hurst, SeedSpec};
    use proptest::prelude::*;

    fn sampled(n: usize, seed: u64) -> ComplexPath {
        let grid = TimeGrid::uniform(n, 1.0 / n as f64).unwrap();
        complex_fbm(&grid, Hurst::new(0.75).unwrap(), Complex64::new(1.0, 0.0), SeedSpec::new(seed, 0)).unwrap()
    }

    #[test]
    fn constant_integrand_telescopes() {
        let p = sampled(256, 1);
        let u = vec![Complex64::new(1.0, 0.0); p.len()];
        let want = p.values()[256] - p.values()[0];
        for rule in [Rule::Left, Rule::Midpoint, Rule::Trapezoid] {
            let r = pathwise_integral(&u, &p, rule).unwrap();
            assert!((r.value - want).norm() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_chain_rule_for_squares() {
        let grid = Arc::new(TimeGrid::uniform(200, 0.01).unwrap());
        let p = ComplexPath::from_fn(grid, Complex64::new(1.0, 0.0), Hurst::new(0.75).unwrap(), |t| {
            Complex64::new(1.0 + t.sin(), t * t)
        });
        let u: Vec<_> = p.values().iter().map(|z| 2.0 * z).collect();
        let r = pathwise_integral(&u, &p, Rule::Trapezoid).unwrap();
        let want = p.values()[200].powi(2) - p.values()[0].powi(2);
        assert!((r.value - want).norm() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let p = sampled(16, 1);
        let u = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(pathwise_integral(&u, &p, Rule::Left), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn non_finite_integrand_rejected() {
        let p = sampled(16, 1);
        let mut u = vec![Complex64::new(1.0, 0.0); p.len()];
        u[4] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(pathwise_integral(&u, &p, Rule::Trapezoid), Err(Error::NonFinite(_))));
    }

    #[test]
    fn chaining_over_grid_point() {
        let p = sampled(512, 3);
        let u: Vec<_> = p.values().iter().map(|z| z.exp()).collect();
        let run = pathwise_running(&u, &p, Rule::Trapezoid).unwrap();
        let whole = run.final_value();
        let split = run.between(0, 200) + run.between(200, 512);
        assert!((whole - split).norm() <= 1e-13 * whole.norm().max(1.0));
    }

    #[test]
    fn running_starts_at_zero() {
        let p = sampled(64, 2);
        let u: Vec<_> = p.values().to_vec();
        let run = pathwise_running(&u, &p, Rule::Left).unwrap();
        assert_eq!(run.values()[0], Complex64::new(0.0, 0.0));
        assert_eq!(run.values().len(), p.len());
    }

    #[test]
    fn running_csv_export() {
        let p = sampled(4, 2);
        let u = vec![Complex64::new(1.0, 0.0); p.len()];
        let run = pathwise_running(&u, &p, Rule::Left).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re,im\n"));
        assert_eq!(text.lines().count(), 6);
    }

    proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..50) {
            let p = sampled(64, seed);
            let u: Vec<_> = p.values().iter().map(|z| z * z).collect();
            let v: Vec<_> = p.values().iter().map(|z| z.cos()).collect();
            let w: Vec<_> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            for rule in [Rule::Left, Rule::Trapezoid] {
                let iu = pathwise_integral(&u, &p, rule).unwrap().value;
                let iv = pathwise_integral(&v, &p, rule).unwrap().value;
                let iw = pathwise_integral(&w, &p, rule).unwrap().value;
                let want = a * iu + b * iv;
                prop_assert!((iw - want).norm() <= 1e-12 * (1.0 + iu.norm() + iv.norm()) * 8.0);
            }
        }
    }
}
