use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{RunningIntegral, DEFAULT_GUARD_EPS};
use crate::error::{domain, Error, Result};
use crate::fbm::{ComplexPath, Hurst, TimeGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Guard radius `eps·|z0|`, or `eps` when the path starts at the origin.
fn guard_radius(z0: Complex64, eps: f64) -> f64 {
    let r = z0.norm();
    if r > 0.0 {
        eps * r
    } else {
        eps
    }
}

fn guard_count(values: &[Complex64], radius: f64) -> usize {
    values.iter().filter(|z| z.norm() < radius).count()
}

fn finite_or_zero(z: Complex64) -> Complex64 {
    if z.re.is_finite() && z.im.is_finite() {
        z
    } else {
        ZERO
    }
}

fn require_nonzero_origin(path: &ComplexPath) -> Result<()> {
    if path.origin() == ZERO {
        return domain("integral along dB/B needs z0 ≠ 0");
    }
    Ok(())
}

/// Trapezoid integral of `f(1/B) dB`, guarded near the origin.
pub fn f_over_b_integral(
    f: impl Fn(Complex64) -> Complex64,
    path: &ComplexPath,
    guard_eps: f64,
) -> Result<RunningIntegral> {
    require_nonzero_origin(path)?;
    if !(guard_eps > 0.0) {
        return domain("guard_eps must be positive");
    }
    let b = path.values();
    let hits = guard_count(b, guard_radius(path.origin(), guard_eps));
    let mut fa = f(b[0].inv());
    let panels = (0..b.len() - 1).map(|i| {
        let fb = f(b[i + 1].inv());
        let p = finite_or_zero(0.5 * (fa + fb) * (b[i + 1] - b[i]));
        fa = fb;
        p
    });
    let run = RunningIntegral::from_panels(path.grid().clone(), panels);
    Ok(run.with_guard(hits, hits > 0))
}

/// Cap on the number of sub-panels per grid step in
/// [`f_over_b_integral_subdivided`].
pub const MAX_SUBPANELS: usize = 1 << 14;

/// Distance from the origin to the segment `[a, b]`.
fn segment_distance(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let dd = d.norm_sqr();
    if dd == 0.0 {
        return a.norm();
    }
    let tau = (-(d.conj() * a).re / dd).clamp(0.0, 1.0);
    (a + tau * d).norm()
}

/// Trapezoid integral of `f(1/B) dB` along the piecewise-linear interpolant
/// of the path. A step is split into `⌈|ΔB| / (rel_step · dist(0, chord))⌉`
/// equal sub-panels, so steps that pass close to the origin are resolved.
/// Steps far from the origin reduce to the plain trapezoid panel.
pub fn f_over_b_integral_subdivided(
    f: impl Fn(Complex64) -> Complex64,
    path: &ComplexPath,
    guard_eps: f64,
    rel_step: f64,
) -> Result<RunningIntegral> {
    require_nonzero_origin(path)?;
    if !(guard_eps > 0.0) || !(rel_step > 0.0) {
        return domain("guard_eps and rel_step must be positive");
    }
    let b = path.values();
    let hits = guard_count(b, guard_radius(path.origin(), guard_eps));
    let panels = b.windows(2).map(|w| {
        let (a, c) = (w[0], w[1]);
        let d = c - a;
        let dist = segment_distance(a, c);
        let m = if dist > 0.0 {
            (d.norm() / (rel_step * dist)).ceil().clamp(1.0, MAX_SUBPANELS as f64) as usize
        } else {
            MAX_SUBPANELS
        };
        let h = d / m as f64;
        let mut sum = 0.5 * (f(a.inv()) + f(c.inv()));
        for k in 1..m {
            sum += f((a + h * k as f64).inv());
        }
        finite_or_zero(sum * h)
    });
    let run = RunningIntegral::from_panels(path.grid().clone(), panels);
    Ok(run.with_guard(hits, hits > 0))
}

/// Running `∫ dB/B` by the trapezoid rule on `1/B`.
pub fn log_derivative_integral(path: &ComplexPath, guard_eps: f64) -> Result<RunningIntegral> {
    f_over_b_integral(|w| w, path, guard_eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewResidual {
    /// `sup_i |B_first·exp(I_{t_i}) − B_{t_i}|`; NaN when rejected.
    pub sup: f64,
    pub guard_hits: usize,
    pub rejected: bool,
}

pub fn skew_product_residual(path: &ComplexPath, guard_eps: f64) -> Result<SkewResidual> {
    let run = log_derivative_integral(path, guard_eps)?;
    if run.is_rejected() {
        return Ok(SkewResidual {
            sup: f64::NAN,
            guard_hits: run.guard_hits(),
            rejected: true,
        });
    }
    let base = path.values()[0];
    let sup = run
        .values()
        .iter()
        .zip(path.values())
        .map(|(i, b)| (base * i.exp() - b).norm())
        .fold(0.0, f64::max);
    Ok(SkewResidual {
        sup,
        guard_hits: 0,
        rejected: false,
    })
}

/// Continuous argument accumulated from principal-branch increments,
/// counterclockwise positive. Starts at `arg(B_first/z0)`, which is 0 when
/// the grid starts at the origin. An increment above π/2 in magnitude marks
/// the path rejected.
pub fn winding_angle(path: &ComplexPath) -> Result<RunningIntegral> {
    require_nonzero_origin(path)?;
    let b = path.values();
    if let Some(i) = b.iter().position(|z| *z == ZERO) {
        return Err(Error::Domain(format!("path hits 0 at grid index {i}")));
    }
    let mut rejected = false;
    let panels: Vec<Complex64> = b
        .windows(2)
        .map(|w| {
            let d = (w[1] * w[0].conj()).arg();
            rejected |= d.abs() > FRAC_PI_2;
            Complex64::new(d, 0.0)
        })
        .collect();
    let start = Complex64::new((b[0] * path.origin().conj()).arg(), 0.0);
    let run = RunningIntegral::from_panels_offset(path.grid().clone(), start, panels.into_iter());
    Ok(run.with_guard(0, rejected))
}

/// `∫ |B_s|^{−1/H} ds` with the default guard.
pub fn clock_integral(path: &ComplexPath, h: Hurst) -> Result<RunningIntegral> {
    clock_integral_guarded(path, h, DEFAULT_GUARD_EPS)
}

/// Trapezoid quadrature of `|B_s|^{−1/H}` in time. A path that starts at 0
/// must be restricted to positive times first; exact zeros are errors.
pub fn clock_integral_guarded(path: &ComplexPath, h: Hurst, guard_eps: f64) -> Result<RunningIntegral> {
    let b = path.values();
    if let Some(i) = b.iter().position(|z| *z == ZERO) {
        return Err(Error::Domain(format!("path hits 0 at grid index {i}")));
    }
    let hits = guard_count(b, guard_radius(path.origin(), guard_eps));
    let p = -1.0 / h.value();
    let t = path.times();
    let g: Vec<f64> = b.iter().map(|z| z.norm().powf(p)).collect();
    let panels = (0..b.len() - 1).map(|i| Complex64::new(0.5 * (g[i] + g[i + 1]) * (t[i + 1] - t[i]), 0.0));
    let run = RunningIntegral::from_panels(path.grid().clone(), panels);
    Ok(run.with_guard(hits, hits > 0))
}

/// `Z_t = ∫₁ᵗ (B² dB¹ − B¹ dB²)/s^{2H}` by the trapezoid rule, on the part of
/// the grid from `t = 1` on.
pub fn winding_functional_z(path: &ComplexPath, h: Hurst) -> Result<RunningIntegral> {
    let Some(k) = path.grid().index_of(1.0) else {
        return Err(Error::GridMismatch("grid does not contain t = 1".into()));
    };
    let t = &path.times()[k..];
    let b = &path.values()[k..];
    let two_h = h.two_h();
    let w: Vec<f64> = t.iter().map(|s| s.powf(-two_h)).collect();
    let panels = (0..b.len() - 1).map(|i| {
        let d = b[i + 1] - b[i];
        let y = 0.5 * (w[i] * b[i].im + w[i + 1] * b[i + 1].im);
        let x = 0.5 * (w[i] * b[i].re + w[i + 1] * b[i + 1].re);
        Complex64::new(y * d.re - x * d.im, 0.0)
    });
    let grid = if k == 0 {
        path.grid().clone()
    } else {
        std::sync::Arc::new(TimeGrid::explicit(t.to_vec())?)
    };
    Ok(RunningIntegral::from_panels(grid, panels))
}

/// Block boundaries `k·T/n_blocks` as grid indices, each block at least 8
/// steps long.
fn block_indices(grid: &TimeGrid, n_blocks: usize) -> Result<Vec<usize>> {
    if n_blocks == 0 {
        return domain("n_blocks must be positive");
    }
    if !grid.starts_at_zero() {
        return domain("variation blocks need a grid starting at 0");
    }
    let t = grid.t_max();
    let mut idx = Vec::with_capacity(n_blocks + 1);
    idx.push(0);
    for k in 1..=n_blocks {
        let tk = t * k as f64 / n_blocks as f64;
        let i = grid
            .index_of(tk)
            .ok_or_else(|| Error::GridMismatch(format!("block boundary {tk} is not a grid point")))?;
        if i - idx[k - 1] < 8 {
            return Err(Error::GridMismatch(format!(
                "block {k} has {} steps; at least 8 are needed",
                i - idx[k - 1]
            )));
        }
        idx.push(i);
    }
    Ok(idx)
}

/// `Σ_k |∫_{block k} dB/B|^{1/H}` from a precomputed running integral.
pub fn variation_sum_from(running: &RunningIntegral, h: Hurst, n_blocks: usize) -> Result<f64> {
    let idx = block_indices(running.grid(), n_blocks)?;
    let p = 1.0 / h.value();
    Ok(idx.windows(2).map(|w| running.between(w[0], w[1]).norm().powf(p)).sum())
}

pub fn variation_sum(path: &ComplexPath, h: Hurst, n_blocks: usize) -> Result<f64> {
    let run = log_derivative_integral(path, DEFAULT_GUARD_EPS)?;
    if run.is_rejected() {
        return Err(Error::Numerical("path rejected by the near-origin guard".into()));
    }
    variation_sum_from(&run, h, n_blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subdivided_matches_plain_far_from_origin() {
        let h = Hurst::new(0.75).unwrap();
        let grid = std::sync::Arc::new(TimeGrid::uniform(64, 1.0 / 64.0).unwrap());
        let z0 = Complex64::new(3.0, 0.0);
        let p = ComplexPath::from_fn(grid, z0, h, |t| z0 + Complex64::new(0.1 * t, 0.05 * t * t));
        let a = f_over_b_integral(|w| w, &p, 1e-6).unwrap();
        let b = f_over_b_integral_subdivided(|w| w, &p, 1e-6, 0.5).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn subdivided_resolves_a_near_miss() {
        // One chord passing at distance 0.01 from the origin.
        let h = Hurst::new(0.75).unwrap();
        let grid = std::sync::Arc::new(TimeGrid::explicit(vec![0.0, 1.0]).unwrap());
        let a = Complex64::new(-1.0, 0.01);
        let c = Complex64::new(1.0, 0.01);
        let p = ComplexPath::new(grid, vec![a, c], a, h).unwrap();
        let exact = -1.0 / c + 1.0 / a;
        let plain = f_over_b_integral(|w| w * w, &p, 1e-6).unwrap().final_value();
        let fine = f_over_b_integral_subdivided(|w| w * w, &p, 1e-6, 0.01).unwrap().final_value();
        assert!((plain - exact).norm() > 0.5);
        assert!((fine - exact).norm() < 1e-3 * exact.norm(), "{fine} vs {exact}");
        assert!((segment_distance(a, c) - 0.01).abs() < 1e-15);
    }
    use crate::fbm::{complex_fbm, SeedSpec};
    use std::f64::consts::{FRAC_PI_4, PI};
    use std::sync::Arc;

    fn h75() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn circle(n: usize, turns: f64, z0: Complex64) -> ComplexPath {
        let grid = Arc::new(TimeGrid::uniform(n, 1.0 / n as f64).unwrap());
        ComplexPath::from_fn(grid, z0, h75(), move |t| {
            z0 * Complex64::from_polar(1.0, 2.0 * PI * turns * t)
        })
    }

    fn fbm(n: usize, seed: u64) -> ComplexPath {
        let grid = TimeGrid::uniform(n, 1.0 / n as f64).unwrap();
        complex_fbm(&grid, h75(), one(), SeedSpec::new(seed, 0)).unwrap()
    }

    #[test]
    fn constant_path_integrates_to_zero() {
        let grid = Arc::new(TimeGrid::uniform(10, 0.1).unwrap());
        let z0 = Complex64::new(2.0, -1.0);
        let p = ComplexPath::from_fn(grid, z0, h75(), |_| z0);
        let run = log_derivative_integral(&p, 1e-6).unwrap();
        assert!(run.values().iter().all(|z| *z == ZERO));
        assert_eq!(skew_product_residual(&p, 1e-6).unwrap().sup, 0.0);
        let clock = clock_integral(&p, h75()).unwrap();
        assert!((clock.final_value().re - 1.0 / z0.norm().powf(1.0 / 0.75)).abs() < 1e-12);
    }

    #[test]
    fn circle_gives_i_phi() {
        let p = circle(4096, 0.25, Complex64::new(0.5, 0.5));
        let run = log_derivative_integral(&p, 1e-6).unwrap();
        let z = run.final_value();
        assert!(z.re.abs() < 1e-6);
        assert!((z.im - FRAC_PI_2).abs() < 1e-6);
        assert!(skew_product_residual(&p, 1e-6).unwrap().sup < 1e-6);
    }

    #[test]
    fn zero_origin_rejected() {
        let p = circle(16, 1.0, ZERO);
        assert!(log_derivative_integral(&p, 1e-6).is_err());
        assert!(winding_angle(&p).is_err());
    }

    #[test]
    fn segment_winding() {
        let grid = Arc::new(TimeGrid::explicit(vec![0.0, 1.0]).unwrap());
        let p = ComplexPath::new(grid, vec![one(), Complex64::new(1.0, 1.0)], one(), h75()).unwrap();
        assert!((winding_angle(&p).unwrap().final_value().re - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn full_circle_winding() {
        let p = circle(1024, 1.0, one());
        let th = winding_angle(&p).unwrap();
        assert!(!th.is_rejected());
        assert!((th.final_value().re - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn coarse_circle_is_rejected() {
        let p = circle(3, 1.0, one());
        assert!(winding_angle(&p).unwrap().is_rejected());
    }

    #[test]
    fn winding_matches_unit_phase() {
        let z0 = Complex64::new(-0.3, 0.8);
        let grid = TimeGrid::uniform(2048, 1.0 / 2048.0).unwrap();
        let p = complex_fbm(&grid, h75(), z0, SeedSpec::new(8, 1)).unwrap();
        let th = winding_angle(&p).unwrap();
        let phase0 = z0.norm() / z0;
        for (t, b) in th.values().iter().zip(p.values()) {
            let lhs = Complex64::from_polar(1.0, t.re);
            assert!((lhs - b / b.norm() * phase0).norm() < 1e-12);
        }
    }

    #[test]
    fn branch_consistency_on_fbm() {
        for seed in 0..20 {
            let p = fbm(4096, seed);
            let th = winding_angle(&p).unwrap();
            let run = log_derivative_integral(&p, 1e-6).unwrap();
            if th.is_rejected() || run.is_rejected() {
                continue;
            }
            for (a, b) in th.values().iter().zip(run.values()) {
                assert!((a.re - b.im).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn guard_rejects_near_origin() {
        let grid = Arc::new(TimeGrid::uniform(4, 0.25).unwrap());
        let vals = vec![one(), Complex64::new(0.5, 0.0), Complex64::new(1e-9, 0.0), one(), one()];
        let p = ComplexPath::new(grid, vals, one(), h75()).unwrap();
        let run = log_derivative_integral(&p, 1e-6).unwrap();
        assert!(run.is_rejected());
        assert_eq!(run.guard_hits(), 1);
        assert!(skew_product_residual(&p, 1e-6).unwrap().rejected);
    }

    #[test]
    fn skew_residual_shrinks_with_mesh() {
        let fine = fbm(1 << 14, 5);
        let mut last = f64::INFINITY;
        for step in [4usize, 2, 1] {
            let grid = Arc::new(TimeGrid::uniform((1 << 14) / step, step as f64 / (1 << 14) as f64).unwrap());
            let vals = fine.values().iter().step_by(step).copied().collect();
            let p = ComplexPath::new(grid, vals, one(), h75()).unwrap();
            let r = skew_product_residual(&p, 1e-6).unwrap().sup;
            assert!(r < last);
            last = r;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn clock_is_monotone() {
        let p = fbm(1024, 3);
        let c = clock_integral(&p, h75()).unwrap();
        assert!(c.values().windows(2).all(|w| w[1].re >= w[0].re));
    }

    #[test]
    fn z_vanishes_on_real_axis() {
        let grid = Arc::new(TimeGrid::geometric(1.0, 1.1, 30, false).unwrap());
        let p = ComplexPath::from_fn(grid, one(), h75(), |t| Complex64::new(t.sqrt(), 0.0));
        let z = winding_functional_z(&p, h75()).unwrap();
        assert!(z.values().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn z_on_circle_matches_closed_form() {
        // B = r·e^{iφ(s)}, φ(s) = s on [1, 2]: Z = −r² ∫₁² s^{−1.5} ds.
        let r = 1.7;
        let n = 20_000;
        let grid = Arc::new(TimeGrid::explicit((0..=n).map(|i| 1.0 + i as f64 / n as f64).collect()).unwrap());
        let p = ComplexPath::from_fn(grid, one(), h75(), |s| Complex64::from_polar(r, s));
        let z = winding_functional_z(&p, h75()).unwrap().final_value().re;
        let want = -r * r * 2.0 * (1.0 - 2.0f64.powf(-0.5));
        assert!((z - want).abs() < 1e-6, "{z} vs {want}");
    }

    #[test]
    fn z_needs_unit_time() {
        let grid = TimeGrid::uniform(10, 0.3).unwrap();
        let p = complex_fbm(&grid, h75(), one(), SeedSpec::new(1, 0)).unwrap();
        assert!(winding_functional_z(&p, h75()).is_err());
    }

    #[test]
    fn single_block_variation() {
        let p = fbm(512, 2);
        let run = log_derivative_integral(&p, 1e-6).unwrap();
        let v = variation_sum(&p, h75(), 1).unwrap();
        assert!((v - run.final_value().norm().powf(1.0 / 0.75)).abs() < 1e-12);
    }

    #[test]
    fn coarse_blocks_rejected() {
        let p = fbm(64, 2);
        assert!(variation_sum(&p, h75(), 16).is_err());
        assert!(variation_sum(&p, h75(), 8).is_ok());
    }

    #[test]
    fn f_over_b_identity_for_z() {
        let p = fbm(256, 6);
        let a = f_over_b_integral(|w| w, &p, 1e-6).unwrap();
        let b = log_derivative_integral(&p, 1e-6).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
