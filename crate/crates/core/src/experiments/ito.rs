//! Itô-formula and skew-product residual suites.

use std::sync::Arc;

use num_complex::Complex64;

use super::config::{ExperimentConfig, HoloFn};
use super::harness::{median, mean_report, par_map, ExperimentOutput};
use crate::error::{domain, Result};
use crate::fbm::{ComplexPath, ComplexSampler, TimeGrid};
use crate::integral::{
    divergence_integral_gradient, log_derivative_integral, pathwise_integral, skew_product_residual, winding_angle,
    Rule,
};
use crate::stats::{Check, MCReport};

/// Residuals below this are round-off and exempt from the refinement trend.
pub const ROUND_OFF_FLOOR: f64 = 1e-12;

const ITO_TOL: f64 = 1e-3;

/// Uniform-grid path and its two coarser subsamplings (stride 2 and 4).
pub(crate) struct Refinements {
    grids: [Arc<TimeGrid>; 3],
}

impl Refinements {
    pub(crate) fn new(grid: &TimeGrid) -> Result<Self> {
        let n = grid.len() - 1;
        if !grid.starts_at_zero() || n % 4 != 0 {
            return domain("refinement study needs a uniform grid from 0 with a step count divisible by 4");
        }
        let dt = grid.t_max() / n as f64;
        Ok(Self {
            grids: [
                Arc::new(grid.clone()),
                Arc::new(TimeGrid::uniform(n / 2, 2.0 * dt)?),
                Arc::new(TimeGrid::uniform(n / 4, 4.0 * dt)?),
            ],
        })
    }

    pub(crate) fn steps(&self) -> [usize; 3] {
        [0, 1, 2].map(|k| self.grids[k].len() - 1)
    }

    /// The path restricted to every `2^k`-th grid point, `k = 0, 1, 2`.
    pub(crate) fn levels(&self, path: &ComplexPath) -> Result<[ComplexPath; 3]> {
        let sub = |k: usize| {
            let stride = 1 << k;
            let v: Vec<Complex64> = path.values().iter().step_by(stride).copied().collect();
            ComplexPath::new(self.grids[k].clone(), v, path.origin(), path.hurst())
        };
        Ok([sub(0)?, sub(1)?, sub(2)?])
    }
}

/// `|f(B_T) − f(B_0) − ∫ f′(B) dB|` with the trapezoid rule.
pub fn ito_residual(f: HoloFn, path: &ComplexPath) -> Result<f64> {
    let u: Vec<Complex64> = path.values().iter().map(|&z| f.derivative(z)).collect();
    let int = pathwise_integral(&u, path, Rule::Trapezoid)?;
    let b = path.values();
    Ok((f.eval(b[b.len() - 1]) - f.eval(b[0]) - int.value).norm())
}

/// Trend check over coarse → fine medians: counts increases that are not
/// explained by round-off.
fn trend_violations(coarse_to_fine: &[f64]) -> usize {
    coarse_to_fine
        .windows(2)
        .filter(|w| w[1] > w[0] && w[1] > ROUND_OFF_FLOOR)
        .count()
}

/// Holomorphic Itô residuals for each configured `f`, with a two-step mesh
/// refinement.
pub fn run_ito_checks(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let grid = cfg.grid.build()?;
    let levels = Refinements::new(&grid)?;
    let sampler = ComplexSampler::new(Arc::new(grid), cfg.h)?;
    let fs = &cfg.params.functions;
    let res: Vec<Result<Vec<[f64; 3]>>> = par_map(cfg.n_paths, |i| {
        let path = sampler.sample(cfg.z0, cfg.seed.child(i as u64));
        let lv = levels.levels(&path)?;
        fs.iter()
            .map(|&f| Ok([ito_residual(f, &lv[0])?, ito_residual(f, &lv[1])?, ito_residual(f, &lv[2])?]))
            .collect()
    });
    let res = res.into_iter().collect::<Result<Vec<_>>>()?;
    let n = cfg.n_paths as u64;
    let steps = levels.steps();
    let tol = cfg.tolerance.unwrap_or(ITO_TOL);
    let mut out = ExperimentOutput::new(cfg);
    for (k, f) in fs.iter().enumerate() {
        let med: Vec<f64> = (0..3).map(|l| median(res.iter().map(|r| r[k][l]))).collect();
        out.reports.push(
            MCReport::new(format!("ito {} median residual", f.label()), Check::exact(med[0], 0.0, tol), n, 0, cfg.seed)
                .with_note(format!("median over paths of |f(B_T) − f(z0) − ∫f′(B)dB| at n = {}", steps[0])),
        );
        let coarse_to_fine = [med[2], med[1], med[0]];
        out.reports.push(
            MCReport::new(
                format!("ito {} refinement", f.label()),
                Check::exact(trend_violations(&coarse_to_fine) as f64, 0.0, 0.0),
                n,
                0,
                cfg.seed,
            )
            .with_note(format!(
                "medians at n = {}, {}, {}: {:.3e}, {:.3e}, {:.3e}; estimate counts increases above {ROUND_OFF_FLOOR:e}",
                steps[2], steps[1], steps[0], med[2], med[1], med[0]
            )),
        );
        if *f == HoloFn::Z {
            let worst = res.iter().map(|r| r[k][0]).fold(0.0, f64::max);
            out.reports.push(
                MCReport::new("ito z telescoping", Check::exact(worst, 0.0, ROUND_OFF_FLOOR), n, 0, cfg.seed)
                    .with_note("largest residual over paths; only round-off remains"),
            );
        }
    }
    Ok(out.finish())
}

/// Mean identity `E|B_t|² = |z0|² + 2t^{2H}` through the divergence integral
/// of `∇|z|²` plus its trace correction.
pub fn run_gradient_ito(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let base = cfg.grid.build()?;
    let steps = base.len() - 1;
    let h = cfg.h;
    let mut out = ExperimentOutput::new(cfg);
    for (j, &t) in cfg.checkpoints.iter().enumerate() {
        let grid = Arc::new(TimeGrid::uniform(steps, t / steps as f64)?);
        let sampler = ComplexSampler::new(grid, h)?;
        let seed = cfg.seed.child(j as u64);
        let draws: Vec<Result<(f64, f64, f64)>> = par_map(cfg.n_paths, |i| {
            let path = sampler.sample(cfg.z0, seed.child(i as u64));
            let d = divergence_integral_gradient(|_| 4.0, |z| [2.0 * z.re, 2.0 * z.im], &path, h)?;
            let x = divergence_integral_gradient(|_| 2.0, |z| [2.0 * z.re, 0.0], &path, h)?;
            Ok((d.divergence, d.correction, x.correction))
        });
        let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
        let z2 = cfg.z0.norm_sqr();
        let t2h = t.powf(h.two_h());
        let tol = cfg.tolerance.unwrap_or(0.0);
        let total: Vec<Option<f64>> = draws.iter().map(|d| Some(z2 + d.0 + d.1)).collect();
        out.reports.push(
            mean_report(&format!("E|B_t|^2 at t={t}"), &total, z2 + 2.0 * t2h, tol, seed)
                .with_note("|z0|² + divergence + trace correction, against |z0|² + 2t^{2H}"),
        );
        let div: Vec<Option<f64>> = draws.iter().map(|d| Some(d.0)).collect();
        out.reports.push(mean_report(&format!("E divergence at t={t}"), &div, 0.0, tol, seed));
        let corr = draws[0].1;
        out.reports.push(
            MCReport::new(
                format!("trace correction |z|^2 at t={t}"),
                Check::exact(corr, 2.0 * t2h, 1e-3 * 2.0 * t2h),
                1,
                0,
                seed,
            )
            .with_note("H∫Δf(B)s^{2H−1}ds with Δf = 4 is deterministic"),
        );
        out.reports.push(
            MCReport::new(
                format!("trace correction (Re z)^2 at t={t}"),
                Check::exact(draws[0].2, t2h, 1e-3 * t2h),
                1,
                0,
                seed,
            )
            .with_note("2H∫s^{2H−1}ds = t^{2H}"),
        );
    }
    Ok(out.finish())
}

/// Skew-product residual `sup|z0·exp(∫dB/B) − B|` with mesh refinement, plus
/// branch consistency of the winding angle.
pub fn run_skew_check(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let grid = cfg.grid.build()?;
    let levels = Refinements::new(&grid)?;
    let sampler = ComplexSampler::new(Arc::new(grid), cfg.h)?;
    let eps = cfg.guard_eps;
    // Per path: sup residual at the three levels (None if guarded) and the
    // branch gap on the finest level (None if unwrapping was unsafe).
    let res: Vec<Result<([Option<f64>; 3], Option<f64>)>> = par_map(cfg.n_paths, |i| {
        let path = sampler.sample(cfg.z0, cfg.seed.child(i as u64));
        let lv = levels.levels(&path)?;
        let mut sup = [None; 3];
        for (k, p) in lv.iter().enumerate() {
            let r = skew_product_residual(p, eps)?;
            sup[k] = (!r.rejected).then_some(r.sup);
        }
        let theta = winding_angle(&lv[0])?;
        let log = log_derivative_integral(&lv[0], eps)?;
        let gap = (!theta.is_rejected() && !log.is_rejected()).then(|| {
            theta
                .values()
                .iter()
                .zip(log.values())
                .map(|(a, b)| (a.re - b.im).abs())
                .fold(0.0, f64::max)
        });
        Ok((sup, gap))
    });
    let res = res.into_iter().collect::<Result<Vec<_>>>()?;
    let n = cfg.n_paths as u64;
    let rejected = res.iter().filter(|r| r.0.iter().any(|s| s.is_none())).count() as u64;
    let accepted: Vec<&[Option<f64>; 3]> = res.iter().map(|r| &r.0).filter(|s| s.iter().all(|x| x.is_some())).collect();
    let med: Vec<f64> = (0..3).map(|k| median(accepted.iter().map(|s| s[k].unwrap()))).collect();
    let steps = levels.steps();
    let tol = cfg.tolerance.unwrap_or(ITO_TOL);
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(
        MCReport::new("skew median sup residual", Check::exact(med[0], 0.0, tol), n, rejected, cfg.seed)
            .with_note(format!("n = {}; rejected paths came within guard_eps·|z0| of the origin", steps[0])),
    );
    let bound = 2f64.powf(-(cfg.h.two_h() - 1.0));
    let worst = (med[0] / med[1]).max(med[1] / med[2]);
    out.reports.push(
        MCReport::new("skew refinement ratio", Check::exact(worst, 0.0, bound), n, rejected, cfg.seed).with_note(format!(
            "largest ratio of medians under mesh halving (n = {} → {} → {}: {:.3e}, {:.3e}, {:.3e}); bound 2^(1−2H)",
            steps[2], steps[1], steps[0], med[2], med[1], med[0]
        )),
    );
    let gaps: Vec<f64> = res.iter().filter_map(|r| r.1).collect();
    let gap_rejected = n - gaps.len() as u64;
    out.reports.push(
        MCReport::new(
            "branch consistency",
            Check::exact(gaps.iter().copied().fold(0.0, f64::max), 0.0, tol),
            n,
            gap_rejected,
            cfg.seed,
        )
        .with_note("largest sup_t |θ_t − Im ∫dB/B| over accepted paths"),
    );
    Ok(out.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{Experiment, GridSpec};
    use crate::fbm::Hurst;
    use crate::stats::Verdict;

    fn small(e: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(e, Hurst::new(0.75).unwrap()).with_paths(100);
        c.grid = GridSpec::Uniform { n: 1 << 12, t_max: 1.0 };
        c
    }

    #[test]
    fn trend_ignores_round_off() {
        assert_eq!(trend_violations(&[1e-3, 1e-4, 1e-5]), 0);
        assert_eq!(trend_violations(&[1e-3, 1e-2, 1e-5]), 1);
        assert_eq!(trend_violations(&[1e-16, 3e-16, 2e-16]), 0);
    }

    #[test]
    fn ito_small_run() {
        let out = run_ito_checks(&small(Experiment::ItoCheck)).unwrap();
        let z = out.report("ito z telescoping").unwrap();
        assert!(z.estimate.re() <= ROUND_OFF_FLOOR);
        let e = out.report("ito exp median residual").unwrap();
        assert!(e.estimate.re() < 1e-3, "{e:?}");
        assert_eq!(out.report("ito exp refinement").unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn gradient_identity_small_run() {
        let mut c = ExperimentConfig::defaults(Experiment::GradientIto, Hurst::new(0.75).unwrap()).with_paths(400);
        c.grid = GridSpec::Uniform { n: 256, t_max: 1.0 };
        let out = run_gradient_ito(&c).unwrap();
        assert_eq!(out.verdict, Verdict::Pass, "{:#?}", out.reports);
    }

    #[test]
    fn refinement_levels_subsample() {
        let g = TimeGrid::uniform(8, 0.125).unwrap();
        let r = Refinements::new(&g).unwrap();
        assert_eq!(r.steps(), [8, 4, 2]);
        let p = ComplexPath::from_fn(Arc::new(g), Complex64::new(1.0, 0.0), Hurst::new(0.75).unwrap(), |t| {
            Complex64::new(1.0 + t, 0.0)
        });
        let lv = r.levels(&p).unwrap();
        assert_eq!(lv[2].values()[1], Complex64::new(1.5, 0.0));
        assert!(Refinements::new(&TimeGrid::uniform(6, 0.1).unwrap()).is_err());
    }
}
