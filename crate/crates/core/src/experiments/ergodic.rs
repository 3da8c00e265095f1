//! Log-time slope experiments: radial and angular parts of `∫dB/B`, the
//! clock, circle averages, `∫f(1/B)dB`, the shifted/inverted radial law and
//! the 1/H-variation.

use std::sync::Arc;

use num_complex::Complex64;

use super::config::{CircleFn, ExperimentConfig};
use super::harness::{checkpoint_stats, median, par_map, path_records, slope_report, ExperimentOutput, Series};
use crate::constants::{abs_normal_moment, clock_constant};
use crate::error::{Error, Result};
use crate::fbm::{time_inversion, ComplexPath, ComplexSampler, Hurst, TimeGrid};
use crate::integral::{
    clock_integral_guarded, f_over_b_integral_subdivided, log_derivative_integral, variation_sum_from,
};
use crate::stats::{Check, MCReport};

const SLOPE_TOL: f64 = 0.05;
const CLOCK_REL_TOL: f64 = 0.10;
const VARIATION_TOL: f64 = 0.10;
/// Sub-panel length relative to the distance from the origin for `∫f(1/B)dB`
/// on the coarse geometric grids.
pub const SUBDIVISION_STEP: f64 = 0.05;

pub(crate) fn checkpoint_indices(grid: &TimeGrid, times: &[f64]) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| grid.index_of(t).ok_or_else(|| Error::GridMismatch(format!("checkpoint {t} is not a grid point"))))
        .collect()
}

fn constant_path(grid: &Arc<TimeGrid>, z: Complex64, h: Hurst) -> ComplexPath {
    ComplexPath::from_fn(grid.clone(), z, h, |_| z)
}

fn sampler(cfg: &ExperimentConfig) -> Result<(Arc<TimeGrid>, ComplexSampler, Vec<usize>)> {
    let grid = cfg.grid.build_arc()?;
    let idx = checkpoint_indices(&grid, &cfg.checkpoints)?;
    Ok((grid.clone(), ComplexSampler::new(grid, cfg.h)?, idx))
}

fn pick(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

fn collect<T>(v: Vec<Result<T>>) -> Result<Vec<T>> {
    v.into_iter().collect()
}

fn record(out: &mut ExperimentOutput, cfg: &ExperimentConfig, quantity: &str, series: &[Series]) {
    out.checkpoints.extend(checkpoint_stats(quantity, &cfg.checkpoints, series));
    if cfg.params.per_path {
        out.per_path.extend(path_records(quantity, series));
    }
}

/// `(Re ∫dB/B, Im ∫dB/B, log|B|)` at the checkpoints; `None` if guarded.
fn log_series(path: &ComplexPath, idx: &[usize], eps: f64) -> Result<Option<[Vec<f64>; 3]>> {
    let run = f_over_b_integral_subdivided(|w| w, path, eps, SUBDIVISION_STEP)?;
    if run.is_rejected() {
        return Ok(None);
    }
    let v = run.values();
    let b = path.values();
    Ok(Some([
        idx.iter().map(|&i| v[i].re).collect(),
        idx.iter().map(|&i| v[i].im).collect(),
        idx.iter().map(|&i| b[i].norm().ln()).collect(),
    ]))
}

fn split(all: &[Option<[Vec<f64>; 3]>], k: usize) -> Vec<Series> {
    all.iter().map(|s| s.as_ref().map(|s| s[k].clone())).collect()
}

/// Slope of `Re ∫dB/B` against `ln t`, target `H`, with the `log|B_t|`
/// cross-check.
pub fn run_ergodic_radial(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, idx) = sampler(cfg)?;
    let all = collect(par_map(cfg.n_paths, |i| {
        log_series(&sampler.sample(cfg.z0, cfg.seed.child(i as u64)), &idx, cfg.guard_eps)
    }))?;
    let (re, logb) = (split(&all, 0), split(&all, 2));
    let h = cfg.h.value();
    let tol = cfg.tolerance.unwrap_or(SLOPE_TOL);
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(slope_report("radial slope", &cfg.checkpoints, &re, h, tol, cfg.seed));
    out.reports.push(slope_report("log|B_t| slope", &cfg.checkpoints, &logb, h, tol, cfg.seed));
    record(&mut out, cfg, "re_log_integral", &re);
    record(&mut out, cfg, "log_abs_b", &logb);
    if cfg.params.controls {
        let c = log_series(&constant_path(&grid, cfg.z0, cfg.h), &idx, cfg.guard_eps)?;
        out.controls.push(
            slope_report("control: constant path", &cfg.checkpoints, &[c.map(|c| c[0].clone())], h, tol, cfg.seed)
                .with_note("B ≡ z0 has no radial growth"),
        );
    }
    Ok(out.finish())
}

/// Slope of `Im ∫dB/B` against `ln t`, target 0.
pub fn run_ergodic_angular(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, idx) = sampler(cfg)?;
    let all = collect(par_map(cfg.n_paths, |i| {
        log_series(&sampler.sample(cfg.z0, cfg.seed.child(i as u64)), &idx, cfg.guard_eps)
    }))?;
    let im = split(&all, 1);
    let tol = cfg.tolerance.unwrap_or(SLOPE_TOL);
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(slope_report("angular slope", &cfg.checkpoints, &im, 0.0, tol, cfg.seed));
    record(&mut out, cfg, "im_log_integral", &im);
    if cfg.params.controls {
        // Winds once per unit of ln(1 + t).
        let z0 = cfg.z0;
        let h = cfg.h.value();
        let spiral = ComplexPath::from_fn(grid.clone(), z0, cfg.h, |t| {
            let l = (1.0 + t).ln();
            z0 * (h * l).exp() * Complex64::new(0.0, l).exp()
        });
        let c = log_series(&spiral, &idx, cfg.guard_eps)?;
        out.controls.push(
            slope_report("control: logarithmic spiral", &cfg.checkpoints, &[c.map(|c| c[1].clone())], 0.0, tol, cfg.seed)
                .with_note("deterministic spiral with angular slope 1"),
        );
    }
    Ok(out.finish())
}

fn clock_series(path: &ComplexPath, h: Hurst, idx: &[usize], eps: f64) -> Result<Series> {
    let run = clock_integral_guarded(path, h, eps)?;
    Ok((!run.is_rejected()).then(|| pick(&run.real_values(), idx)))
}

/// Slope of the clock `∫|B|^{−1/H}ds` against `ln t`, target `E|N|^{−1/H}`.
pub fn run_ergodic_clock(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, idx) = sampler(cfg)?;
    let h = cfg.h;
    let series = collect(par_map(cfg.n_paths, |i| {
        clock_series(&sampler.sample(cfg.z0, cfg.seed.child(i as u64)), h, &idx, cfg.guard_eps)
    }))?;
    let target = abs_normal_moment(-1.0 / h.value())?;
    let tol = cfg.tolerance.unwrap_or(CLOCK_REL_TOL) * target;
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(
        MCReport::new("clock constant identity", Check::exact(target, clock_constant(h), 1e-12 * target), 1, 0, cfg.seed)
            .with_note("E|N|^{−1/H} against Γ(1 − 1/(2H))/2^{1/(2H)}"),
    );
    out.reports.push(slope_report("clock slope", &cfg.checkpoints, &series, target, tol, cfg.seed));
    record(&mut out, cfg, "clock", &series);
    if cfg.params.controls {
        let c = clock_series(&constant_path(&grid, cfg.z0, h), h, &idx, cfg.guard_eps)?;
        out.controls.push(
            slope_report("control: constant path", &cfg.checkpoints, &[c], target, tol, cfg.seed)
                .with_note("B ≡ z0 makes the clock linear in t"),
        );
    }
    Ok(out.finish())
}

/// `∫₁ᵗ |β|^{−1/H} f(β/|β|) ds` at the checkpoints for each `f`.
fn circle_series(path: &ComplexPath, h: Hurst, fs: &[CircleFn], idx: &[usize], start: usize) -> Vec<Vec<f64>> {
    let t = path.times();
    let b = path.values();
    let p = -1.0 / h.value();
    fs.iter()
        .map(|&f| {
            let g = |i: usize| {
                let r = b[i].norm();
                if r > 0.0 {
                    r.powf(p) * f.eval(b[i] / r)
                } else {
                    f64::INFINITY
                }
            };
            let mut acc = vec![0.0; t.len()];
            let mut ga = g(start);
            for i in start..t.len() - 1 {
                let gb = g(i + 1);
                acc[i + 1] = acc[i] + 0.5 * (ga + gb) * (t[i + 1] - t[i]);
                ga = gb;
            }
            pick(&acc, idx)
        })
        .collect()
}

/// Circle averages of the clock density from `z0 = 0`, integrated from `t = 1`.
pub fn run_circle_average(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, idx) = sampler(cfg)?;
    let start = grid
        .index_of(1.0)
        .ok_or_else(|| Error::GridMismatch("circle averages start at t = 1, which is not a grid point".into()))?;
    let h = cfg.h;
    let fs = &cfg.params.circle;
    let all: Vec<Option<Vec<Vec<f64>>>> = par_map(cfg.n_paths, |i| {
        let v = circle_series(&sampler.sample(cfg.z0, cfg.seed.child(i as u64)), h, fs, &idx, start);
        v.iter().all(|s| s.iter().all(|x| x.is_finite())).then_some(v)
    });
    let c = abs_normal_moment(-1.0 / h.value())?;
    let tol = cfg.tolerance.unwrap_or(CLOCK_REL_TOL) * c;
    let mut out = ExperimentOutput::new(cfg);
    for (k, f) in fs.iter().enumerate() {
        let series: Vec<Series> = all.iter().map(|a| a.as_ref().map(|a| a[k].clone())).collect();
        out.reports.push(
            slope_report(&format!("circle {} slope", f.label()), &cfg.checkpoints, &series, c * f.mean(), tol, cfg.seed),
        );
        record(&mut out, cfg, &format!("circle_{}", f.label()), &series);
    }
    if cfg.params.controls {
        let fixed = constant_path(&grid, Complex64::new(1.0, 0.0), h);
        let v = circle_series(&fixed, h, &[CircleFn::One], &idx, start);
        out.controls.push(
            slope_report("control: constant path", &cfg.checkpoints, &[Some(v[0].clone())], c, tol, cfg.seed)
                .with_note("β ≡ 1 gives a clock linear in t"),
        );
    }
    Ok(out.finish())
}

/// Slopes of `Re` and `Im` of `∫f(1/B)dB` against `ln t`, target `H·f′(0)`.
pub fn run_prop20(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, idx) = sampler(cfg)?;
    let fs = &cfg.params.functions;
    if fs.is_empty() {
        return Err(Error::Domain("functions: need at least one holomorphic function".into()));
    }
    let eval = |path: &ComplexPath| -> Result<Option<Vec<[Vec<f64>; 2]>>> {
        let mut per_f = Vec::with_capacity(fs.len());
        for &f in fs {
            let run = f_over_b_integral_subdivided(|w| f.eval(w), path, cfg.guard_eps, SUBDIVISION_STEP)?;
            if run.is_rejected() {
                return Ok(None);
            }
            let v = run.values();
            per_f.push([idx.iter().map(|&i| v[i].re).collect(), idx.iter().map(|&i| v[i].im).collect()]);
        }
        Ok(Some(per_f))
    };
    let all = collect(par_map(cfg.n_paths, |i| eval(&sampler.sample(cfg.z0, cfg.seed.child(i as u64)))))?;
    let h = cfg.h.value();
    let tol = cfg.tolerance.unwrap_or(SLOPE_TOL);
    let mut out = ExperimentOutput::new(cfg);
    for (k, f) in fs.iter().enumerate() {
        let target = h * f.derivative(Complex64::new(0.0, 0.0));
        for (part, name, want) in [(0, "re", target.re), (1, "im", target.im)] {
            let series: Vec<Series> = all.iter().map(|a| a.as_ref().map(|a| a[k][part].clone())).collect();
            out.reports.push(slope_report(
                &format!("f={} {name} slope", f.label()),
                &cfg.checkpoints,
                &series,
                want,
                tol,
                cfg.seed,
            ));
            record(&mut out, cfg, &format!("{}_{name}", f.label()), &series);
        }
    }
    if cfg.params.controls {
        let fixed = eval(&constant_path(&grid, cfg.z0, cfg.h))?;
        for (k, f) in fs.iter().enumerate() {
            let target = h * f.derivative(Complex64::new(0.0, 0.0)).re;
            if target.abs() <= tol {
                continue;
            }
            let series = [fixed.as_ref().map(|a| a[k][0].clone())];
            out.controls.push(
                slope_report(&format!("control: constant path f={}", f.label()), &cfg.checkpoints, &series, target, tol, cfg.seed)
                    .with_note("B ≡ z0 makes the integral vanish"),
            );
        }
    }
    Ok(out.finish())
}

/// (a) slope of `log|B_t + z|` for large `t`; (b) slope of
/// `log|B̃_t + z·t^{2H}|` for small `t` along time-inverted paths.
pub fn run_corollary19(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, idx) = sampler(cfg)?;
    let z = cfg.params.shift;
    let h = cfg.h;
    let two_h = h.two_h();
    let small: Vec<f64> = cfg.checkpoints.iter().rev().map(|t| 1.0 / t).collect();
    let shifted = |path: &ComplexPath| -> Vec<f64> { idx.iter().map(|&i| (path.values()[i] + z).ln().re).collect() };
    let inverted = |path: &ComplexPath| -> Result<Vec<f64>> {
        let inv = time_inversion(path)?;
        small
            .iter()
            .map(|&t| {
                let b = inv
                    .value_at(t)
                    .ok_or_else(|| Error::GridMismatch(format!("inverted grid misses t = {t}")))?;
                Ok((b + z * t.powf(two_h)).norm().ln())
            })
            .collect()
    };
    let large: Vec<Series> = par_map(cfg.n_paths, |i| {
        Some(shifted(&sampler.sample(cfg.z0, cfg.seed.child(0).child(i as u64))))
    });
    let inv: Vec<Series> = collect(par_map(cfg.n_paths, |i| {
        inverted(&sampler.sample(cfg.z0, cfg.seed.child(1).child(i as u64))).map(Some)
    }))?;
    let tol = cfg.tolerance.unwrap_or(SLOPE_TOL);
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(slope_report("shifted radial slope", &cfg.checkpoints, &large, h.value(), tol, cfg.seed));
    out.reports.push(
        slope_report("time-inverted slope", &small, &inv, h.value(), tol, cfg.seed)
            .with_note("slope of log|B̃_t + z·t^{2H}| against ln t over t in [1/t_max, 1/t_min], B̃ the time inversion"),
    );
    record(&mut out, cfg, "log_abs_shifted", &large);
    if cfg.params.per_path {
        out.per_path.extend(path_records("log_abs_inverted", &inv));
    }
    if cfg.params.controls {
        let zero = constant_path(&grid, cfg.z0, h);
        out.controls.push(
            slope_report("control: zero path (a)", &cfg.checkpoints, &[Some(shifted(&zero))], h.value(), tol, cfg.seed)
                .with_note("log|z| is flat"),
        );
        out.controls.push(
            slope_report("control: zero path (b)", &small, &[Some(inverted(&zero)?)], h.value(), tol, cfg.seed)
                .with_note("log|z·t^{2H}| has slope 2H"),
        );
    }
    Ok(out.finish())
}

/// Ratio of the block 1/H-variation of `∫dB/B` to `E|N|^{1/H}·clock`;
/// `None` for rejected or degenerate paths.
fn variation_ratios(path: &ComplexPath, h: Hurst, blocks: &[usize], eps: f64) -> Result<Option<Vec<f64>>> {
    let run = log_derivative_integral(path, eps)?;
    let clock = clock_integral_guarded(path, h, eps)?;
    if run.is_rejected() || clock.is_rejected() {
        return Ok(None);
    }
    let c = abs_normal_moment(1.0 / h.value())? * clock.final_value().re;
    let mut r = Vec::with_capacity(blocks.len());
    for &nb in blocks {
        let v = variation_sum_from(&run, h, nb)?;
        if !(v > 0.0 && c > 0.0) {
            return Ok(None);
        }
        r.push(v / c);
    }
    Ok(Some(r))
}

pub fn run_variation(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (grid, sampler, _) = sampler(cfg)?;
    let h = cfg.h;
    let mut blocks = cfg.params.blocks.clone();
    blocks.sort_unstable();
    let all = collect(par_map(cfg.n_paths, |i| {
        variation_ratios(&sampler.sample(cfg.z0, cfg.seed.child(i as u64)), h, &blocks, cfg.guard_eps)
    }))?;
    let n = cfg.n_paths as u64;
    let rejected = all.iter().filter(|r| r.is_none()).count() as u64;
    let meds: Vec<f64> = (0..blocks.len()).map(|k| median(all.iter().flatten().map(|r| r[k]))).collect();
    let tol = cfg.tolerance.unwrap_or(VARIATION_TOL);
    let last = blocks.len() - 1;
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(
        MCReport::new(format!("variation median ratio n_blocks={}", blocks[last]), Check::exact(meds[last], 1.0, tol), n, rejected, cfg.seed)
            .with_note("median over paths of Σ|∫_block dB/B|^{1/H} / (E|N|^{1/H}·∫|B|^{−1/H}ds)"),
    );
    let gaps: Vec<f64> = meds.iter().map(|m| (m - 1.0).abs()).collect();
    let ups = gaps.windows(2).filter(|w| w[1] > w[0]).count();
    let table: Vec<String> = blocks.iter().zip(&meds).map(|(b, m)| format!("{b}: {m:.4}")).collect();
    out.reports.push(
        MCReport::new("variation trend", Check::exact(ups as f64, 0.0, 0.0), n, rejected, cfg.seed)
            .with_note(format!("increases of |median − 1| as n_blocks grows; medians {}", table.join(", "))),
    );
    for (b, m) in blocks.iter().zip(&meds) {
        out.note(format!("n_blocks = {b}: median ratio {m:.6}"));
    }
    if cfg.params.controls {
        let degenerate = variation_ratios(&constant_path(&grid, cfg.z0, h), h, &blocks, cfg.guard_eps)?;
        out.controls.push(match degenerate {
            None => MCReport::failed("control: constant path", cfg.seed, "degenerate: zero variation, excluded"),
            Some(r) => MCReport::new("control: constant path", Check::exact(r[r.len() - 1], 1.0, tol), 1, 0, cfg.seed),
        });
    }
    Ok(out.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{Experiment, GridSpec};
    use crate::stats::Verdict;

    fn h(v: f64) -> Hurst {
        Hurst::new(v).unwrap()
    }

    #[test]
    fn deterministic_power_path_has_slope_h() {
        let cfg = ExperimentConfig::defaults(Experiment::ErgodicRadial, h(0.75));
        let grid = cfg.grid.build_arc().unwrap();
        let idx = checkpoint_indices(&grid, &cfg.checkpoints).unwrap();
        let z0 = Complex64::new(1.0, 0.0);
        let p = ComplexPath::from_fn(grid, z0, h(0.75), |t| z0 * (t / 1e-3).max(1.0).powf(0.75));
        let s = log_series(&p, &idx, 1e-6).unwrap().unwrap();
        let r = slope_report("x", &cfg.checkpoints, &[Some(s[2].clone())], 0.75, 0.0, cfg.seed);
        assert!((r.estimate.re() - 0.75).abs() < 1e-12, "{r:?}");
        let r = slope_report("x", &cfg.checkpoints, &[Some(s[0].clone())], 0.75, 0.0, cfg.seed);
        assert!((r.estimate.re() - 0.75).abs() < 1e-3, "{r:?}");
        let a = slope_report("y", &cfg.checkpoints, &[Some(s[1].clone())], 0.0, 0.0, cfg.seed);
        assert!(a.estimate.re().abs() < 1e-12);
    }

    #[test]
    fn circle_series_of_unit_constant_is_linear() {
        let grid = Arc::new(TimeGrid::explicit(vec![0.0, 1.0, 2.0, 4.0]).unwrap());
        let p = constant_path(&grid, Complex64::new(0.0, 1.0), h(0.75));
        let v = circle_series(&p, h(0.75), &[CircleFn::One, CircleFn::Cos], &[1, 3], 1);
        assert_eq!(v[0], vec![0.0, 3.0]);
        assert!(v[1][1].abs() < 1e-15);
    }

    #[test]
    fn variation_control_is_degenerate() {
        let grid = Arc::new(TimeGrid::uniform(1024, 1.0 / 1024.0).unwrap());
        let p = constant_path(&grid, Complex64::new(1.0, 0.0), h(0.75));
        assert!(variation_ratios(&p, h(0.75), &[32], 1e-6).unwrap().is_none());
    }

    #[test]
    fn corollary_small_run() {
        let cfg = ExperimentConfig::defaults(Experiment::Corollary19, h(0.75)).with_paths(200);
        let out = run_corollary19(&cfg).unwrap();
        assert!(out.controls.iter().all(|c| c.verdict == Verdict::Fail));
        assert_eq!(out.verdict, Verdict::Pass, "{:#?}", out.reports);
    }

    #[test]
    fn variation_small_run() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Variation, h(0.75)).with_paths(100);
        cfg.grid = GridSpec::Uniform { n: 1 << 12, t_max: 1.0 };
        cfg.params.blocks = vec![16, 64];
        let out = run_variation(&cfg).unwrap();
        let r = &out.reports[0];
        assert!((r.estimate.re() - 1.0).abs() < 0.2, "{r:?}");
        assert_eq!(out.controls[0].verdict, Verdict::Fail);
    }
}
