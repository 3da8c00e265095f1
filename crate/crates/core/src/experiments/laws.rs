//! Distributional checks: the generator law, the uniform angle, the mixing
//! covariance of the scaling map and the Re/Im symmetry of `F(B)`.

use std::sync::Arc;

use num_complex::Complex64;

use super::config::ExperimentConfig;
use super::harness::{par_map, ExperimentOutput};
use crate::error::{Error, Result};
use crate::fbm::{fbm_covariance, mixing_covariance, mixing_leading_term, scale_transform, ComplexSampler, RealSampler, TimeGrid};
use crate::stats::{circular_uniformity, ks_two_sample, Check, CoMoments, MCReport, Moments};

const P_LEVEL: f64 = 0.01;
/// Indices (into the positive grid times) of the marginals compared by KS.
const KS_MARGINALS: [usize; 5] = [0, 1, 3, 5, 7];

fn mean_se(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let m: Moments = values.into_iter().collect();
    (m.mean(), m.stderr().unwrap_or(f64::NAN))
}

/// Cholesky draws against `R(s, t)` entrywise, and against circulant
/// draws marginal by marginal.
pub fn run_generator_law(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let h = cfg.h;
    let uniform = cfg.grid.build_arc()?;
    if !uniform.starts_at_zero() || uniform.len() < 2 {
        return Err(Error::Domain("grid: the generator check needs a uniform grid from 0".into()));
    }
    let times = uniform.times()[1..].to_vec();
    let m = times.len();
    let explicit = Arc::new(TimeGrid::explicit(times.clone())?);
    let chol = RealSampler::new(explicit, h)?;
    let circ = RealSampler::new(uniform, h)?;
    if !matches!(chol, RealSampler::Cholesky(_)) || !matches!(circ, RealSampler::Circulant(_)) {
        return Err(Error::Domain("grid: expected one Cholesky and one circulant sampler".into()));
    }
    let a: Vec<Vec<f64>> = par_map(cfg.n_paths, |i| chol.sample(0.0, cfg.seed.child(0).child(i as u64)).values().to_vec());
    let b: Vec<Vec<f64>> =
        par_map(cfg.n_paths, |i| circ.sample(0.0, cfg.seed.child(1).child(i as u64)).values()[1..].to_vec());
    let n = cfg.n_paths as u64;
    let mut out = ExperimentOutput::new(cfg);
    let mut worst = (0.0f64, 0, 0);
    for i in 0..m {
        for j in i..m {
            let (est, se) = mean_se(a.iter().map(|v| v[i] * v[j]));
            let z = (est - fbm_covariance(times[i], times[j], h)?).abs() / se;
            if !(z <= worst.0) {
                worst = (z, i, j);
            }
        }
    }
    out.reports.push(
        MCReport::new("covariance max z-score", Check::exact(worst.0, 0.0, 4.0), n, 0, cfg.seed).with_note(format!(
            "largest |mean(X_s X_t) − R(s, t)| / SE over {} entries, at (s, t) = ({}, {})",
            m * (m + 1) / 2,
            times[worst.1],
            times[worst.2]
        )),
    );
    let column = |x: &[Vec<f64>], k: usize| -> Vec<f64> { x.iter().map(|v| v[k]).collect() };
    for &k in KS_MARGINALS.iter().filter(|&&k| k < m) {
        let p = ks_two_sample(&column(&a, k), &column(&b, k))?;
        out.reports.push(
            MCReport::new(format!("ks cholesky vs circulant t={}", times[k]), Check::p_value(p, P_LEVEL), n, 0, cfg.seed)
                .with_note("two-sample Kolmogorov–Smirnov on one marginal"),
        );
    }
    if cfg.params.controls {
        let p = ks_two_sample(&column(&a, 0), &column(&b, m - 1))?;
        out.controls.push(
            MCReport::new("control: mismatched marginals", Check::p_value(p, P_LEVEL), n, 0, cfg.seed)
                .with_note(format!("Cholesky at t = {} against circulant at t = {}", times[0], times[m - 1])),
        );
    }
    Ok(out.finish())
}

fn correlation_report(name: String, pairs: impl Iterator<Item = (f64, f64)>, cfg: &ExperimentConfig) -> MCReport {
    let mut c = CoMoments::new();
    for (x, y) in pairs {
        c.push(x, y);
    }
    let n = c.count();
    match c.correlation() {
        Ok(r) => MCReport::new(name, Check::new(r, 1.0 / (n as f64).sqrt(), 0.0, 0.0), n, 0, cfg.seed)
            .with_note("sample correlation against 0 with standard error 1/√n"),
        Err(e) => MCReport::failed(name, cfg.seed, e.to_string()),
    }
}

/// Uniformity of `arg B_t` from the origin and its independence from the
/// radial part.
pub fn run_uniform_angle(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let grid = cfg.grid.build_arc()?;
    let t = cfg.checkpoints.last().copied().unwrap_or(grid.t_max());
    let k = grid
        .index_of(t)
        .ok_or_else(|| Error::GridMismatch(format!("checkpoint {t} is not a grid point")))?;
    let sampler = ComplexSampler::new(grid, cfg.h)?;
    // (B_t, max_{s ≤ t} |B_s|)
    let draws: Vec<(Complex64, f64)> = par_map(cfg.n_paths, |i| {
        let p = sampler.sample(cfg.z0, cfg.seed.child(i as u64));
        let b = &p.values()[..=k];
        (b[k], b.iter().map(|z| z.norm()).fold(0.0, f64::max))
    });
    let n = cfg.n_paths as u64;
    let angles: Vec<f64> = draws.iter().map(|d| d.0.arg()).collect();
    let mut out = ExperimentOutput::new(cfg);
    out.reports.push(
        MCReport::new(format!("uniformity t={t}"), Check::p_value(circular_uniformity(&angles)?, P_LEVEL), n, 0, cfg.seed)
            .with_note("Rayleigh and KS on arg B_t, Bonferroni-combined"),
    );
    for m in [1, 2] {
        let mf = m as f64;
        out.reports.push(correlation_report(
            format!("corr cos({m}·arg), |B_t|"),
            draws.iter().map(|d| ((mf * d.0.arg()).cos(), d.0.norm())),
            cfg,
        ));
        out.reports.push(correlation_report(
            format!("corr cos({m}·arg), max|B_s|"),
            draws.iter().map(|d| ((mf * d.0.arg()).cos(), d.1)),
            cfg,
        ));
    }
    if cfg.params.controls {
        let shifted: Vec<f64> = draws.iter().map(|d| (d.0 + 5.0).arg()).collect();
        out.controls.push(
            MCReport::new("control: B_t + 5", Check::p_value(circular_uniformity(&shifted)?, P_LEVEL), n, 0, cfg.seed)
                .with_note("a shifted cloud has a preferred direction"),
        );
    }
    Ok(out.finish())
}

/// Scaling factors `k^n` checked by simulation.
const MIXING_SAMPLED: u32 = 3;
const ASYMPTOTIC_FROM: u32 = 20;
const ASYMPTOTIC_REL_TOL: f64 = 0.05;
const DECAY_BOUND: f64 = 1e-2;

/// The covariance `E(β_s β_{kⁿt})/k^{nH}` of the scaling map: deterministic
/// decay and asymptotics, and a simulated check for small `n`.
pub fn run_mixing(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (h, k, n_max) = (cfg.h, cfg.params.k, cfg.params.n_max);
    let (s, t) = (1.0, 1.0);
    let seed = cfg.seed;
    let mut out = ExperimentOutput::new(cfg);
    let values = (0..=n_max).map(|n| mixing_covariance(s, t, k, n, h)).collect::<Result<Vec<_>>>()?;
    out.reports.push(
        MCReport::new("mixing n=0", Check::exact(values[0], fbm_covariance(s, t, h)?, 1e-14), 1, 0, seed)
            .with_note("no scaling reduces to R(s, t)"),
    );
    let ups = values.windows(2).filter(|w| !(w[1] < w[0])).count();
    out.reports.push(
        MCReport::new("mixing monotone decay", Check::exact(ups as f64, 0.0, 0.0), 1, 0, seed)
            .with_note(format!("non-decreasing steps over n = 0..{n_max}")),
    );
    out.reports.push(
        MCReport::new(format!("mixing n={n_max}"), Check::exact(values[n_max as usize], 0.0, DECAY_BOUND), 1, 0, seed)
            .with_note(format!("value {:.6e}", values[n_max as usize])),
    );
    if n_max >= ASYMPTOTIC_FROM {
        let worst = (ASYMPTOTIC_FROM..=n_max)
            .map(|n| (values[n as usize] / mixing_leading_term(s, t, k, n, h) - 1.0).abs())
            .fold(0.0, f64::max);
        out.reports.push(
            MCReport::new("mixing asymptotic", Check::exact(worst, 0.0, ASYMPTOTIC_REL_TOL), 1, 0, seed).with_note(format!(
                "largest relative gap to H·s·t^{{2H−1}}·k^{{n(H−1)}} over n = {ASYMPTOTIC_FROM}..{n_max}"
            )),
        );
    }
    for n in 0..=10u32.min(n_max) {
        out.note(format!("n = {n}: {:.6}", values[n as usize]));
    }

    let sampled = MIXING_SAMPLED.min(n_max);
    let grid = Arc::new(TimeGrid::geometric(s, k, sampled as usize + 1, true)?);
    let sampler = RealSampler::new(grid, h)?;
    let products: Vec<Result<Vec<f64>>> = par_map(cfg.n_paths, |i| {
        let path = sampler.sample(0.0, seed.child(i as u64));
        let base = path.values()[1];
        (1..=sampled)
            .map(|n| Ok(base * scale_transform(&path, k.powi(n as i32))?.values()[1]))
            .collect()
    });
    let products = products.into_iter().collect::<Result<Vec<_>>>()?;
    let count = cfg.n_paths as u64;
    for n in 1..=sampled {
        let (est, se) = mean_se(products.iter().map(|p| p[n as usize - 1]));
        out.reports.push(
            MCReport::new(format!("mixing sampled n={n}"), Check::new(est, se, values[n as usize], 0.0), count, 0, seed)
                .with_note("mean of β_s·(T_k^n β)_t over sampled paths"),
        );
        if n == 1 && cfg.params.controls {
            out.controls.push(
                MCReport::new("control: unscaled covariance", Check::new(est, se, values[0], 0.0), count, 0, seed)
                    .with_note("the n = 1 sample against R(s, t)"),
            );
        }
    }
    Ok(out.finish())
}

/// `Var Re ΔF = Var Im ΔF` and `Cov(Re ΔF, Im ΔF) = 0` for holomorphic `F`.
pub fn run_symmetry(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let grid = cfg.grid.build_arc()?;
    let t = cfg.checkpoints.last().copied().unwrap_or(grid.t_max());
    let k = grid
        .index_of(t)
        .ok_or_else(|| Error::GridMismatch(format!("checkpoint {t} is not a grid point")))?;
    let sampler = ComplexSampler::new(grid, cfg.h)?;
    let ends: Vec<Complex64> = par_map(cfg.n_paths, |i| sampler.sample(cfg.z0, cfg.seed.child(i as u64)).values()[k]);
    let n = cfg.n_paths as u64;
    let z0 = cfg.z0;
    let mut out = ExperimentOutput::new(cfg);
    let pair = |name: &str, d: &[Complex64]| -> [MCReport; 2] {
        let (mr, mi) = (mean_se(d.iter().map(|z| z.re)).0, mean_se(d.iter().map(|z| z.im)).0);
        let (dv, dv_se) = mean_se(d.iter().map(|z| (z.im - mi).powi(2) - (z.re - mr).powi(2)));
        let (cv, cv_se) = mean_se(d.iter().map(|z| (z.re - mr) * (z.im - mi)));
        [
            MCReport::new(format!("{name} variance gap"), Check::new(dv, dv_se, 0.0, 0.0), n, 0, cfg.seed)
                .with_note("Var(Im ΔF) − Var(Re ΔF) with the joint standard error"),
            MCReport::new(format!("{name} covariance"), Check::new(cv, cv_se, 0.0, 0.0), n, 0, cfg.seed)
                .with_note("Cov(Re ΔF, Im ΔF)"),
        ]
    };
    for f in &cfg.params.functions {
        let d: Vec<Complex64> = ends.iter().map(|&b| f.eval(b) - f.eval(z0)).collect();
        out.reports.extend(pair(&format!("F={}", f.label()), &d));
    }
    if cfg.params.controls {
        let d: Vec<Complex64> = ends.iter().map(|b| Complex64::new(b.norm_sqr() - z0.norm_sqr(), 0.0)).collect();
        let [gap, _] = pair("control: F=|z|^2", &d);
        out.controls.push(gap.with_note("a real-valued F has no imaginary spread"));
    }
    Ok(out.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Experiment;
    use crate::fbm::Hurst;
    use crate::stats::Verdict;

    fn h75() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    #[test]
    fn mixing_small_run() {
        let cfg = ExperimentConfig::defaults(Experiment::Mixing, h75()).with_paths(2000);
        let out = run_mixing(&cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Pass, "{:#?}", out.reports);
        assert_eq!(out.controls[0].verdict, Verdict::Fail);
    }

    #[test]
    fn symmetry_small_run() {
        let cfg = ExperimentConfig::defaults(Experiment::Symmetry, h75()).with_paths(5000);
        let out = run_symmetry(&cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Pass, "{:#?}", out.reports);
    }

    #[test]
    fn generator_law_small_run() {
        let cfg = ExperimentConfig::defaults(Experiment::GeneratorLaw, h75()).with_paths(1000);
        let out = run_generator_law(&cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Pass, "{:#?}", out.reports);
    }
}
