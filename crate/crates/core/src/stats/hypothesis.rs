//! Goodness-of-fit tests used by the verdicts.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const KS_MIN_SAMPLES: usize = 50;
pub const AD_MIN_SAMPLES: usize = 100;

fn need(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::InsufficientData(format!("{what} needs n ≥ {min}, have {n}")));
    }
    Ok(())
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFinite("NaN sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Kolmogorov survival function `P(K > λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for statistic `d` at effective size `ne`, with Stephens'
/// small-sample adjustment of the argument.
fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// One-sample `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// Two-sided one-sample Kolmogorov–Smirnov p-value.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    need(samples.len(), KS_MIN_SAMPLES, "KS test")?;
    let d = ks_statistic(samples, cdf)?;
    Ok(ks_p(d, samples.len() as f64))
}

/// Two-sample Kolmogorov–Smirnov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    need(a.len().min(b.len()), KS_MIN_SAMPLES, "two-sample KS test")?;
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(ks_p(d, na * nb / (na + nb)))
}

/// Asymptotic Anderson–Darling distribution function.
fn ad_inf(z: f64) -> f64 {
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp()).exp()
    }
}

/// Finite-`n` correction to [`ad_inf`].
fn ad_errfix(n: f64, x: f64) -> f64 {
    if x > 0.8 {
        return (-130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x) / n;
    }
    let c = 0.01265 + 0.1757 / n;
    if x < c {
        let t = x / c;
        let t = t.sqrt() * (1.0 - t) * (49.0 * t - 102.0);
        return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n;
    }
    let x = (x - c) / (0.8 - c);
    let x = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * x) * x) * x) * x) * x;
    x * (0.04213 + 0.01365 / n) / n
}

/// `P(A² ≤ z)` for a fully specified null at sample size `n`.
pub fn anderson_darling_cdf(n: usize, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let x = ad_inf(z);
    // The correction polynomial does not vanish at x = 1 and would put a
    // floor of order 1e-3/n under tiny p-values.
    if x > 0.999 {
        return x.min(1.0);
    }
    (x + ad_errfix(n as f64, x)).clamp(0.0, 1.0)
}

pub fn anderson_darling_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len();
    let tiny = f64::MIN_POSITIVE;
    let s: f64 = (0..n)
        .map(|i| {
            let lo = cdf(v[i]).max(tiny);
            let hi = (1.0 - cdf(v[n - 1 - i])).max(tiny);
            (2 * i + 1) as f64 * (lo.ln() + hi.ln())
        })
        .sum();
    Ok(-(n as f64) - s / n as f64)
}

/// Anderson–Darling p-value against N(0, 1). Samples must already be
/// standardized by externally known parameters.
pub fn normality_test(samples: &[f64]) -> Result<f64> {
    need(samples.len(), AD_MIN_SAMPLES, "Anderson–Darling test")?;
    let normal = Normal::standard();
    let a2 = anderson_darling_statistic(samples, |x| normal.cdf(x))?;
    Ok(1.0 - anderson_darling_cdf(samples.len(), a2))
}

/// Rayleigh test p-value for `n` angles with resultant length `r`.
fn rayleigh_p(n: f64, r: f64) -> f64 {
    let v = (1.0 + 4.0 * n + 4.0 * (n * n - r * r)).sqrt() - (1.0 + 2.0 * n);
    v.exp().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularTest {
    pub rayleigh_p: f64,
    pub ks_p: f64,
    /// Bonferroni-adjusted minimum of the two.
    pub p_value: f64,
}

/// Uniformity of angles on the circle: Rayleigh and KS on the reduced angle,
/// combined with a Bonferroni factor of 2.
pub fn circular_uniformity_detail(angles: &[f64]) -> Result<CircularTest> {
    need(angles.len(), KS_MIN_SAMPLES, "circular uniformity test")?;
    let n = angles.len() as f64;
    let (c, s) = angles.iter().fold((0.0, 0.0), |(c, s), a| (c + a.cos(), s + a.sin()));
    let rp = rayleigh_p(n, c.hypot(s));
    let unit: Vec<f64> = angles.iter().map(|a| a.rem_euclid(2.0 * PI) / (2.0 * PI)).collect();
    let kp = ks_test(&unit, |u| u.clamp(0.0, 1.0))?;
    Ok(CircularTest {
        rayleigh_p: rp,
        ks_p: kp,
        p_value: (2.0 * rp.min(kp)).min(1.0),
    })
}

pub fn circular_uniformity(angles: &[f64]) -> Result<f64> {
    Ok(circular_uniformity_detail(angles)?.p_value)
}
