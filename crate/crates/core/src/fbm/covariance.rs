use super::Hurst;
use crate::error::{domain, Result};

/// `R(t, s) = ½(s^{2H} + t^{2H} − |t − s|^{2H})`.
pub fn fbm_covariance(t: f64, s: f64, h: Hurst) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) {
        return domain(format!("covariance needs nonnegative times, got ({t}, {s})"));
    }
    Ok(cov_unchecked(t, s, h.two_h()))
}

/// `a^{2H} − |a − b|^{2H}` without cancellation for `b ≪ a`.
fn power_gap(a: f64, b: f64, two_h: f64) -> f64 {
    if a <= 0.0 {
        return -b.powf(two_h);
    }
    let r = b / a;
    if r < 1.0 {
        -a.powf(two_h) * (two_h * (-r).ln_1p()).exp_m1()
    } else {
        a.powf(two_h) - (b - a).powf(two_h)
    }
}

#[inline]
pub(crate) fn cov_unchecked(t: f64, s: f64, two_h: f64) -> f64 {
    let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
    0.5 * (lo.powf(two_h) + power_gap(hi, lo, two_h))
}

/// Row-major covariance matrix of fBm at the given times.
pub fn covariance_matrix(times: &[f64], h: Hurst) -> Vec<f64> {
    let n = times.len();
    let two_h = h.two_h();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = cov_unchecked(times[i], times[j], two_h);
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    c
}

/// `E(β_s β_{kⁿt} / k^{nH})` for a standard one-dimensional fBm β.
pub fn mixing_covariance(s: f64, t: f64, k: f64, n: u32, h: Hurst) -> Result<f64> {
    if !(s > 0.0 && t > 0.0) {
        return domain(format!("mixing covariance needs s, t > 0, got ({s}, {t})"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return domain(format!("scaling factor must be positive, got {k}"));
    }
    let two_h = h.two_h();
    let log_kn = n as f64 * k.ln();
    let a = log_kn.exp() * t;
    let num = s.powf(two_h) + power_gap(a, s, two_h);
    Ok(num / (2.0 * (h.value() * log_kn).exp()))
}

/// Leading large-`n` behaviour `H·s·t^{2H−1}·k^{n(H−1)}` of [`mixing_covariance`].
pub fn mixing_leading_term(s: f64, t: f64, k: f64, n: u32, h: Hurst) -> f64 {
    let hv = h.value();
    hv * s * t.powf(2.0 * hv - 1.0) * (n as f64 * (hv - 1.0) * k.ln()).exp()
}
