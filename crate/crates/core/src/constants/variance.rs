//! Second moment of the winding-like functional
//! `Z_t = ∫₁ᵗ (B² dB¹ − B¹ dB²)/s^{2H}` for a path started at 0.
//!
//! `E Z_t² = 2α_H ∬ (rs)^{−2H} R(s,r) |r−s|^{2H−2} dr ds
//!         − 2α_H² ∬ s^{−2H} a^{−2H} K(a; s) K(s; a) ds da`
//! over `[1, t]²`, with `K(x; u) = ∫₀ᵘ |θ − x|^{2H−2} dθ` in closed form.
//! The second term is what remains of the four-fold Malliavin-derivative
//! integral after the two inner variables are integrated out; the
//! derivative variables run over `[0, t]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quad::{adaptive, halton2, QuadratureSpec};
use crate::error::{domain, Result};
use crate::fbm::{Hurst, SeedSpec};

pub const DEFAULT_QMC_NODES: usize = 1_000_000;
/// Independent random shifts used for the QMC error bar.
const SHIFTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceZ {
    pub t: f64,
    pub h: f64,
    pub first: f64,
    pub second: f64,
    /// Standard error of `second` across randomly shifted QMC replicas.
    pub second_stderr: f64,
    pub total: f64,
}

fn kernel_k(x: f64, up: f64, e: f64) -> f64 {
    let d = up - x;
    (x.powf(e) + d.signum() * d.abs().powf(e)) / e
}

fn first_term(t: f64, h: Hurst) -> Result<f64> {
    let a = h.two_h();
    let e = a - 1.0;
    let spec = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_subdivisions: 4000,
    };
    // Symmetric in (r, s): twice the region r < s, with s − r = v^{1/(2H−1)}.
    let inner = |s: f64| -> Result<f64> {
        let top = (s - 1.0).powf(e);
        let est = adaptive(
            |v: f64| {
                let u = v.powf(1.0 / e);
                let r = s - u;
                let cov = 0.5 * (s.powf(a) + r.powf(a) - u.powf(a));
                (r * s).powf(-a) * cov / e
            },
            0.0,
            top,
            &spec,
        )?;
        Ok(est.value)
    };
    let mut failure = None;
    let outer = adaptive(
        |sigma: f64| {
            let s = sigma.exp();
            match inner(s) {
                Ok(v) => v * s,
                Err(err) => {
                    failure.get_or_insert(err);
                    0.0
                }
            }
        },
        0.0,
        t.ln(),
        &spec,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(2.0 * h.alpha() * 2.0 * outer.value)
}

fn second_term(t: f64, h: Hurst, nodes: usize) -> (f64, f64) {
    let a = h.two_h();
    let e = a - 1.0;
    let lt = t.ln();
    let g = |x: [f64; 2]| {
        let s = (x[0] * lt).exp();
        let q = (x[1] * lt).exp();
        lt * lt * (s * q).powf(1.0 - a) * kernel_k(q, s, e) * kernel_k(s, q, e)
    };
    let per = (nodes / SHIFTS).max(1);
    let mut rng = SeedSpec::new(0x5EED_2D, 0).rng();
    let replicas: Vec<f64> = (0..SHIFTS)
        .map(|_| {
            let shift = [rng.random::<f64>(), rng.random::<f64>()];
            (1..=per as u64)
                .map(|i| {
                    let p = halton2(i);
                    g([(p[0] + shift[0]).fract(), (p[1] + shift[1]).fract()])
                })
                .sum::<f64>()
                / per as f64
        })
        .collect();
    let mean = replicas.iter().sum::<f64>() / SHIFTS as f64;
    let var = replicas.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (SHIFTS - 1) as f64;
    let c = -2.0 * h.alpha() * h.alpha();
    (c * mean, c.abs() * (var / SHIFTS as f64).sqrt())
}

/// `E Z_t²` for `z0 = 0`, with the two-dimensional remainder term by
/// randomized quasi-Monte Carlo over `qmc_nodes` points.
pub fn variance_z_quadrature(t: f64, h: Hurst, qmc_nodes: usize) -> Result<VarianceZ> {
    h.require_transient()?;
    if !(t >= 1.0) || !t.is_finite() {
        return domain(format!("E Z_t² needs t ≥ 1, got {t}"));
    }
    if t == 1.0 {
        return Ok(VarianceZ {
            t,
            h: h.value(),
            first: 0.0,
            second: 0.0,
            second_stderr: 0.0,
            total: 0.0,
        });
    }
    let first = first_term(t, h)?;
    let (second, second_stderr) = second_term(t, h, qmc_nodes);
    Ok(VarianceZ {
        t,
        h: h.value(),
        first,
        second,
        second_stderr,
        total: first + second,
    })
}
