//! `E[(t^H N + z0)^n / |t^H N + z0|^n]` for a standard normal `N` in the
//! plane.
//!
//! When the start point sits many standard deviations from the origin the
//! integrand is smooth over the Gaussian bulk and a tensor Gauss–Hermite
//! rule converges quickly. Otherwise the unit-modulus factor is integrated
//! in polar coordinates about the origin: a periodic trapezoid rule in the
//! angle (spectrally accurate) and composite Gauss–Legendre in the radius.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quad::{gauss_hermite, gauss_legendre};
use crate::error::{domain, Error, Result};
use crate::fbm::Hurst;

pub const DEFAULT_CF_NODES: usize = 64;

/// Relative change between node doublings accepted as converged.
const CONVERGED: f64 = 1e-6;
/// Beyond this distance (in standard deviations) the Cartesian rule is used.
const CARTESIAN_BEYOND: f64 = 8.0;
const MAX_NODES: usize = 4096;

fn unit_pow(w: Complex64, n: i32) -> Complex64 {
    (w / w.norm()).powi(n)
}

fn cartesian(n: i32, s: f64, z0: Complex64, nodes: usize) -> Complex64 {
    let t = gauss_hermite(nodes);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, wx) in t.0.iter().zip(&t.1) {
        for (y, wy) in t.0.iter().zip(&t.1) {
            acc += wx * wy * unit_pow(z0 + s * Complex64::new(*x, *y), n);
        }
    }
    acc
}

/// `e^{-κ} I_n(κ) = (1/2π)∫ cos(nψ) e^{κ(cos ψ − 1)} dψ` by the periodic
/// trapezoid rule.
fn scaled_bessel(n: i32, kappa: f64) -> f64 {
    let m = 32 + 2 * n.unsigned_abs() as usize + (12.0 * kappa.sqrt()).ceil() as usize;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|j| {
            let psi = j as f64 * h;
            (n as f64 * psi).cos() * (kappa * (psi.cos() - 1.0)).exp()
        })
        .sum::<f64>()
        / m as f64
}

/// Radial integral `∫₀^∞ r e^{−(r−x)²/2} e^{−rx}I_n(rx) dr` on `panels`
/// Gauss–Legendre panels of 16 nodes.
fn polar(n: i32, x: f64, panels: usize) -> f64 {
    let top = x + 12.0;
    let t = gauss_legendre(16);
    let width = top / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 * width, (p + 1) as f64 * width);
        let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
        for (u, w) in t.0.iter().zip(&t.1) {
            let r = c + hw * u;
            acc += w * hw * r * (-(r - x) * (r - x) / 2.0).exp() * scaled_bessel(n, r * x);
        }
    }
    acc
}

/// `E[(w/|w|)^n]` with `w = t^H N + z0`, refined by node doubling until the
/// relative change drops below `1e-6`.
pub fn winding_cf_exact(n_mode: i32, t: f64, h: Hurst, z0: Complex64, nodes: usize) -> Result<Complex64> {
    if z0 == Complex64::new(0.0, 0.0) {
        return domain("winding characteristic function needs z0 ≠ 0");
    }
    if !(t >= 0.0) || nodes == 0 {
        return domain(format!("need t ≥ 0 and nodes ≥ 1 (t = {t}, nodes = {nodes})"));
    }
    if n_mode == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let s = t.powf(h.value());
    if s == 0.0 {
        return Ok(unit_pow(z0, n_mode));
    }
    let x = z0.norm() / s;
    let phase = unit_pow(z0, n_mode);
    let eval = |m: usize| -> Complex64 {
        if x > CARTESIAN_BEYOND {
            cartesian(n_mode, s, z0, m)
        } else {
            phase * polar(n_mode, x, m.div_ceil(16).max(1))
        }
    };
    let mut m = nodes;
    let mut prev = eval(m);
    while m < MAX_NODES {
        m *= 2;
        let next = eval(m);
        let change = (next - prev).norm();
        if change <= CONVERGED * next.norm() + 1e-14 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Precision(format!(
        "winding characteristic function did not settle by {MAX_NODES} nodes (n = {n_mode}, t = {t})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    /// `e^{inφ0} Γ(n/2+1)/Γ(n+1) (x²/2)^{n/2} ₁F₁(n/2; n+1; −x²/2)`,
    /// with Kummer's transformation for a positive series.
    fn closed_form(n: i32, x: f64, phase: Complex64) -> Complex64 {
        let nf = n as f64;
        let z = x * x / 2.0;
        let (a, b) = (nf / 2.0 + 1.0, nf + 1.0);
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 0..10_000 {
            let k = k as f64;
            term *= (a + k) / (b + k) * z / (k + 1.0);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        let f = (-z).exp() * sum;
        phase * gamma(nf / 2.0 + 1.0) / gamma(nf + 1.0) * z.powf(nf / 2.0) * f
    }

    fn h75() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    #[test]
    fn mode_zero_is_one() {
        assert_eq!(winding_cf_exact(0, 3.0, h75(), Complex64::new(1.0, 0.0), 32).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn tiny_time_returns_phase() {
        let z0 = Complex64::new(0.3, -0.4);
        for n in [1, 2, 5] {
            let v = winding_cf_exact(n, 1e-8, h75(), z0, 32).unwrap();
            assert!((v - (z0 / z0.norm()).powi(n)).norm() < 1e-6);
        }
    }

    #[test]
    fn far_start_point() {
        let z0 = Complex64::new(600.0, 800.0);
        let v = winding_cf_exact(1, 1.0, h75(), z0, 32).unwrap();
        assert!((v - z0 / z0.norm()).norm() < 1e-3);
    }

    #[test]
    fn matches_closed_form() {
        let z0 = Complex64::new(0.6, 0.8);
        for n in [1, 2, 3, -1] {
            for t in [0.01f64, 0.5, 1.0, 10.0, 1e4] {
                let x = z0.norm() / t.powf(0.75);
                let phase = (z0 / z0.norm()).powi(n);
                let want = closed_form(n.abs(), x, phase);
                let got = winding_cf_exact(n, t, h75(), z0, 64).unwrap();
                assert!((got - want).norm() < 1e-7 * want.norm().max(1e-3), "n={n} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn modulus_bounded_by_one() {
        for t in [0.001, 0.1, 1.0, 100.0] {
            for n in 1..6 {
                let v = winding_cf_exact(n, t, h75(), Complex64::new(-1.0, 2.0), 32).unwrap();
                assert!(v.norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_start_rejected() {
        assert!(winding_cf_exact(1, 1.0, h75(), Complex64::new(0.0, 0.0), 32).is_err());
    }
}
