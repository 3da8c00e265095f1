use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fbm::{ComplexPath, Hurst};

/// Divergence integral of a gradient integrand together with its trace
/// correction; `pathwise = divergence + correction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceIntegral {
    pub divergence: f64,
    pub correction: f64,
}

impl DivergenceIntegral {
    pub fn pathwise(&self) -> f64 {
        self.divergence + self.correction
    }
}

/// `δ(∇f(B)) = ∫ ∇f(B)·dB − H ∫₀ᵀ Δf(B_s) s^{2H−1} ds`.
///
/// The pathwise part uses the trapezoid rule and the time integral the
/// trapezoid rule on the same grid, which must start at 0.
pub fn divergence_integral_gradient(
    laplacian: impl Fn(Complex64) -> f64,
    grad: impl Fn(Complex64) -> [f64; 2],
    path: &ComplexPath,
    h: Hurst,
) -> Result<DivergenceIntegral> {
    if !path.grid().starts_at_zero() {
        return domain("divergence integral needs a grid starting at 0");
    }
    let b = path.values();
    let t = path.times();
    let e = h.two_h() - 1.0;
    let mut pathwise = 0.0;
    let mut trace = 0.0;
    let mut ga = grad(b[0]);
    let mut la = laplacian(b[0]) * t[0].powf(e);
    for i in 0..b.len() - 1 {
        let gb = grad(b[i + 1]);
        let lb = laplacian(b[i + 1]) * t[i + 1].powf(e);
        let d = b[i + 1] - b[i];
        pathwise += 0.5 * ((ga[0] + gb[0]) * d.re + (ga[1] + gb[1]) * d.im);
        trace += 0.5 * (la + lb) * (t[i + 1] - t[i]);
        ga = gb;
        la = lb;
    }
    let correction = h.value() * trace;
    Ok(DivergenceIntegral {
        divergence: pathwise - correction,
        correction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{complex_fbm, SeedSpec, TimeGrid};
    use crate::integral::{pathwise_integral_fn, Rule};

    fn path(z0: Complex64) -> ComplexPath {
        let grid = TimeGrid::uniform(1024, 1.0 / 1024.0).unwrap();
        complex_fbm(&grid, Hurst::new(0.75).unwrap(), z0, SeedSpec::new(4, 0)).unwrap()
    }

    #[test]
    fn harmonic_has_no_correction() {
        // f = Re z², ∇f = (2x, −2y).
        let p = path(Complex64::new(1.0, 1.0));
        let d = divergence_integral_gradient(|_| 0.0, |z| [2.0 * z.re, -2.0 * z.im], &p, p.hurst()).unwrap();
        assert_eq!(d.correction, 0.0);
        let holo = pathwise_integral_fn(|z| 2.0 * z, &p, Rule::Trapezoid).unwrap().value;
        assert!((d.divergence - holo.re).abs() < 1e-12);
    }

    #[test]
    fn squared_real_part_correction_is_deterministic() {
        // f = x², Δf = 2, correction = 2H ∫ s^{2H−1} ds = t^{2H}.
        let p = path(Complex64::new(0.0, 0.0));
        let d = divergence_integral_gradient(|_| 2.0, |z| [2.0 * z.re, 0.0], &p, p.hurst()).unwrap();
        assert!((d.correction - 1.0).abs() < 1e-3);
    }

    #[test]
    fn squared_modulus_reconstructs_endpoint() {
        let z0 = Complex64::new(1.0, -0.5);
        let p = path(z0);
        let d = divergence_integral_gradient(|_| 4.0, |z| [2.0 * z.re, 2.0 * z.im], &p, p.hurst()).unwrap();
        let end = p.values().last().unwrap().norm_sqr();
        assert!((z0.norm_sqr() + d.pathwise() - end).abs() < 1e-12);
    }

    #[test]
    fn grid_must_start_at_zero() {
        let grid = TimeGrid::geometric(1.0, 1.1, 10, false).unwrap();
        let p = complex_fbm(&grid, Hurst::new(0.75).unwrap(), Complex64::new(0.0, 0.0), SeedSpec::new(1, 0)).unwrap();
        assert!(divergence_integral_gradient(|_| 4.0, |z| [z.re, z.im], &p, p.hurst()).is_err());
    }
}
