//! Closed-form constants and the singular quadratures behind the limit
//! theorems.

pub mod quad;
mod sigma;
mod variance;
mod winding;

use statrs::function::gamma::gamma;

use crate::error::{domain, Result};
use crate::fbm::Hurst;

pub use quad::QuadratureSpec;
pub use sigma::{
    beta_h, beta_with, rho_bracket, rho_bracket_asymptotic, rho_infinity, rho_integral,
    rho_integral_with, rho_integrand, rho_tail, sigma_squared, write_sigma_table, RhoInfinity,
    Scheme, SigmaSquared, CROSS_TOL, RHO_DELTA,
};
pub use variance::{variance_z_quadrature, VarianceZ, DEFAULT_QMC_NODES};
pub use winding::{winding_cf_exact, DEFAULT_CF_NODES};

/// `E|N|^p = 2^{p/2} Γ(p/2 + 1)` for a standard normal vector `N` in the
/// plane.
pub fn abs_normal_moment(p: f64) -> Result<f64> {
    if !(p > -2.0) {
        return domain(format!("E|N|^p diverges for p = {p} ≤ −2"));
    }
    Ok(2f64.powf(p / 2.0) * gamma(p / 2.0 + 1.0))
}

/// The clock constant `Γ(1 − 1/(2H)) / 2^{1/(2H)}`.
pub fn clock_constant(h: Hurst) -> f64 {
    let q = 1.0 / h.two_h();
    gamma(1.0 - q) / 2f64.powf(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::SeedSpec;

    #[test]
    fn second_moment_is_two() {
        assert!((abs_normal_moment(2.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((abs_normal_moment(0.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divergent_moment_rejected() {
        assert!(abs_normal_moment(-2.0).is_err());
        assert!(abs_normal_moment(-3.0).is_err());
    }

    #[test]
    fn clock_constant_identity() {
        for k in 1..50 {
            let h = Hurst::new(0.5 + k as f64 / 100.0).unwrap();
            let a = abs_normal_moment(-1.0 / h.value()).unwrap();
            assert!((a - clock_constant(h)).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn hand_values_at_three_quarters() {
        // 2^{−2/3}Γ(1/3) and 2^{2/3}Γ(5/3).
        let g13 = 2.678_938_534_707_747_6;
        let g53 = 0.902_745_292_950_933_6;
        let a = abs_normal_moment(-1.0 / 0.75).unwrap();
        let b = abs_normal_moment(1.0 / 0.75).unwrap();
        assert!((a - 2f64.powf(-2.0 / 3.0) * g13).abs() < 1e-12);
        assert!((b - 2f64.powf(2.0 / 3.0) * g53).abs() < 1e-12);
        assert!((a - 1.687626).abs() < 1e-6);
        assert!((b - 1.433019).abs() < 1e-6);
    }

    #[test]
    fn moments_match_monte_carlo() {
        let n = 1_000_000;
        let z = SeedSpec::new(99, 0).normals(2 * n);
        for p in [-1.0 / 0.75, 1.0 / 0.75] {
            let vals: Vec<f64> = z.chunks_exact(2).map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt().powf(p)).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let want = abs_normal_moment(p).unwrap();
            assert!((mean - want).abs() < 4.0 * se, "p={p}: {mean} vs {want} (se {se})");
        }
    }
}
