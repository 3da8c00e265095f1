//! The kernel `β`, the integral `ρ` and the limit variance `σ²(H)`.
//!
//! Two independent schemes are kept side by side:
//!
//! * `Adaptive`: globally adaptive Gauss–Kronrod after endpoint
//!   substitutions, with `ρ(∞)` truncated at `δ = 1e-8` plus an analytic
//!   tail.
//! * `Panels`: fixed 20-point Gauss–Legendre on geometrically graded panels,
//!   integrating down to the singular endpoints, with `β` taken in its
//!   incomplete-beta form `∫₀^{1/(1+y)} v^{2H−1}(1−v)^{−2H} dv`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::quad::{adaptive, adaptive_breaks, gl_composite, graded_toward_start, QuadratureSpec};
use crate::error::{domain, Error, Result};
use crate::fbm::Hurst;

/// Lower truncation point of the adaptive `ρ(∞)` integral.
pub const RHO_DELTA: f64 = 1e-8;
/// Agreement demanded between the two schemes.
pub const CROSS_TOL: f64 = 1e-6;

const PANEL_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Adaptive,
    Panels,
}

fn inner_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_subdivisions: 4000,
    }
}

fn outer_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-11,
        max_subdivisions: 4000,
    }
}

/// `β(y) = ∫₀¹ (1−x)^{2H−1}(x+y)^{−2H} dx` by adaptive quadrature.
pub fn beta_h(y: f64, h: Hurst) -> Result<f64> {
    beta_with(y, h, Scheme::Adaptive)
}

pub fn beta_with(y: f64, h: Hurst, scheme: Scheme) -> Result<f64> {
    if !(y > 0.0) {
        return domain(format!("β(y) needs y > 0, got {y}"));
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    match scheme {
        Scheme::Adaptive => beta_adaptive(y, h),
        Scheme::Panels => Ok(beta_panels(1.0 / (1.0 + y), y / (1.0 + y), h)),
    }
}

fn beta_adaptive(y: f64, h: Hurst) -> Result<f64> {
    let a = h.two_h();
    let spec = inner_spec();
    // [0, 1/2] with x + y = e^s.
    let near = adaptive(
        |s: f64| {
            let e = s.exp();
            let x = (e - y).max(0.0);
            (1.0 - x).powf(a - 1.0) * e.powf(1.0 - a)
        },
        y.ln(),
        (0.5 + y).ln(),
        &spec,
    )?;
    // [1/2, 1] with 1 − x = v^{1/(2H)}.
    let far = adaptive(
        |v: f64| (1.0 + y - v.powf(1.0 / a)).powf(-a) / a,
        0.0,
        0.5f64.powf(a),
        &spec,
    )?;
    Ok(near.value + far.value)
}

/// `∫₀^z v^{2H−1}(1−v)^{−2H} dv` with `z + d = 1`, both passed to avoid
/// cancellation.
fn beta_panels(z: f64, d: f64, h: Hurst) -> f64 {
    let a = h.two_h();
    let mut f0 = |v: f64| v.powf(a - 1.0) * (1.0 - v).powf(-a);
    if z <= 0.5 {
        return gl_composite(&mut f0, &graded_toward_start(0.0, z, 0.2, 1e-30), PANEL_NODES);
    }
    let low = gl_composite(&mut f0, &graded_toward_start(0.0, 0.5, 0.2, 1e-30), PANEL_NODES);
    // s = 1 − v = e^τ over [d, 1/2], unit panels in τ; this keeps s^{−2H}
    // from overflowing when d is tiny.
    let mut f1 = |tau: f64| {
        let s = tau.exp();
        (1.0 - s).powf(a - 1.0) * (tau * (1.0 - a)).exp()
    };
    let top = 0.5f64.ln();
    let mut tau = d.max(f64::MIN_POSITIVE).ln();
    let mut breaks = vec![tau];
    while tau + 1.0 < top {
        tau += 1.0;
        breaks.push(tau);
    }
    breaks.push(top);
    low + gl_composite(&mut f1, &breaks, PANEL_NODES)
}

/// `β(y/(1−y))` for `y ∈ (0, 1]` given both `y` and `u = 1 − y`.
fn beta_ratio(y: f64, u: f64, h: Hurst, scheme: Scheme) -> Result<f64> {
    if u == 0.0 {
        return Ok(0.0);
    }
    match scheme {
        Scheme::Adaptive => beta_adaptive(y / u, h),
        Scheme::Panels => Ok(beta_panels(u, y, h)),
    }
}

/// The bracket `y^{−2H}R(y,1) − H log(1/y) − Hβ(y/(1−y))`, with `u = 1 − y`.
fn bracket(y: f64, u: f64, h: Hurst, scheme: Scheme) -> Result<f64> {
    let a = h.two_h();
    let hv = h.value();
    let (ln_y, ln_u) = if y < 0.5 { (y.ln(), (-y).ln_1p()) } else { ((-u).ln_1p(), u.ln()) };
    // 1 − u^{2H} without cancellation.
    let one_minus = if u == 0.0 { 1.0 } else { -(a * ln_u).exp_m1() };
    let r_term = 0.5 * (1.0 + (one_minus.ln() - a * ln_y).exp());
    let value = r_term + hv * ln_y - hv * beta_ratio(y, u, h, scheme)?;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("ρ bracket is not finite at y = {y}")));
    }
    Ok(value)
}

/// The bracket of the `ρ` integrand at `y ∈ (0, 1)`.
pub fn rho_bracket(y: f64, h: Hurst) -> Result<f64> {
    h.require_transient()?;
    if !(y > 0.0 && y < 1.0) {
        return domain(format!("ρ bracket needs y in (0, 1), got {y}"));
    }
    bracket(y, 1.0 - y, h, Scheme::Adaptive)
}

/// Full `ρ` integrand: bracket times `(1−y)^{2H−2}`.
pub fn rho_integrand(y: f64, h: Hurst) -> Result<f64> {
    let v = rho_bracket(y, h)? * (1.0 - y).powf(h.two_h() - 2.0);
    if !v.is_finite() {
        return Err(Error::Numerical(format!("ρ integrand is not finite at y = {y}")));
    }
    Ok(v)
}

/// Leading behaviour of the bracket as `y → 0`:
/// `(H − H/(2H−1))·y^{1−2H} + ½ − HΓ(1−2H)Γ(2H) + H log y`.
pub fn rho_bracket_asymptotic(y: f64, h: Hurst) -> f64 {
    let (hv, a) = (h.value(), h.two_h());
    let c1 = hv - hv / (a - 1.0);
    let c0 = 0.5 - hv * gamma(1.0 - a) * gamma(a);
    c1 * y.powf(1.0 - a) + c0 + hv * y.ln()
}

/// Integral of [`rho_bracket_asymptotic`] over `(0, δ)`.
pub fn rho_tail(delta: f64, h: Hurst) -> f64 {
    let (hv, a) = (h.value(), h.two_h());
    let c1 = hv - hv / (a - 1.0);
    let c0 = 0.5 - hv * gamma(1.0 - a) * gamma(a);
    c1 * delta.powf(2.0 - a) / (2.0 - a) + c0 * delta + hv * (delta * delta.ln() - delta)
}

/// `∫_lower^1 bracket(y)(1−y)^{2H−2} dy`.
fn rho_segment(lower: f64, h: Hurst, scheme: Scheme) -> Result<f64> {
    let a = h.two_h();
    let e_up = a - 1.0;
    let e_low = 2.0 - a;
    let split = lower.max(0.5);

    // Near y = 1: 1 − y = v^{1/(2H−1)} removes the (1−y)^{2H−2} factor.
    let v_max = (1.0 - split).powf(e_up);
    let upper = |v: f64| -> Result<f64> {
        let u = v.powf(1.0 / e_up);
        Ok(bracket(1.0 - u, u, h, scheme)? / e_up)
    };
    // Near y = 0: y = w^{1/(2−2H)} removes the y^{1−2H} growth.
    let lower_fn = |w: f64| -> Result<f64> {
        if w == 0.0 {
            return Ok(0.0);
        }
        let y = w.powf(1.0 / e_low);
        Ok(bracket(y, 1.0 - y, h, scheme)? * (1.0 - y).powf(a - 2.0) * y.powf(a - 1.0) / e_low)
    };

    let mut failure = None;
    let mut catch = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };

    let total = match scheme {
        Scheme::Adaptive => {
            let spec = outer_spec();
            let up = adaptive(|v| catch(upper(v)), 0.0, v_max, &spec);
            let up = up?.value;
            let low = if lower < 0.5 {
                let w0 = lower.powf(e_low);
                let w1 = 0.5f64.powf(e_low);
                let mut g = |w| catch(lower_fn(w));
                // Log-spaced starting breakpoints help the bracket's log term.
                let mut breaks = vec![w0];
                let mut w = w0.max(1e-12 * w1);
                while w * 8.0 < w1 {
                    w *= 8.0;
                    breaks.push(w);
                }
                breaks.push(w1);
                adaptive_breaks(&mut g, &breaks, &spec)?.value
            } else {
                0.0
            };
            up + low
        }
        Scheme::Panels => {
            let mut gu = |v| catch(upper(v));
            let up = gl_composite(&mut gu, &graded_toward_start(0.0, v_max, 0.25, 1e-30), PANEL_NODES);
            let low = if lower < 0.5 {
                let w0 = lower.powf(e_low);
                let w1 = 0.5f64.powf(e_low);
                let mut gl = |w| catch(lower_fn(w));
                // Keep y = w^{1/(2−2H)} clear of underflow; the dropped piece
                // is of order w_min.
                let w_min = 1e-200f64.powf(e_low).max(1e-30 * w1);
                gl_composite(&mut gl, &graded_toward_start(w0, w1, 0.25, w_min), PANEL_NODES)
            } else {
                0.0
            };
            up + low
        }
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoInfinity {
    pub value: f64,
    /// Adaptive integral over `(δ, 1)`.
    pub truncated: f64,
    /// Analytic estimate of the integral over `(0, δ)`.
    pub tail: f64,
    pub delta: f64,
}

/// `ρ(∞)` by the adaptive scheme: `(δ, 1)` plus the analytic tail.
pub fn rho_infinity(h: Hurst) -> Result<RhoInfinity> {
    h.require_transient()?;
    let truncated = rho_segment(RHO_DELTA, h, Scheme::Adaptive)?;
    let tail = rho_tail(RHO_DELTA, h);
    Ok(RhoInfinity {
        value: truncated + tail,
        truncated,
        tail,
        delta: RHO_DELTA,
    })
}

/// `ρ(z) = ∫_{1/z}^1 [...] (1−y)^{2H−2} dy`; `z = ∞` is allowed.
pub fn rho_integral(z: f64, h: Hurst) -> Result<f64> {
    rho_integral_with(z, h, Scheme::Adaptive)
}

pub fn rho_integral_with(z: f64, h: Hurst, scheme: Scheme) -> Result<f64> {
    h.require_transient()?;
    if !(z >= 1.0) {
        return domain(format!("ρ(z) needs z ≥ 1, got {z}"));
    }
    if z == 1.0 {
        return Ok(0.0);
    }
    match (z.is_infinite(), scheme) {
        (true, Scheme::Adaptive) => Ok(rho_infinity(h)?.value),
        (true, Scheme::Panels) => rho_segment(0.0, h, Scheme::Panels),
        (false, s) => rho_segment(1.0 / z, h, s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSquared {
    pub h: f64,
    pub value: f64,
    pub adaptive: f64,
    pub panels: f64,
    pub relative_gap: f64,
    /// Tail of the adaptive `ρ(∞)` below `δ`, already included.
    pub tail: f64,
}

/// `σ²(H) = 4H(2H−1)ρ(∞)`, cross-validated between the two schemes.
pub fn sigma_squared(h: Hurst) -> Result<SigmaSquared> {
    h.require_transient()?;
    let rho = rho_infinity(h)?;
    let rho_b = rho_segment(0.0, h, Scheme::Panels)?;
    let c = 4.0 * h.alpha();
    let (first, second) = (c * rho.value, c * rho_b);
    let relative = (first - second).abs() / first.abs().max(second.abs());
    if !(relative <= CROSS_TOL) {
        return Err(Error::CrossValidation {
            first,
            second,
            relative,
        });
    }
    Ok(SigmaSquared {
        h: h.value(),
        value: first,
        adaptive: first,
        panels: second,
        relative_gap: relative,
        tail: c * rho.tail,
    })
}

/// Writes `h,sigma2,adaptive,panels,relative_gap` rows.
pub fn write_sigma_table<W: std::io::Write>(hs: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for &hv in hs {
        w.serialize(sigma_squared(Hurst::new(hv)?)?)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hh(v: f64) -> Hurst {
        Hurst::new(v).unwrap()
    }

    /// `β(y) = z^{2H}/(2H) · ₂F₁(2H, 2H; 2H+1; z)`, `z = 1/(1+y)`.
    fn beta_series(y: f64, h: f64) -> f64 {
        let a = 2.0 * h;
        let z = 1.0 / (1.0 + y);
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 0..5000 {
            let k = k as f64;
            term *= (a + k) * (a + k) / ((a + 1.0 + k) * (k + 1.0)) * z;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        z.powf(a) / a * sum
    }

    #[test]
    fn beta_brownian_endpoint() {
        for s in [Scheme::Adaptive, Scheme::Panels] {
            let b = beta_with(1.0, hh(0.5), s).unwrap();
            assert!((b - 2f64.ln()).abs() < 1e-12, "{s:?}: {b}");
        }
    }

    #[test]
    fn beta_matches_series() {
        for h in [0.55, 0.75, 0.9] {
            for y in [0.3, 1.0, 4.0, 50.0] {
                let want = beta_series(y, h);
                for s in [Scheme::Adaptive, Scheme::Panels] {
                    let got = beta_with(y, hh(h), s).unwrap();
                    assert!((got - want).abs() < 1e-11 * want, "{s:?} h={h} y={y}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn beta_schemes_agree_for_small_y() {
        for h in [0.51, 0.75, 0.9] {
            for y in [1e-10, 1e-6, 1e-3] {
                let a = beta_with(y, hh(h), Scheme::Adaptive).unwrap();
                let b = beta_with(y, hh(h), Scheme::Panels).unwrap();
                assert!((a - b).abs() < 1e-10 * a, "h={h} y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn beta_large_y_limit() {
        let h = hh(0.75);
        let y = 1e4;
        let v = beta_h(y, h).unwrap() * y.powf(1.5) * 1.5;
        assert!((v - 1.0).abs() < 1e-3);
    }

    #[test]
    fn beta_decreasing() {
        let h = hh(0.7);
        let vals: Vec<f64> = (-8..=8).map(|k| beta_h(10f64.powf(k as f64 / 2.0), h).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn beta_rejects_nonpositive() {
        assert!(beta_h(0.0, hh(0.7)).is_err());
        assert!(beta_h(-1.0, hh(0.7)).is_err());
    }

    #[test]
    fn bracket_limits() {
        let h = hh(0.75);
        assert!((bracket(1.0, 0.0, h, Scheme::Adaptive).unwrap() - 1.0).abs() < 1e-15);
        for y in [1e-8, 1e-6] {
            let exact = rho_bracket(y, h).unwrap();
            let approx = rho_bracket_asymptotic(y, h);
            // Next order is O(y^{2−2H}).
            assert!((exact - approx).abs() < 10.0 * y.powf(0.5), "y={y}: {exact} vs {approx}");
        }
    }

    #[test]
    fn integrand_is_finite_on_scan() {
        for h in [0.51, 0.75, 0.95] {
            for k in 0..=60 {
                let t = k as f64 / 60.0;
                // Log-spaced toward both ends.
                let y = if t < 0.5 { 10f64.powf(-6.0 + 10.0 * t) } else { 1.0 - 10f64.powf(-6.0 + 10.0 * (1.0 - t)) };
                let y = y.clamp(1e-6, 1.0 - 1e-6);
                assert!(rho_integrand(y, hh(h)).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn rho_at_one_is_zero() {
        assert_eq!(rho_integral(1.0, hh(0.75)).unwrap(), 0.0);
        assert!(rho_integral(0.5, hh(0.75)).is_err());
    }

    #[test]
    fn rho_needs_transient_regime() {
        assert!(rho_integral(2.0, hh(0.4)).is_err());
        assert!(sigma_squared(hh(0.5)).is_err());
    }

    #[test]
    fn rho_finite_z_schemes_agree() {
        let h = hh(0.75);
        for z in [1.5, 10.0, 1e3, 1e9] {
            let a = rho_integral_with(z, h, Scheme::Adaptive).unwrap();
            let b = rho_integral_with(z, h, Scheme::Panels).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1e-3), "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn tail_matches_numerical_tail() {
        for h in [0.6, 0.75, 0.9] {
            let h = hh(h);
            let full = rho_integral_with(f64::INFINITY, h, Scheme::Panels).unwrap();
            let truncated = rho_segment(RHO_DELTA, h, Scheme::Panels).unwrap();
            let tail = rho_tail(RHO_DELTA, h);
            assert!((full - truncated - tail).abs() < 1e-9, "{} vs {}", full - truncated, tail);
        }
    }

    #[test]
    fn sigma_squared_brownian_limit_and_order() {
        let s51 = sigma_squared(hh(0.51)).unwrap().value;
        let s55 = sigma_squared(hh(0.55)).unwrap().value;
        let s60 = sigma_squared(hh(0.6)).unwrap().value;
        assert!((s51 - 2.0).abs() / 2.0 < 0.1);
        assert!(s51 > s55 && s55 > s60);
    }

    #[test]
    fn sigma_squared_positive_and_cross_validated() {
        for h in [0.52, 0.6, 0.7, 0.75, 0.8, 0.9, 0.95] {
            let s = sigma_squared(hh(h)).unwrap();
            assert!(s.value > 0.0);
            assert!(s.relative_gap <= CROSS_TOL);
        }
    }

    #[test]
    fn sigma_squared_reference_values() {
        // 30-digit quadrature with β written as x^{−2H} ₂F₁(2H, 1; 2H+1; −1/x)/(2H).
        let refs = [
            (0.6, 1.731_278_804_662_501_3),
            (0.75, 1.187_745_783_096_788_7),
            (0.9, 0.468_513_013_741_718_3),
            (0.95, 0.221_843_948_016_460_87),
        ];
        for (h, want) in refs {
            let got = sigma_squared(hh(h)).unwrap().value;
            assert!((got - want).abs() <= CROSS_TOL * want, "H={h}: {got} vs {want}");
        }
    }

    #[test]
    fn rho_rises_then_falls() {
        // The bracket is negative for small y, so ρ(z) peaks at finite z and
        // decreases toward ρ(∞).
        let h = hh(0.75);
        let zs = [1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0, 1e4];
        let r: Vec<f64> = zs.iter().map(|&z| rho_integral(z, h).unwrap()).collect();
        let peak = r.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(peak > 0 && peak < r.len() - 1);
        assert!(r[..=peak].windows(2).all(|w| w[1] > w[0]));
        assert!(r[peak..].windows(2).all(|w| w[1] < w[0]));
        let inf = rho_infinity(h).unwrap().value;
        assert!(inf < *r.last().unwrap() && inf > 0.0);
        assert!(rho_bracket(0.1, h).unwrap() < 0.0 && rho_bracket(0.5, h).unwrap() > 0.0);
    }

    #[test]
    fn sigma_table_csv() {
        let mut buf = Vec::new();
        write_sigma_table(&[0.6, 0.75], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,value,adaptive,panels,relative_gap,tail\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
