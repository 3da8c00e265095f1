//! Quadrature building blocks: adaptive Gauss–Kronrod, Gauss–Legendre and
//! Gauss–Hermite node tables, graded panels and a Halton sequence.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions == 0 {
            return domain("quadrature tolerances and subdivision budget must be positive");
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208512059465,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// 21-point Kronrod estimate and its difference from the embedded
/// 10-point Gauss rule.
fn gk21(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for j in 0..10 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (21 points) over `[a, b]`, bisecting the
/// interval with the largest error estimate.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    adaptive_breaks(&mut f, &[a, b], spec)
}

/// As [`adaptive`], starting from the given breakpoints.
pub fn adaptive_breaks(f: &mut impl FnMut(f64) -> f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    if breaks.len() < 2 {
        return domain("need at least two breakpoints");
    }
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk21(f, w[0], w[1]);
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonFinite("quadrature sum".into()));
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(Estimate {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= spec.max_subdivisions {
            return Err(Error::Precision(format!(
                "adaptive quadrature stalled at error {error:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Precision(format!(
                "interval [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk21(f, a, b);
            heap.push(Piece { a, b, value, error });
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static TABLE: OnceLock<RwLock<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let table = TABLE.get_or_init(Default::default);
    if let Some(t) = table.read().unwrap().get(&n) {
        return t.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    let t = Arc::new((x, w));
    table.write().unwrap().entry(n).or_insert(t).clone()
}

/// Fixed `n`-point Gauss–Legendre rule on `[a, b]`.
pub fn gl_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let t = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    t.0.iter().zip(&t.1).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Panel boundaries on `[a, b]` that shrink geometrically by `ratio`
/// toward `a`, down to width `min_width`.
pub fn graded_toward_start(a: f64, b: f64, ratio: f64, min_width: f64) -> Vec<f64> {
    let mut pts = vec![b];
    let mut d = b - a;
    while d > min_width {
        d *= ratio;
        pts.push(a + d);
    }
    pts.push(a);
    pts.reverse();
    pts
}

/// Composite Gauss–Legendre over consecutive breakpoints.
pub fn gl_composite(f: &mut impl FnMut(f64) -> f64, breaks: &[f64], n: usize) -> f64 {
    breaks.windows(2).map(|w| gl_panel(f, w[0], w[1], n)).sum()
}

/// Probabilists' Gauss–Hermite rule: `Σ w_i g(x_i) ≈ E g(N)` for a standard
/// normal `N`.
pub fn gauss_hermite(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static TABLE: OnceLock<RwLock<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let table = TABLE.get_or_init(Default::default);
    if let Some(t) = table.read().unwrap().get(&n) {
        return t.clone();
    }
    // Physicists' nodes by Newton on orthonormal Hermite functions.
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / (pp * pp);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    for i in 0..m {
        nodes[i] = -x[i] * sqrt2;
        nodes[n - 1 - i] = x[i] * sqrt2;
        weights[i] = w[i] * inv_sqrt_pi;
        weights[n - 1 - i] = w[i] * inv_sqrt_pi;
    }
    let t = Arc::new((nodes, weights));
    table.write().unwrap().entry(n).or_insert(t).clone()
}

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Point `i` of the two-dimensional Halton sequence (bases 2 and 3).
pub fn halton2(i: u64) -> [f64; 2] {
    [radical_inverse(i, 2), radical_inverse(i, 3)]
}
