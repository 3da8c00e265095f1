use std::sync::Arc;

use num_complex::Complex64;

use super::{CholeskySampler, CirculantSampler, GridKind, Hurst, SeedSpec, TimeGrid};
use crate::error::{domain, Error, Result};

/// One sampled real fBm trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPath1D {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
    start: f64,
    h: Hurst,
}

impl RealPath1D {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>, start: f64, h: Hurst) -> Self {
        assert_eq!(grid.len(), values.len(), "path length differs from grid");
        Self {
            grid,
            values,
            start,
            h,
        }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid time `t`, if `t` is a grid point.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|i| self.values[i])
    }
}

/// One sampled planar fBm trajectory `B = B¹ + iB²` started at `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPath {
    grid: Arc<TimeGrid>,
    values: Vec<Complex64>,
    origin: Complex64,
    h: Hurst,
}

impl ComplexPath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<Complex64>, origin: Complex64, h: Hurst) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            origin,
            h,
        })
    }

    /// Deterministic path `t ↦ f(t)`; handy for analytic test cases.
    pub fn from_fn(grid: Arc<TimeGrid>, origin: Complex64, h: Hurst, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.times().iter().map(|&t| f(t)).collect();
        Self {
            grid,
            values,
            origin,
            h,
        }
    }

    pub fn from_components(re: &RealPath1D, im: &RealPath1D) -> Result<Self> {
        if re.grid() != im.grid() {
            return Err(Error::GridMismatch("component paths live on different grids".into()));
        }
        let values = re
            .values()
            .iter()
            .zip(im.values())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Self::new(
            re.grid().clone(),
            values,
            Complex64::new(re.start(), im.start()),
            re.hurst(),
        )
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn origin(&self) -> Complex64 {
        self.origin
    }

    pub fn hurst(&self) -> Hurst {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, t: f64) -> Option<Complex64> {
        self.grid.index_of(t).map(|i| self.values[i])
    }

    pub fn re(&self) -> RealPath1D {
        RealPath1D::new(
            self.grid.clone(),
            self.values.iter().map(|z| z.re).collect(),
            self.origin.re,
            self.h,
        )
    }

    pub fn im(&self) -> RealPath1D {
        RealPath1D::new(
            self.grid.clone(),
            self.values.iter().map(|z| z.im).collect(),
            self.origin.im,
            self.h,
        )
    }

    /// Restriction to grid indices `from..`, keeping the origin.
    pub fn tail(&self, from: usize) -> Result<Self> {
        if from >= self.len() {
            return domain(format!("tail index {from} past the end of a {}-point path", self.len()));
        }
        let grid = TimeGrid::explicit(self.grid.times()[from..].to_vec())?;
        Self::new(Arc::new(grid), self.values[from..].to_vec(), self.origin, self.h)
    }

    /// The path without its deterministic point at `t = 0`.
    pub fn without_origin(&self) -> Result<Self> {
        if self.grid.starts_at_zero() {
            self.tail(1)
        } else {
            Ok(self.clone())
        }
    }
}

/// Picks the circulant sampler for uniform grids from the origin and the
/// Cholesky sampler otherwise.
#[derive(Debug, Clone)]
pub enum RealSampler {
    Cholesky(CholeskySampler),
    Circulant(CirculantSampler),
}

impl RealSampler {
    pub fn new(grid: Arc<TimeGrid>, h: Hurst) -> Result<Self> {
        if matches!(grid.kind(), GridKind::Uniform { .. }) && grid.starts_at_zero() && grid.len() > 1 {
            Ok(Self::Circulant(CirculantSampler::with_grid(grid, h)?))
        } else {
            Ok(Self::Cholesky(CholeskySampler::new(grid, h)?))
        }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        match self {
            Self::Cholesky(s) => s.grid(),
            Self::Circulant(s) => s.grid(),
        }
    }

    pub fn hurst(&self) -> Hurst {
        match self {
            Self::Cholesky(s) => s.hurst(),
            Self::Circulant(s) => s.hurst(),
        }
    }

    pub fn normals_needed(&self) -> usize {
        match self {
            Self::Cholesky(s) => s.normals_needed(),
            Self::Circulant(s) => s.normals_needed(),
        }
    }

    pub fn fill(&self, start: f64, seed: SeedSpec, normals: &mut [f64], out: &mut [f64]) {
        seed.fill_normals(normals);
        match self {
            Self::Cholesky(s) => s.fill_from_normals(start, normals, out),
            Self::Circulant(s) => s.fill_from_normals(start, normals, out),
        }
    }

    pub fn sample(&self, start: f64, seed: SeedSpec) -> RealPath1D {
        match self {
            Self::Cholesky(s) => s.sample(start, seed),
            Self::Circulant(s) => s.sample(start, seed),
        }
    }
}

/// Planar sampler: two independent real components on distinct streams.
#[derive(Debug, Clone)]
pub struct ComplexSampler {
    inner: RealSampler,
}

impl ComplexSampler {
    pub fn new(grid: Arc<TimeGrid>, h: Hurst) -> Result<Self> {
        Ok(Self {
            inner: RealSampler::new(grid, h)?,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        self.inner.grid()
    }

    pub fn hurst(&self) -> Hurst {
        self.inner.hurst()
    }

    pub fn real_sampler(&self) -> &RealSampler {
        &self.inner
    }

    /// Draw with `seed.child(0)` feeding the real part and `seed.child(1)`
    /// the imaginary part.
    pub fn sample(&self, z0: Complex64, seed: SeedSpec) -> ComplexPath {
        let n = self.grid().len();
        let mut normals = vec![0.0; self.inner.normals_needed()];
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        self.inner.fill(z0.re, seed.child(0), &mut normals, &mut re);
        self.inner.fill(z0.im, seed.child(1), &mut normals, &mut im);
        let values = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
        ComplexPath {
            grid: self.grid().clone(),
            values,
            origin: z0,
            h: self.hurst(),
        }
    }
}

pub fn complex_fbm(grid: &TimeGrid, h: Hurst, z0: Complex64, seed: SeedSpec) -> Result<ComplexPath> {
    Ok(ComplexSampler::new(Arc::new(grid.clone()), h)?.sample(z0, seed))
}

/// `ω ↦ ω(k·)/k^H` on a geometric grid whose ratio divides `k`
/// (`k = ratio^j` for an integer `j ≥ 0`).
pub fn scale_transform(path: &RealPath1D, k: f64) -> Result<RealPath1D> {
    if !(k > 0.0) {
        return domain(format!("scale factor must be positive, got {k}"));
    }
    if path.start() != 0.0 {
        return domain("scale_transform needs a path started at 0");
    }
    if k == 1.0 {
        return Ok(path.clone());
    }
    let GridKind::Geometric { t_min, ratio, count } = path.grid().kind() else {
        return domain("scale_transform needs a geometric grid");
    };
    let steps = k.ln() / ratio.ln();
    let j = steps.round();
    if j < 1.0 || (steps - j).abs() > 1e-9 * steps.abs().max(1.0) {
        return domain(format!("grid with ratio {ratio} is not closed under multiplication by {k}"));
    }
    let j = j as usize;
    if j >= count {
        return domain(format!("scaling by {k} leaves no grid points"));
    }
    let origin = usize::from(path.grid().starts_at_zero());
    let grid = TimeGrid::geometric(t_min, ratio, count - j, origin == 1)?;
    let factor = k.powf(path.hurst().value());
    let mut values = Vec::with_capacity(grid.len());
    if origin == 1 {
        values.push(0.0);
    }
    values.extend(path.values()[origin + j..].iter().map(|v| v / factor));
    Ok(RealPath1D::new(Arc::new(grid), values, 0.0, path.hurst()))
}

/// `t ↦ t^{2H} β_{1/t}` on the reciprocal grid.
pub fn time_inversion(path: &ComplexPath) -> Result<ComplexPath> {
    if path.origin() != Complex64::new(0.0, 0.0) {
        return domain("time_inversion needs z0 = 0");
    }
    if !path.grid().starts_at_zero() || path.len() < 2 {
        return domain("time_inversion needs a grid starting at 0 with positive times after it");
    }
    let two_h = path.hurst().two_h();
    let mut times = Vec::with_capacity(path.len());
    let mut values = Vec::with_capacity(path.len());
    times.push(0.0);
    values.push(Complex64::new(0.0, 0.0));
    for (&t, &v) in path.times()[1..].iter().zip(&path.values()[1..]).rev() {
        let u = 1.0 / t;
        times.push(u);
        values.push(v * u.powf(two_h));
    }
    let grid = TimeGrid::explicit(times)?;
    ComplexPath::new(Arc::new(grid), values, path.origin(), path.hurst())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h75() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    #[test]
    fn complex_path_starts_at_origin() {
        let grid = TimeGrid::uniform(32, 1.0 / 32.0).unwrap();
        let z0 = Complex64::new(1.0, -2.0);
        let p = complex_fbm(&grid, h75(), z0, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(p.values()[0], z0);
        assert_eq!(p.origin(), z0);
    }

    #[test]
    fn components_use_distinct_streams() {
        let grid = TimeGrid::uniform(16, 0.1).unwrap();
        let p = complex_fbm(&grid, h75(), Complex64::new(0.0, 0.0), SeedSpec::new(5, 0)).unwrap();
        assert!(p.values()[1..].iter().all(|z| z.re != z.im));
    }

    #[test]
    fn scale_by_one_is_identity() {
        let grid = TimeGrid::geometric(0.5, 2.0, 6, true).unwrap();
        let p = super::super::cholesky_sample(&grid, h75(), 0.0, SeedSpec::new(1, 1)).unwrap();
        assert_eq!(scale_transform(&p, 1.0).unwrap(), p);
    }

    #[test]
    fn scale_semigroup() {
        let grid = TimeGrid::geometric(0.5, 2.0, 8, false).unwrap();
        let p = super::super::cholesky_sample(&grid, h75(), 0.0, SeedSpec::new(1, 1)).unwrap();
        let twice = scale_transform(&scale_transform(&p, 2.0).unwrap(), 2.0).unwrap();
        let once = scale_transform(&p, 4.0).unwrap();
        assert_eq!(twice.times(), once.times());
        for (a, b) in twice.values().iter().zip(once.values()) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn scale_rejects_incompatible_factor() {
        let grid = TimeGrid::geometric(0.5, 2.0, 8, false).unwrap();
        let p = super::super::cholesky_sample(&grid, h75(), 0.0, SeedSpec::new(1, 1)).unwrap();
        assert!(scale_transform(&p, 3.0).is_err());
        let uni = TimeGrid::uniform(8, 0.5).unwrap();
        let q = super::super::cholesky_sample(&uni, h75(), 0.0, SeedSpec::new(1, 1)).unwrap();
        assert!(scale_transform(&q, 2.0).is_err());
    }

    #[test]
    fn inversion_is_pointwise_and_involutive() {
        let grid = TimeGrid::geometric(0.1, 1.5, 12, true).unwrap();
        let p = complex_fbm(&grid, h75(), Complex64::new(0.0, 0.0), SeedSpec::new(9, 0)).unwrap();
        let q = time_inversion(&p).unwrap();
        let n = p.len();
        for i in 1..n {
            let t = p.times()[i];
            let j = n - i;
            assert_eq!(q.times()[j], 1.0 / t);
            assert_eq!(q.values()[j], p.values()[i] * (1.0 / t).powf(1.5));
        }
        let back = time_inversion(&q).unwrap();
        for (a, b) in back.values().iter().zip(p.values()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn inversion_needs_zero_origin() {
        let grid = TimeGrid::uniform(4, 0.25).unwrap();
        let p = complex_fbm(&grid, h75(), Complex64::new(1.0, 0.0), SeedSpec::new(9, 0)).unwrap();
        assert!(time_inversion(&p).is_err());
    }

    #[test]
    fn without_origin_drops_first_point() {
        let grid = TimeGrid::uniform(4, 0.25).unwrap();
        let p = complex_fbm(&grid, h75(), Complex64::new(1.0, 0.0), SeedSpec::new(9, 0)).unwrap();
        let q = p.without_origin().unwrap();
        assert_eq!(q.len(), 4);
        assert_eq!(q.times()[0], 0.25);
        assert_eq!(q.origin(), p.origin());
    }
}
