use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-pass mean and variance (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two accumulators. Merging in a fixed order gives a fixed
    /// result.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::InsufficientData(format!("variance needs n ≥ 2, have {}", self.n)));
        }
        Ok((self.m2 / (self.n - 1) as f64).max(0.0))
    }

    pub fn stderr(&self) -> Result<f64> {
        Ok((self.variance()? / self.n as f64).sqrt())
    }

    pub fn summary(&self) -> Result<MomentSummary> {
        let variance = self.variance()?;
        Ok(MomentSummary {
            n: self.n,
            mean: self.mean,
            variance,
            stderr: (variance / self.n as f64).sqrt(),
        })
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

/// Mean, sample variance and standard error of a stream.
pub fn moments_accumulate<I: IntoIterator<Item = f64>>(stream: I) -> Result<MomentSummary> {
    stream.into_iter().collect::<Moments>().summary()
}

/// Streaming covariance of pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    m2_y: f64,
    c: f64,
}

impl CoMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c += dx * (y - self.mean_y);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    fn need_two(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::InsufficientData(format!("covariance needs n ≥ 2, have {}", self.n)));
        }
        Ok((self.n - 1) as f64)
    }

    pub fn covariance(&self) -> Result<f64> {
        Ok(self.c / self.need_two()?)
    }

    pub fn variances(&self) -> Result<(f64, f64)> {
        let d = self.need_two()?;
        Ok((self.m2_x / d, self.m2_y / d))
    }

    /// Pearson correlation; zero when either side is constant.
    pub fn correlation(&self) -> Result<f64> {
        self.need_two()?;
        let denom = (self.m2_x * self.m2_y).sqrt();
        Ok(if denom > 0.0 { self.c / denom } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::SeedSpec;
    use proptest::prelude::*;

    #[test]
    fn constant_stream() {
        let s = moments_accumulate(std::iter::repeat_n(3.5, 10)).unwrap();
        assert_eq!((s.mean, s.variance, s.stderr), (3.5, 0.0, 0.0));
    }

    #[test]
    fn one_two_three() {
        let s = moments_accumulate([1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.variance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn needs_two_samples() {
        assert!(moments_accumulate([1.0]).is_err());
        assert!(moments_accumulate([]).is_err());
    }

    #[test]
    fn million_normals() {
        let s = moments_accumulate(SeedSpec::new(5, 0).normals(1_000_000)).unwrap();
        assert!(s.mean.abs() < 4e-3);
        assert!((s.variance - 1.0).abs() < 4.0 * (2.0f64 / 1e6).sqrt());
    }

    #[test]
    fn correlation_of_linear_pairs() {
        let mut c = CoMoments::new();
        for i in 0..20 {
            c.push(i as f64, 3.0 - 2.0 * i as f64);
        }
        assert!((c.correlation().unwrap() + 1.0).abs() < 1e-12);
        assert!((c.covariance().unwrap() + 2.0 * 35.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn merge_matches_single_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
            let cut = cut.min(xs.len());
            let whole: Moments = xs.iter().copied().collect();
            let mut left: Moments = xs[..cut].iter().copied().collect();
            let right: Moments = xs[cut..].iter().copied().collect();
            left.merge(&right);
            let (a, b) = (whole.variance().unwrap(), left.variance().unwrap());
            prop_assert!((whole.mean() - left.mean()).abs() <= 1e-12 * (1.0 + whole.mean().abs()));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn order_independent(mut xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let fwd: Moments = xs.iter().copied().collect();
            xs.reverse();
            let rev: Moments = xs.iter().copied().collect();
            let (a, b) = (fwd.variance().unwrap(), rev.variance().unwrap());
            prop_assert!((fwd.mean() - rev.mean()).abs() <= 1e-12 * (1.0 + fwd.mean().abs()));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn variance_nonnegative(xs in prop::collection::vec(-1e6f64..1e6, 2..100)) {
            let s = moments_accumulate(xs).unwrap();
            prop_assert!(s.variance >= 0.0 && s.stderr >= 0.0);
        }
    }
}
