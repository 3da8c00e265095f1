use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Hurst parameter `H ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return domain(format!("Hurst parameter must lie in (0, 1), got {h}"));
        }
        Ok(Self(h))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn two_h(self) -> f64 {
        2.0 * self.0
    }

    /// `H(2H − 1)`, the kernel constant of the fBm inner product.
    #[inline]
    pub fn alpha(self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }

    /// True in the transient regime `H > 1/2`.
    #[inline]
    pub fn is_transient(self) -> bool {
        self.0 > 0.5
    }

    pub fn require_transient(self) -> Result<()> {
        if self.is_transient() {
            Ok(())
        } else {
            domain(format!("this computation needs H > 1/2, got {}", self.0))
        }
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Hurst::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

impl std::fmt::Display for Hurst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        for h in [0.0, 1.0, -0.2, 1.2, f64::NAN] {
            assert!(Hurst::new(h).is_err(), "{h}");
        }
    }

    #[test]
    fn regime_flag_and_alpha() {
        let h = Hurst::new(0.75).unwrap();
        assert!(h.is_transient());
        assert_eq!(h.alpha(), 0.375);
        assert!(!Hurst::new(0.5).unwrap().is_transient());
        assert!(Hurst::new(0.3).unwrap().require_transient().is_err());
    }

    #[test]
    fn serde_validates() {
        assert!(serde_json::from_str::<Hurst>("0.6").is_ok());
        assert!(serde_json::from_str::<Hurst>("1.2").is_err());
    }
}
