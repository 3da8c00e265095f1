use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fbm::SeedSpec;

/// Rejection rate at or above which a verdict is inconclusive.
pub const MAX_REJECTION_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// `pass` iff `|estimate − target| ≤ max(tolerance, 4·stderr)`;
    /// inconclusive whenever the rejection rate reaches 1%.
    pub fn decide(distance: f64, tolerance: f64, stderr: f64, rejection_rate: f64) -> Verdict {
        if rejection_rate >= MAX_REJECTION_RATE {
            Verdict::Inconclusive
        } else if distance.is_finite() && distance <= tolerance.max(4.0 * stderr) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Worst of a set: fail beats inconclusive beats pass.
    pub fn combine<I: IntoIterator<Item = Verdict>>(vs: I) -> Verdict {
        vs.into_iter().fold(Verdict::Pass, |acc, v| match (acc, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Estimate {
    Real(f64),
    Complex(Complex64),
}

impl Estimate {
    pub fn re(&self) -> f64 {
        match *self {
            Estimate::Real(x) => x,
            Estimate::Complex(z) => z.re,
        }
    }

    pub fn im(&self) -> f64 {
        match *self {
            Estimate::Real(_) => 0.0,
            Estimate::Complex(z) => z.im,
        }
    }

    fn distance(&self, target: Complex64) -> f64 {
        match *self {
            Estimate::Real(x) if target.im == 0.0 => (x - target.re).abs(),
            Estimate::Real(x) => (Complex64::new(x, 0.0) - target).norm(),
            Estimate::Complex(z) => (z - target).norm(),
        }
    }
}

impl From<f64> for Estimate {
    fn from(x: f64) -> Self {
        Estimate::Real(x)
    }
}

impl From<Complex64> for Estimate {
    fn from(z: Complex64) -> Self {
        Estimate::Complex(z)
    }
}

/// Outcome of one Monte Carlo check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub name: String,
    pub estimate: Estimate,
    pub stderr: f64,
    /// Samples attempted, including rejected ones.
    pub n_samples: u64,
    pub n_rejected: u64,
    pub seed: SeedSpec,
    pub verdict: Verdict,
    pub target: Complex64,
    pub tolerance: f64,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub estimate: Estimate,
    pub stderr: f64,
    pub target: Complex64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(estimate: impl Into<Estimate>, stderr: f64, target: f64, tolerance: f64) -> Self {
        Self {
            estimate: estimate.into(),
            stderr,
            target: Complex64::new(target, 0.0),
            tolerance,
        }
    }

    pub fn complex_target(estimate: impl Into<Estimate>, stderr: f64, target: Complex64, tolerance: f64) -> Self {
        Self {
            estimate: estimate.into(),
            stderr,
            target,
            tolerance,
        }
    }

    /// A p-value check: passes iff `p ≥ level` (target 1, tolerance `1 − level`).
    pub fn p_value(p: f64, level: f64) -> Self {
        Self::new(p, 0.0, 1.0, 1.0 - level)
    }

    /// A bound with no sampling error: passes iff `|value − target| ≤ tolerance`.
    pub fn exact(value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(value, 0.0, target, tolerance)
    }
}

impl MCReport {
    pub fn new(name: impl Into<String>, check: Check, n_samples: u64, n_rejected: u64, seed: SeedSpec) -> Self {
        let rate = if n_samples == 0 { 0.0 } else { n_rejected as f64 / n_samples as f64 };
        let stderr = if check.stderr.is_nan() { f64::INFINITY } else { check.stderr.max(0.0) };
        let verdict = Verdict::decide(check.estimate.distance(check.target), check.tolerance, stderr, rate);
        let verdict = if n_samples > 0 && n_rejected >= n_samples {
            Verdict::Inconclusive
        } else if !stderr.is_finite() && verdict == Verdict::Pass {
            // An unknown error bar cannot certify a pass.
            Verdict::Fail
        } else {
            verdict
        };
        Self {
            name: name.into(),
            estimate: check.estimate,
            stderr,
            n_samples,
            n_rejected,
            seed,
            verdict,
            target: check.target,
            tolerance: check.tolerance,
            note: String::new(),
        }
    }

    /// A check that could not be evaluated at all.
    pub fn failed(name: impl Into<String>, seed: SeedSpec, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            estimate: Estimate::Real(f64::NAN),
            stderr: f64::INFINITY,
            n_samples: 0,
            n_rejected: 0,
            seed,
            verdict: Verdict::Fail,
            target: Complex64::new(0.0, 0.0),
            tolerance: 0.0,
            note: reason.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Forces the verdict inconclusive (never pass), e.g. for degenerate input.
    pub fn inconclusive(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.note = note.into();
        self
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.n_samples == 0 {
            0.0
        } else {
            self.n_rejected as f64 / self.n_samples as f64
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: [&'static str; 13] = [
        "name",
        "estimate_re",
        "estimate_im",
        "stderr",
        "n_samples",
        "n_rejected",
        "master_seed",
        "stream_index",
        "target_re",
        "target_im",
        "tolerance",
        "verdict",
        "note",
    ];

    pub fn csv_record(&self) -> [String; 13] {
        [
            self.name.clone(),
            self.estimate.re().to_string(),
            self.estimate.im().to_string(),
            self.stderr.to_string(),
            self.n_samples.to_string(),
            self.n_rejected.to_string(),
            self.seed.master_seed.to_string(),
            self.seed.stream_index.to_string(),
            self.target.re.to_string(),
            self.target.im.to_string(),
            self.tolerance.to_string(),
            self.verdict.to_string(),
            self.note.clone(),
        ]
    }
}

/// Writes reports as CSV with a header row.
pub fn write_reports_csv<W: Write>(reports: &[MCReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MCReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
