//! Parallel path loop, output bundle and the shared slope/mean reporters.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fbm::SeedSpec;
use crate::stats::{log_slope_regression, Check, MCReport, Moments, Verdict};

/// Maps `f` over path indices `0..n`. Results come back in index order
/// whatever the number of worker threads.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Domain("workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub quantity: String,
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub quantity: String,
    pub path: u64,
    pub rejected: bool,
    pub values: Vec<f64>,
}

/// Everything one runner produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub label: String,
    pub experiment: Experiment,
    pub verdict: Verdict,
    pub reports: Vec<MCReport>,
    /// Negative controls; each must come out `fail`.
    pub controls: Vec<MCReport>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
    pub checkpoints: Vec<CheckpointStat>,
    #[serde(skip)]
    pub per_path: Vec<PathRecord>,
}

impl ExperimentOutput {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            label: config.label.clone(),
            experiment: config.experiment,
            verdict: Verdict::Pass,
            reports: Vec::new(),
            controls: Vec::new(),
            notes: Vec::new(),
            config: config.clone(),
            checkpoints: Vec::new(),
            per_path: Vec::new(),
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Worst verdict over the reports; a control that passes turns the
    /// whole run into a failure.
    pub fn finish(mut self) -> Self {
        let mut v = Verdict::combine(self.reports.iter().map(|r| r.verdict));
        if self.reports.is_empty() {
            v = Verdict::Fail;
        }
        let vacuous: Vec<String> = self.controls.iter().filter(|c| c.verdict != Verdict::Fail).map(|c| c.name.clone()).collect();
        if !vacuous.is_empty() {
            self.notes.push(format!("negative controls did not fail: {}", vacuous.join(", ")));
            v = Verdict::Fail;
        }
        self.verdict = v;
        self
    }

    pub fn report(&self, name: &str) -> Option<&MCReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_checkpoints_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.checkpoints {
            w.serialize(row)?;
        }
        if self.checkpoints.is_empty() {
            w.write_record(["quantity", "t", "mean", "stderr", "n"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_per_path_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for rec in &self.per_path {
            serde_json::to_writer(&mut writer, rec)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Writes `<label>.json`, `<label>.csv` and, if asked, `<label>.paths.jsonl`.
    pub fn write_to(&self, dir: &Path, per_path: bool) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.label));
        fs::write(&json, self.to_json()? + "\n")?;
        let csv = dir.join(format!("{}.csv", self.label));
        self.write_checkpoints_csv(BufWriter::new(fs::File::create(&csv)?))?;
        let mut files = vec![json, csv];
        if per_path {
            let jl = dir.join(format!("{}.paths.jsonl", self.label));
            self.write_per_path_jsonl(BufWriter::new(fs::File::create(&jl)?))?;
            files.push(jl);
        }
        Ok(files)
    }
}

/// Per-path values at the checkpoints, `None` for rejected paths.
pub type Series = Option<Vec<f64>>;

pub(crate) fn checkpoint_stats(quantity: &str, times: &[f64], series: &[Series]) -> Vec<CheckpointStat> {
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let m: Moments = series.iter().flatten().map(|v| v[j]).collect();
            CheckpointStat {
                quantity: quantity.to_string(),
                t,
                mean: m.mean(),
                stderr: m.stderr().unwrap_or(f64::NAN),
                n: m.count(),
            }
        })
        .collect()
}

pub(crate) fn path_records(quantity: &str, series: &[Series]) -> Vec<PathRecord> {
    series
        .iter()
        .enumerate()
        .map(|(i, s)| PathRecord {
            quantity: quantity.to_string(),
            path: i as u64,
            rejected: s.is_none(),
            values: s.clone().unwrap_or_default(),
        })
        .collect()
}

/// Slope of the per-path series against `ln t`, judged against `target`.
pub(crate) fn slope_report(
    name: &str,
    times: &[f64],
    series: &[Series],
    target: f64,
    tolerance: f64,
    seed: SeedSpec,
) -> MCReport {
    let accepted: Vec<Vec<f64>> = series.iter().flatten().cloned().collect();
    let rejected = (series.len() - accepted.len()) as u64;
    match log_slope_regression(times, &accepted) {
        Ok(s) => MCReport::new(name, Check::new(s.slope, s.stderr, target, tolerance), series.len() as u64, rejected, seed)
            .with_note(format!(
                "mean per-path OLS slope against ln t over t in [{}, {}] (95% CI {:.4}..{:.4}); regression across checkpoints stands in for the t → ∞ limit",
                times[0],
                times[times.len() - 1],
                s.ci.0,
                s.ci.1
            )),
        Err(e) => MCReport::failed(name, seed, e.to_string()),
    }
}

/// Sample mean with its standard error, judged against `target`.
pub(crate) fn mean_report(
    name: &str,
    values: &[Option<f64>],
    target: f64,
    tolerance: f64,
    seed: SeedSpec,
) -> MCReport {
    let m: Moments = values.iter().flatten().copied().collect();
    let rejected = values.iter().filter(|v| v.is_none()).count() as u64;
    match m.stderr() {
        Ok(se) => MCReport::new(name, Check::new(m.mean(), se, target, tolerance), values.len() as u64, rejected, seed),
        Err(e) => MCReport::failed(name, seed, e.to_string()),
    }
}

/// Median of the finite entries.
pub(crate) fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
