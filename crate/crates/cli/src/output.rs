//! Result files: per-experiment outputs, the summary and the run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pfbm_core::experiments::{ExperimentConfig, ExperimentOutput};
use pfbm_core::stats::{write_reports_csv, Estimate, MCReport, Verdict};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
struct SummaryEntry<'a> {
    label: &'a str,
    experiment: String,
    verdict: Verdict,
    reports: &'a [MCReport],
    controls: &'a [MCReport],
    notes: &'a [String],
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    version: &'a str,
    verdict: Verdict,
    experiments: Vec<SummaryEntry<'a>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentVerdict {
    pub label: String,
    pub verdict: Verdict,
}

/// `run.json`: enough to rerun everything that produced the directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub verdict: Verdict,
    pub experiments: Vec<ExperimentVerdict>,
    pub files: Vec<PathBuf>,
    pub configs: Vec<ExperimentConfig>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))
    }
}

pub fn overall(outputs: &[ExperimentOutput]) -> Verdict {
    Verdict::combine(outputs.iter().map(|o| o.verdict))
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    }
}

/// Writes the per-experiment files, `summary.json` and `reports.csv`;
/// returns every path written.
pub fn write_results(dir: &Path, outputs: &[ExperimentOutput], per_path: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut files = Vec::new();
    for o in outputs {
        files.extend(o.write_to(dir, per_path || o.config.params.per_path)?);
    }
    let summary = Summary {
        version: VERSION,
        verdict: overall(outputs),
        experiments: outputs
            .iter()
            .map(|o| SummaryEntry {
                label: &o.label,
                experiment: o.experiment.to_string(),
                verdict: o.verdict,
                reports: &o.reports,
                controls: &o.controls,
                notes: &o.notes,
            })
            .collect(),
    };
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(path);
    let path = dir.join("reports.csv");
    let reports: Vec<MCReport> = outputs
        .iter()
        .flat_map(|o| {
            o.reports.iter().chain(&o.controls).map(|r| MCReport {
                name: format!("{}/{}", o.label, r.name),
                ..r.clone()
            })
        })
        .collect();
    write_reports_csv(&reports, BufWriter::new(fs::File::create(&path)?))?;
    files.push(path);
    Ok(files)
}

/// Writes `run.json` through a temporary file and a rename.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join("run.json");
    let tmp = dir.join(".run.json.tmp");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("cannot write {}", tmp.display()))?;
        f.write_all(serde_json::to_string_pretty(manifest)?.as_bytes())?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn fmt_estimate(e: &Estimate) -> String {
    match e {
        Estimate::Real(x) => format!("{x:.6}"),
        Estimate::Complex(z) => format!("{:.6}{:+.6}i", z.re, z.im),
    }
}

fn fmt_report(r: &MCReport) -> String {
    let target = if r.target.im == 0.0 {
        format!("{:.6}", r.target.re)
    } else {
        format!("{:.6}{:+.6}i", r.target.re, r.target.im)
    };
    let mut line = format!(
        "  {:<12} {}: {} ± {:.2e} (target {}, tol {:.2e})",
        r.verdict.to_string(),
        r.name,
        fmt_estimate(&r.estimate),
        r.stderr,
        target,
        r.tolerance
    );
    if r.n_rejected > 0 {
        line.push_str(&format!(", rejected {}/{}", r.n_rejected, r.n_samples));
    }
    line
}

pub fn print_output<W: Write>(mut w: W, o: &ExperimentOutput) -> std::io::Result<()> {
    writeln!(w, "{} [{}]", o.label, o.verdict)?;
    for r in &o.reports {
        writeln!(w, "{}", fmt_report(r))?;
    }
    for r in &o.controls {
        writeln!(w, "{} (control)", fmt_report(r))?;
    }
    for n in &o.notes {
        writeln!(w, "  note: {n}")?;
    }
    Ok(())
}
