//! TOML run files and command-line overrides.
//!
//! A run file holds optional global keys followed by one table per
//! experiment:
//!
//! ```toml
//! h = 0.75
//! seed = 0
//!
//! [ergodic-radial]
//! h = [0.6, 0.75]
//! paths = 500
//! ```
//!
//! Unknown keys are rejected. Precedence, lowest first: built-in defaults,
//! global keys, the experiment's table, command-line flags.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use pfbm_core::experiments::{CircleFn, Experiment, ExperimentConfig, GridSpec, HoloFn};
use pfbm_core::fbm::{Hurst, SeedSpec};
use serde::Deserialize;

/// One Hurst index or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum HSpec {
    One(f64),
    Many(Vec<f64>),
}

impl HSpec {
    fn values(&self) -> Vec<f64> {
        match self {
            HSpec::One(h) => vec![*h],
            HSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

/// Per-experiment table. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub h: Option<HSpec>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub z0: Option<[f64; 2]>,
    pub grid: Option<GridSpec>,
    pub checkpoints: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub guard_eps: Option<f64>,
    pub label: Option<String>,
    pub shift: Option<[f64; 2]>,
    pub modes: Option<Vec<i32>>,
    pub k: Option<f64>,
    pub n_max: Option<u32>,
    pub blocks: Option<Vec<usize>>,
    pub small_t_paths: Option<usize>,
    pub functions: Option<Vec<HoloFn>>,
    pub circle: Option<Vec<CircleFn>>,
    pub controls: Option<bool>,
    pub per_path: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub h: Option<HSpec>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub z0: Option<[f64; 2]>,
    pub guard_eps: Option<f64>,
    pub workers: Option<usize>,
    /// Experiments run by the `run` subcommand; defaults to every table present.
    pub experiment: Option<OneOrMany<Experiment>>,
    #[serde(rename = "generator-law")]
    pub generator_law: Option<Section>,
    #[serde(rename = "ito-check")]
    pub ito_check: Option<Section>,
    #[serde(rename = "gradient-ito")]
    pub gradient_ito: Option<Section>,
    #[serde(rename = "skew-check")]
    pub skew_check: Option<Section>,
    #[serde(rename = "ergodic-radial")]
    pub ergodic_radial: Option<Section>,
    #[serde(rename = "ergodic-angular")]
    pub ergodic_angular: Option<Section>,
    #[serde(rename = "ergodic-clock")]
    pub ergodic_clock: Option<Section>,
    #[serde(rename = "ergodic-circle")]
    pub ergodic_circle: Option<Section>,
    pub prop20: Option<Section>,
    pub corollary19: Option<Section>,
    pub variation: Option<Section>,
    #[serde(rename = "winding-cf")]
    pub winding_cf: Option<Section>,
    pub clt: Option<Section>,
    #[serde(rename = "uniform-angle")]
    pub uniform_angle: Option<Section>,
    pub mixing: Option<Section>,
    pub symmetry: Option<Section>,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn section(&self, e: Experiment) -> Option<&Section> {
        use Experiment::*;
        match e {
            GeneratorLaw => self.generator_law.as_ref(),
            ItoCheck => self.ito_check.as_ref(),
            GradientIto => self.gradient_ito.as_ref(),
            SkewCheck => self.skew_check.as_ref(),
            ErgodicRadial => self.ergodic_radial.as_ref(),
            ErgodicAngular => self.ergodic_angular.as_ref(),
            ErgodicClock => self.ergodic_clock.as_ref(),
            ErgodicCircle => self.ergodic_circle.as_ref(),
            Prop20 => self.prop20.as_ref(),
            Corollary19 => self.corollary19.as_ref(),
            Variation => self.variation.as_ref(),
            WindingCf => self.winding_cf.as_ref(),
            Clt => self.clt.as_ref(),
            UniformAngle => self.uniform_angle.as_ref(),
            Mixing => self.mixing.as_ref(),
            Symmetry => self.symmetry.as_ref(),
        }
    }

    /// Experiments named by the file.
    pub fn selected(&self) -> Vec<Experiment> {
        match &self.experiment {
            Some(OneOrMany::One(e)) => vec![*e],
            Some(OneOrMany::Many(v)) => v.clone(),
            None => Experiment::ALL.into_iter().filter(|&e| self.section(e).is_some()).collect(),
        }
    }
}

/// Command-line overrides shared by the experiment subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub h: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub z0: Option<Complex64>,
    pub grid: Option<GridSpec>,
    pub per_path: bool,
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// `re,im` or a bare real number.
pub fn parse_z0(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| anyhow!("z0: `{p}` is not a number"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => bail!("z0: expected `re,im`, got `{s}`"),
    }
}

/// A grid as a TOML inline table, e.g. `{kind = "uniform", n = 1024, t_max = 1.0}`.
pub fn parse_grid(s: &str) -> Result<GridSpec> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Wrap {
        grid: GridSpec,
    }
    let w: Wrap = toml::from_str(&format!("grid = {s}")).map_err(|e| anyhow!("grid: {}", e.message()))?;
    Ok(w.grid)
}

fn hurst(h: f64, scope: &str) -> Result<Hurst> {
    Hurst::new(h).map_err(|e| anyhow!("{scope}h: {e}"))
}

/// Fully resolved configurations for `experiments`, one per Hurst index.
pub fn resolve(file: &RunFile, experiments: &[Experiment], cli: &Overrides) -> Result<Vec<ExperimentConfig>> {
    let mut out = Vec::new();
    for &e in experiments {
        let empty = Section::default();
        let sec = file.section(e).unwrap_or(&empty);
        let scope = format!("[{e}] ");
        let hs = match (cli.h, &sec.h, &file.h) {
            (Some(h), _, _) => vec![h],
            (None, Some(s), _) | (None, None, Some(s)) => s.values(),
            (None, None, None) => vec![0.75],
        };
        if hs.is_empty() {
            bail!("{scope}h: empty list");
        }
        for &h in &hs {
            let mut c = ExperimentConfig::defaults(e, hurst(h, &scope)?);
            if hs.len() > 1 {
                c.label = format!("{e}-h{h}");
            }
            apply_global(&mut c, file);
            apply_section(&mut c, sec);
            apply_cli(&mut c, cli);
            c.validate().map_err(|err| anyhow!("{scope}{err}"))?;
            out.push(c);
        }
    }
    let mut labels: Vec<&str> = out.iter().map(|c| c.label.as_str()).collect();
    labels.sort_unstable();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        bail!("label: `{}` is used twice", w[0]);
    }
    Ok(out)
}

fn apply_global(c: &mut ExperimentConfig, f: &RunFile) {
    if let Some(s) = f.seed {
        c.seed = SeedSpec::new(s, 0);
    }
    if let Some(n) = f.paths {
        c.n_paths = n;
    }
    if let Some(z) = f.z0 {
        c.z0 = complex(z);
    }
    if let Some(g) = f.guard_eps {
        c.guard_eps = g;
    }
}

fn apply_section(c: &mut ExperimentConfig, s: &Section) {
    if let Some(v) = s.seed {
        c.seed = SeedSpec::new(v, 0);
    }
    if let Some(v) = s.paths {
        c.n_paths = v;
    }
    if let Some(v) = s.z0 {
        c.z0 = complex(v);
    }
    if let Some(v) = s.grid {
        c.grid = v;
    }
    if let Some(v) = &s.checkpoints {
        c.checkpoints = v.clone();
    }
    if s.tolerance.is_some() {
        c.tolerance = s.tolerance;
    }
    if let Some(v) = s.guard_eps {
        c.guard_eps = v;
    }
    if let Some(v) = &s.label {
        c.label = v.clone();
    }
    let p = &mut c.params;
    if let Some(v) = s.shift {
        p.shift = complex(v);
    }
    if let Some(v) = &s.modes {
        p.modes = v.clone();
    }
    if let Some(v) = s.k {
        p.k = v;
    }
    if let Some(v) = s.n_max {
        p.n_max = v;
    }
    if let Some(v) = &s.blocks {
        p.blocks = v.clone();
    }
    if let Some(v) = s.small_t_paths {
        p.small_t_paths = v;
    }
    if let Some(v) = &s.functions {
        p.functions = v.clone();
    }
    if let Some(v) = &s.circle {
        p.circle = v.clone();
    }
    if let Some(v) = s.controls {
        p.controls = v;
    }
    if let Some(v) = s.per_path {
        p.per_path = v;
    }
}

fn apply_cli(c: &mut ExperimentConfig, o: &Overrides) {
    if let Some(s) = o.seed {
        c.seed = SeedSpec::new(s, 0);
    }
    if let Some(n) = o.paths {
        c.n_paths = n;
    }
    if let Some(z) = o.z0 {
        c.z0 = z;
    }
    if let Some(g) = o.grid {
        c.grid = g;
    }
    if o.per_path {
        c.params.per_path = true;
    }
}
