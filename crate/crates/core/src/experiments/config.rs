use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fbm::{Hurst, SeedSpec, TimeGrid};
use crate::integral::DEFAULT_GUARD_EPS;

/// Smallest path count accepted for a statistical run.
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GeneratorLaw,
    ItoCheck,
    GradientIto,
    SkewCheck,
    ErgodicRadial,
    ErgodicAngular,
    ErgodicClock,
    ErgodicCircle,
    Prop20,
    Corollary19,
    Variation,
    WindingCf,
    Clt,
    UniformAngle,
    Mixing,
    Symmetry,
}

impl Experiment {
    pub const ALL: [Experiment; 16] = [
        Experiment::GeneratorLaw,
        Experiment::ItoCheck,
        Experiment::GradientIto,
        Experiment::SkewCheck,
        Experiment::ErgodicRadial,
        Experiment::ErgodicAngular,
        Experiment::ErgodicClock,
        Experiment::ErgodicCircle,
        Experiment::Prop20,
        Experiment::Corollary19,
        Experiment::Variation,
        Experiment::WindingCf,
        Experiment::Clt,
        Experiment::UniformAngle,
        Experiment::Mixing,
        Experiment::Symmetry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GeneratorLaw => "generator-law",
            Experiment::ItoCheck => "ito-check",
            Experiment::GradientIto => "gradient-ito",
            Experiment::SkewCheck => "skew-check",
            Experiment::ErgodicRadial => "ergodic-radial",
            Experiment::ErgodicAngular => "ergodic-angular",
            Experiment::ErgodicClock => "ergodic-clock",
            Experiment::ErgodicCircle => "ergodic-circle",
            Experiment::Prop20 => "prop20",
            Experiment::Corollary19 => "corollary19",
            Experiment::Variation => "variation",
            Experiment::WindingCf => "winding-cf",
            Experiment::Clt => "clt",
            Experiment::UniformAngle => "uniform-angle",
            Experiment::Mixing => "mixing",
            Experiment::Symmetry => "symmetry",
        }
    }

    /// Runners that integrate `dB/B` from a nonzero start.
    fn needs_nonzero_start(self) -> bool {
        matches!(
            self,
            Experiment::ItoCheck
                | Experiment::SkewCheck
                | Experiment::ErgodicRadial
                | Experiment::ErgodicAngular
                | Experiment::ErgodicClock
                | Experiment::Prop20
                | Experiment::Variation
                | Experiment::WindingCf
        )
    }

    fn needs_zero_start(self) -> bool {
        matches!(
            self,
            Experiment::ErgodicCircle | Experiment::Corollary19 | Experiment::Clt | Experiment::UniformAngle
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown experiment `{s}`")))
    }
}

/// Declarative time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// `{0, dt, …, t_max}` with `dt = t_max / n`.
    Uniform { n: usize, t_max: f64 },
    /// `per_decade` points per decade from `t_min` to `t_max`, optionally
    /// preceded by the origin.
    Geometric {
        t_min: f64,
        t_max: f64,
        per_decade: usize,
        #[serde(default)]
        origin: bool,
    },
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        match *self {
            GridSpec::Uniform { n, t_max } => TimeGrid::uniform(n, t_max / n as f64),
            GridSpec::Geometric {
                t_min,
                t_max,
                per_decade,
                origin,
            } => {
                if per_decade == 0 || !(t_max >= t_min) || !(t_min > 0.0) {
                    return domain(format!(
                        "geometric grid needs 0 < t_min ≤ t_max and per_decade ≥ 1 (t_min = {t_min}, t_max = {t_max}, per_decade = {per_decade})"
                    ));
                }
                let ratio = 10f64.powf(1.0 / per_decade as f64);
                let steps = ((t_max / t_min).log10() * per_decade as f64 - 1e-6).ceil().max(0.0) as usize;
                TimeGrid::geometric(t_min, ratio, steps + 1, origin)
            }
        }
    }

    pub fn build_arc(&self) -> Result<Arc<TimeGrid>> {
        Ok(Arc::new(self.build()?))
    }
}

/// Holomorphic test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoloFn {
    #[serde(rename = "z")]
    Z,
    #[serde(rename = "z^2")]
    Z2,
    #[serde(rename = "z^3")]
    Z3,
    #[serde(rename = "z+z^2")]
    ZPlusZ2,
    #[serde(rename = "exp")]
    Exp,
}

impl HoloFn {
    pub fn eval(self, z: Complex64) -> Complex64 {
        match self {
            HoloFn::Z => z,
            HoloFn::Z2 => z * z,
            HoloFn::Z3 => z * z * z,
            HoloFn::ZPlusZ2 => z + z * z,
            HoloFn::Exp => z.exp(),
        }
    }

    pub fn derivative(self, z: Complex64) -> Complex64 {
        match self {
            HoloFn::Z => Complex64::new(1.0, 0.0),
            HoloFn::Z2 => 2.0 * z,
            HoloFn::Z3 => 3.0 * z * z,
            HoloFn::ZPlusZ2 => 1.0 + 2.0 * z,
            HoloFn::Exp => z.exp(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HoloFn::Z => "z",
            HoloFn::Z2 => "z^2",
            HoloFn::Z3 => "z^3",
            HoloFn::ZPlusZ2 => "z+z^2",
            HoloFn::Exp => "exp",
        }
    }
}

/// Test functions on the unit circle, `e^{iφ} ↦ f(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleFn {
    One,
    Cos,
    Cos2,
}

impl CircleFn {
    pub fn eval(self, u: Complex64) -> f64 {
        match self {
            CircleFn::One => 1.0,
            CircleFn::Cos => u.re,
            CircleFn::Cos2 => u.re * u.re,
        }
    }

    /// Haar average over the circle.
    pub fn mean(self) -> f64 {
        match self {
            CircleFn::One => 1.0,
            CircleFn::Cos => 0.0,
            CircleFn::Cos2 => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CircleFn::One => "one",
            CircleFn::Cos => "cos",
            CircleFn::Cos2 => "cos2",
        }
    }
}

/// Experiment-specific knobs; each runner reads only its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Shift `z` for the time-inversion corollary.
    pub shift: Complex64,
    /// Winding modes `n` for the characteristic function.
    pub modes: Vec<i32>,
    /// Scaling factor and largest exponent for the mixing check.
    pub k: f64,
    pub n_max: u32,
    /// Block counts for the variation law.
    pub blocks: Vec<usize>,
    /// Paths for the small-t variance cross-check of the CLT run.
    pub small_t_paths: usize,
    /// Holomorphic functions for the Itô, holomorphic-limit and symmetry runs.
    pub functions: Vec<HoloFn>,
    /// Functions on the circle for the Haar-average limit.
    pub circle: Vec<CircleFn>,
    /// Run the negative controls.
    pub controls: bool,
    /// Keep per-path records for JSON Lines output.
    pub per_path: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            shift: Complex64::new(1.0, 1.0),
            modes: vec![0, 1, 2],
            k: 2.0,
            n_max: 30,
            blocks: vec![32, 64, 128, 256],
            small_t_paths: 100_000,
            functions: Vec::new(),
            circle: vec![CircleFn::One, CircleFn::Cos, CircleFn::Cos2],
            controls: true,
            per_path: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub label: String,
    pub h: Hurst,
    pub z0: Complex64,
    pub grid: GridSpec,
    pub n_paths: usize,
    pub seed: SeedSpec,
    pub checkpoints: Vec<f64>,
    /// Overrides the runner's main tolerance.
    pub tolerance: Option<f64>,
    pub guard_eps: f64,
    pub params: Params,
}

/// `10^{1}, 10^{1.5}, …, 10^{4}`.
pub fn log_checkpoints() -> Vec<f64> {
    (0..=6).map(|j| 10f64.powf(1.0 + 0.5 * j as f64)).collect()
}

fn ergodic_grid() -> GridSpec {
    GridSpec::Geometric {
        t_min: 1e-3,
        t_max: 1e4,
        per_decade: 48,
        origin: true,
    }
}

impl ExperimentConfig {
    /// Documented defaults for `experiment` at Hurst index `h`.
    pub fn defaults(experiment: Experiment, h: Hurst) -> Self {
        use Experiment::*;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let unit = GridSpec::Uniform { n: 1 << 14, t_max: 1.0 };
        let mut params = Params::default();
        let (z0, grid, n_paths, checkpoints) = match experiment {
            GeneratorLaw => (zero, GridSpec::Uniform { n: 8, t_max: 2.0 }, 10_000, vec![]),
            ItoCheck => {
                params.functions = vec![HoloFn::Z, HoloFn::Z2, HoloFn::Exp];
                (one, unit, 100, vec![1.0])
            }
            GradientIto => (one, GridSpec::Uniform { n: 1024, t_max: 1.0 }, 10_000, vec![0.5, 1.0]),
            SkewCheck => (one, unit, 100, vec![1.0]),
            ErgodicRadial | ErgodicAngular | ErgodicClock => (one, ergodic_grid(), 500, log_checkpoints()),
            Prop20 => {
                params.functions = vec![HoloFn::Z, HoloFn::ZPlusZ2, HoloFn::Z2];
                (one, ergodic_grid(), 500, log_checkpoints())
            }
            ErgodicCircle => (zero, ergodic_grid(), 500, log_checkpoints()),
            Corollary19 => (
                zero,
                GridSpec::Geometric {
                    t_min: 10.0,
                    t_max: 1e4,
                    per_decade: 2,
                    origin: true,
                },
                500,
                log_checkpoints(),
            ),
            Variation => (one, unit, 500, vec![1.0]),
            WindingCf => (one, GridSpec::Uniform { n: 20_480, t_max: 10.0 }, 4000, vec![1.0, 10.0]),
            Clt => (
                zero,
                GridSpec::Geometric {
                    t_min: 1.0,
                    t_max: 1e4,
                    per_decade: 100,
                    origin: false,
                },
                2000,
                vec![1e3, 1e4],
            ),
            UniformAngle => (zero, GridSpec::Uniform { n: 256, t_max: 1.0 }, 10_000, vec![1.0]),
            Mixing => (zero, GridSpec::Uniform { n: 8, t_max: 1.0 }, 10_000, vec![]),
            Symmetry => {
                params.functions = vec![HoloFn::Z, HoloFn::Z2, HoloFn::Z3];
                (one, GridSpec::Uniform { n: 1, t_max: 1.0 }, 100_000, vec![1.0])
            }
        };
        Self {
            experiment,
            label: experiment.name().to_string(),
            h,
            z0,
            grid,
            n_paths,
            seed: SeedSpec::new(0, 0),
            checkpoints,
            tolerance: None,
            guard_eps: DEFAULT_GUARD_EPS,
            params,
        }
    }

    pub fn with_seed(mut self, master: u64) -> Self {
        self.seed = SeedSpec::new(master, 0);
        self
    }

    pub fn with_paths(mut self, n: usize) -> Self {
        self.n_paths = n;
        self
    }

    /// Checks the invariants a runner relies on; errors name the field.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Domain(format!("{name}: {msg}")));
        if self.experiment != Experiment::GeneratorLaw && !self.h.is_transient() {
            return field("h", format!("{} needs H > 1/2, got {}", self.experiment, self.h));
        }
        if self.n_paths < MIN_PATHS {
            return field("paths", format!("need at least {MIN_PATHS} paths, got {}", self.n_paths));
        }
        if !(self.guard_eps > 0.0 && self.guard_eps < 1.0) {
            return field("guard_eps", format!("must lie in (0, 1), got {}", self.guard_eps));
        }
        if let Some(tol) = self.tolerance {
            if !(tol >= 0.0) || !tol.is_finite() {
                return field("tolerance", format!("must be finite and nonnegative, got {tol}"));
            }
        }
        if !(self.z0.re.is_finite() && self.z0.im.is_finite()) {
            return field("z0", "must be finite".into());
        }
        let zero = self.z0 == Complex64::new(0.0, 0.0);
        if self.experiment.needs_nonzero_start() && zero {
            return field("z0", format!("{} needs z0 ≠ 0", self.experiment));
        }
        if self.experiment.needs_zero_start() && !zero {
            return field("z0", format!("{} needs z0 = 0", self.experiment));
        }
        let grid = self.grid.build().map_err(|e| Error::Domain(format!("grid: {e}")))?;
        for &t in &self.checkpoints {
            if grid.index_of(t).is_none() {
                return field("checkpoints", format!("{t} is not a point of the grid"));
            }
        }
        match self.experiment {
            Experiment::Variation => {
                if self.params.blocks.is_empty() {
                    return field("blocks", "need at least one block count".into());
                }
            }
            Experiment::Mixing => {
                if !(self.params.k > 1.0) {
                    return field("k", format!("must exceed 1, got {}", self.params.k));
                }
            }
            Experiment::Clt => {
                if self.checkpoints.iter().any(|&t| t <= 1.0) || grid.index_of(1.0).is_none() {
                    return field("checkpoints", "the winding functional starts at t = 1".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h75() -> Hurst {
        Hurst::new(0.75).unwrap()
    }

    #[test]
    fn defaults_validate() {
        for e in Experiment::ALL {
            let c = ExperimentConfig::defaults(e, h75());
            c.validate().unwrap_or_else(|err| panic!("{e}: {err}"));
        }
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            let json = serde_json::to_string(&e).unwrap();
            assert_eq!(json, format!("\"{}\"", e.name()));
        }
        assert!("ergodic".parse::<Experiment>().is_err());
    }

    #[test]
    fn geometric_grid_hits_checkpoints() {
        let g = ergodic_grid().build().unwrap();
        assert!(g.starts_at_zero());
        for t in log_checkpoints() {
            assert!(g.index_of(t).is_some(), "{t}");
        }
        assert!(g.index_of(1.0).is_some());
        assert_eq!(g.len(), 7 * 48 + 2);
    }

    #[test]
    fn checkpoint_off_grid_rejected() {
        let mut c = ExperimentConfig::defaults(Experiment::ErgodicRadial, h75());
        c.checkpoints.push(12.345);
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("checkpoints"), "{msg}");
    }

    #[test]
    fn start_point_preconditions() {
        let mut c = ExperimentConfig::defaults(Experiment::ErgodicRadial, h75());
        c.z0 = Complex64::new(0.0, 0.0);
        assert!(c.validate().unwrap_err().to_string().contains("z0"));
        let mut c = ExperimentConfig::defaults(Experiment::Clt, h75());
        c.z0 = Complex64::new(1.0, 0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn too_few_paths() {
        let c = ExperimentConfig::defaults(Experiment::ErgodicRadial, h75()).with_paths(99);
        assert!(c.validate().unwrap_err().to_string().contains("paths"));
    }

    #[test]
    fn recurrent_regime_rejected() {
        let c = ExperimentConfig::defaults(Experiment::ErgodicRadial, Hurst::new(0.4).unwrap());
        assert!(c.validate().unwrap_err().to_string().contains("h"));
    }
}
