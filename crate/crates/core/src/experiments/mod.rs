//! Reproducible Monte Carlo runners.
//!
//! Each runner is a pure function of its [`ExperimentConfig`]: path `i` is
//! drawn from `seed.child(i)` (runners with two independent samples use
//! `seed.child(0)` and `seed.child(1)` as sub-roots), and per-path results are
//! merged in index order, so the output does not depend on the number of
//! worker threads.

mod config;
mod ergodic;
mod harness;
mod ito;
mod laws;
mod windings;

pub use config::{log_checkpoints, CircleFn, Experiment, ExperimentConfig, GridSpec, HoloFn, Params, MIN_PATHS};
pub use ergodic::{
    run_circle_average, run_corollary19, run_ergodic_angular, run_ergodic_clock, run_ergodic_radial, run_prop20,
    run_variation,
};
pub use harness::{par_map, with_workers, CheckpointStat, ExperimentOutput, PathRecord, Series};
pub use ito::{ito_residual, run_gradient_ito, run_ito_checks, run_skew_check, ROUND_OFF_FLOOR};
pub use laws::{run_generator_law, run_mixing, run_symmetry, run_uniform_angle};
pub use windings::{run_clt, run_winding_cf, SMALL_T};

use crate::error::Result;

/// Validates `cfg` and runs its experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::GeneratorLaw => run_generator_law(cfg),
        Experiment::ItoCheck => run_ito_checks(cfg),
        Experiment::GradientIto => run_gradient_ito(cfg),
        Experiment::SkewCheck => run_skew_check(cfg),
        Experiment::ErgodicRadial => run_ergodic_radial(cfg),
        Experiment::ErgodicAngular => run_ergodic_angular(cfg),
        Experiment::ErgodicClock => run_ergodic_clock(cfg),
        Experiment::ErgodicCircle => run_circle_average(cfg),
        Experiment::Prop20 => run_prop20(cfg),
        Experiment::Corollary19 => run_corollary19(cfg),
        Experiment::Variation => run_variation(cfg),
        Experiment::WindingCf => run_winding_cf(cfg),
        Experiment::Clt => run_clt(cfg),
        Experiment::UniformAngle => run_uniform_angle(cfg),
        Experiment::Mixing => run_mixing(cfg),
        Experiment::Symmetry => run_symmetry(cfg),
    }
}
