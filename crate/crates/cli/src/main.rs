mod config;
mod output;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pfbm_core::constants::sigma_squared;
use pfbm_core::experiments::{run_experiment, with_workers, Experiment, ExperimentConfig, ExperimentOutput};
use pfbm_core::fbm::{complex_fbm, io as path_io, Hurst, SeedSpec, TimeGrid};

use config::{parse_grid, parse_z0, resolve, Overrides, RunFile};
use output::{exit_code, overall, print_output, write_manifest, write_results, ExperimentVerdict, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "pfbm", version, about = "Monte Carlo experiments for planar fractional Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ErgodicKind {
    Radial,
    Angular,
    Clock,
    Circle,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one planar fBm path and write it as CSV (or binary for `.bin`).
    Generate(GenerateArgs),
    /// Print σ²(H) and the agreement of its two quadrature schemes.
    Sigma2 {
        #[arg(long)]
        h: f64,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the experiments named in the config file.
    Run(RunArgs),
    /// Run every experiment.
    All(RunArgs),
    /// Rerun the configurations recorded in a `run.json`.
    Replay {
        manifest: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    GeneratorLaw(RunArgs),
    ItoCheck(RunArgs),
    GradientIto(RunArgs),
    SkewCheck(RunArgs),
    Ergodic {
        #[arg(value_enum)]
        kind: ErgodicKind,
        #[command(flatten)]
        args: RunArgs,
    },
    Prop20(RunArgs),
    Corollary19(RunArgs),
    Variation(RunArgs),
    WindingCf(RunArgs),
    Clt(RunArgs),
    UniformAngle(RunArgs),
    Mixing(RunArgs),
    Symmetry(RunArgs),
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// TOML run file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    /// Starting point as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    z0: Option<String>,
    /// Time grid as a TOML inline table.
    #[arg(long)]
    grid: Option<String>,
    /// Also write per-path JSON Lines.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    h: f64,
    /// Number of rows, the origin included.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    z0: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    use Experiment::*;
    let single = |e: Experiment, a: RunArgs| run_named(Some(&[e]), a);
    match cmd {
        Command::Generate(a) => generate(a).map(|_| 0),
        Command::Sigma2 { h, json } => sigma2(h, json).map(|_| 0),
        Command::Run(a) => run_named(None, a),
        Command::All(a) => run_named(Some(&Experiment::ALL), a),
        Command::Replay { manifest, args } => replay(&manifest, args),
        Command::GeneratorLaw(a) => single(GeneratorLaw, a),
        Command::ItoCheck(a) => single(ItoCheck, a),
        Command::GradientIto(a) => single(GradientIto, a),
        Command::SkewCheck(a) => single(SkewCheck, a),
        Command::Ergodic { kind, args } => single(
            match kind {
                ErgodicKind::Radial => ErgodicRadial,
                ErgodicKind::Angular => ErgodicAngular,
                ErgodicKind::Clock => ErgodicClock,
                ErgodicKind::Circle => ErgodicCircle,
            },
            args,
        ),
        Command::Prop20(a) => single(Prop20, a),
        Command::Corollary19(a) => single(Corollary19, a),
        Command::Variation(a) => single(Variation, a),
        Command::WindingCf(a) => single(WindingCf, a),
        Command::Clt(a) => single(Clt, a),
        Command::UniformAngle(a) => single(UniformAngle, a),
        Command::Mixing(a) => single(Mixing, a),
        Command::Symmetry(a) => single(Symmetry, a),
    }
}

fn overrides(a: &RunArgs) -> Result<Overrides> {
    Ok(Overrides {
        h: a.h,
        seed: a.seed,
        paths: a.paths,
        z0: a.z0.as_deref().map(parse_z0).transpose()?,
        grid: a.grid.as_deref().map(parse_grid).transpose()?,
        per_path: a.json,
    })
}

fn run_named(experiments: Option<&[Experiment]>, a: RunArgs) -> Result<i32> {
    let file = match &a.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    let selected = match experiments {
        Some(e) => e.to_vec(),
        None => {
            if a.config.is_none() {
                bail!("`run` needs --config");
            }
            file.selected()
        }
    };
    if selected.is_empty() {
        bail!("the config selects no experiments");
    }
    let configs = resolve(&file, &selected, &overrides(&a)?)?;
    execute(configs, a.workers.or(file.workers), &a)
}

fn replay(manifest: &Path, a: RunArgs) -> Result<i32> {
    let m = output::RunManifest::load(manifest)?;
    for c in &m.configs {
        c.validate().with_context(|| format!("manifest entry `{}`", c.label))?;
    }
    execute(m.configs, a.workers, &a)
}

fn execute(configs: Vec<ExperimentConfig>, workers: Option<usize>, a: &RunArgs) -> Result<i32> {
    let workers = match workers {
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create output directory {}", a.out.display()))?;
    let start = Instant::now();
    let stdout = io::stdout();
    let mut outputs: Vec<ExperimentOutput> = Vec::with_capacity(configs.len());
    for c in &configs {
        let o = with_workers(Some(workers), || run_experiment(c))?.with_context(|| format!("experiment `{}`", c.label))?;
        if !a.quiet {
            print_output(stdout.lock(), &o)?;
        }
        outputs.push(o);
    }
    let files = write_results(&a.out, &outputs, a.json)?;
    let verdict = overall(&outputs);
    let manifest = RunManifest {
        version: output::VERSION.to_string(),
        command: std::env::args().collect::<Vec<_>>().join(" "),
        workers,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        verdict,
        experiments: outputs
            .iter()
            .map(|o| ExperimentVerdict {
                label: o.label.clone(),
                verdict: o.verdict,
            })
            .collect(),
        files,
        configs,
    };
    write_manifest(&a.out, &manifest)?;
    if !a.quiet {
        println!("overall: {verdict}");
    }
    Ok(exit_code(verdict))
}

fn generate(a: GenerateArgs) -> Result<()> {
    if a.n < 2 {
        bail!("n: need at least 2 rows, got {}", a.n);
    }
    let h = Hurst::new(a.h).map_err(|e| anyhow::anyhow!("h: {e}"))?;
    let z0: Complex64 = parse_z0(&a.z0)?;
    let grid = TimeGrid::uniform(a.n - 1, a.dt).map_err(|e| anyhow::anyhow!("dt: {e}"))?;
    let path = complex_fbm(&grid, h, z0, SeedSpec::new(a.seed, 0))?;
    let file = fs::File::create(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    let w = BufWriter::new(file);
    if a.out.extension().is_some_and(|e| e == "bin") {
        path_io::write_binary(&path, w)?;
    } else {
        path_io::write_csv(&path, w)?;
    }
    Ok(())
}

fn sigma2(h: f64, json: bool) -> Result<()> {
    let h = Hurst::new(h).map_err(|e| anyhow::anyhow!("h: {e}"))?;
    let s = sigma_squared(h)?;
    let mut out = io::stdout().lock();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&s)?)?;
    } else {
        writeln!(out, "sigma2({}) = {:.10}", s.h, s.value)?;
        writeln!(out, "adaptive scheme: {:.12}", s.adaptive)?;
        writeln!(out, "panel scheme:    {:.12}", s.panels)?;
        writeln!(out, "relative gap:    {:.3e}", s.relative_gap)?;
        writeln!(out, "tail below cut:  {:.3e}", s.tail)?;
    }
    Ok(())
}
