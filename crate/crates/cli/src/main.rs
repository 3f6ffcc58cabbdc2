//! Batch front door for the wave-map laboratory: six run commands plus a
//! parallel sweep, all driven by one config file per run (TOML or JSON)
//! whose keys the command-line flags mirror and override.
//!
//! Exit codes: 0 success, 2 validation error (bad config/arguments, nothing
//! written), 3 numerical failure (a computation started and died).

mod artifacts;
mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{CommandKind, FlowChoice, RunConfig};
use std::path::PathBuf;
use wavemap_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "wavemap",
    version,
    about = "Equivariant wave maps on a wormhole: static maps, evolutions, and exterior-energy analysis"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the static harmonic map Q_{ell,n} by shooting
    Harmonic(RunArgs),
    /// Evolve configured bump data under one of the five flows
    Evolve(RunArgs),
    /// Perturb Q, evolve, and run the radiation-extraction diagnostic
    Resolve(RunArgs),
    /// Envelope tables and the static-tail plane projection
    Exterior(RunArgs),
    /// Certify the exterior energy lower bound on free flat data
    Certify(RunArgs),
    /// Measured convergence order under grid doubling
    Converge(RunArgs),
    /// Run many config files in parallel and aggregate their metrics
    Sweep(SweepArgs),
}

/// Flags shared by every run command; each mirrors a config key and
/// overrides the config file when both are given.
#[derive(Args)]
struct RunArgs {
    /// Config file (.toml or .json)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Equivariance class ℓ ≥ 1
    #[arg(long)]
    ell: Option<u32>,
    /// Map degree n ≥ 0
    #[arg(long = "n")]
    n: Option<u32>,
    /// Grid half-width X in x = arcsinh r
    #[arg(long = "grid-x")]
    grid_x: Option<f64>,
    /// Grid points (odd)
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Courant factor in (0, 0.8]
    #[arg(long)]
    cfl: Option<f64>,
    /// Evolution horizon / certification time
    #[arg(long = "T")]
    t: Option<f64>,
    /// Output directory (or set config output_dir / WAVEMAP_OUTPUT_ROOT)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized sweeps
    #[arg(long)]
    seed: Option<u64>,
    /// Flow: psi | u | linearized | free_wormhole | free_flat
    #[arg(long)]
    flow: Option<FlowChoice>,
    /// Projection / certification radius R
    #[arg(long)]
    radius: Option<f64>,
    /// Flat dimension d (odd ≥ 3)
    #[arg(long = "flat-dim")]
    flat_dim: Option<u32>,
    /// Inner Dirichlet radius for the flat half-line
    #[arg(long = "inner-radius")]
    inner_radius: Option<f64>,
    /// Randomized certification trials
    #[arg(long)]
    trials: Option<usize>,
    /// Grid-doubling levels for converge
    #[arg(long)]
    levels: Option<usize>,
    /// Also write gnuplot-ready .dat tables
    #[arg(long = "plot-files")]
    plot_files: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory for the aggregate summary
    #[arg(long, default_value = ".")]
    output: PathBuf,
    /// Config files, one per run
    configs: Vec<PathBuf>,
}

fn merged_config(kind: CommandKind, args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.command != kind {
                return Err(Error::InvalidArgument(format!(
                    "config file {} declares command {} but {} was invoked",
                    path.display(),
                    cfg.command,
                    kind
                )));
            }
            cfg
        }
        None => RunConfig {
            command: kind,
            model: Default::default(),
            grid: Default::default(),
            options: Default::default(),
            output_dir: PathBuf::new(),
            seed: 0,
        },
    };
    if let Some(v) = args.ell {
        cfg.model.ell = v;
    }
    if let Some(v) = args.n {
        cfg.model.n = v;
    }
    if let Some(v) = args.grid_x {
        cfg.grid.x = v;
    }
    if let Some(v) = args.grid_n {
        cfg.grid.n = v;
    }
    if let Some(v) = args.cfl {
        cfg.options.cfl = Some(v);
    }
    if let Some(v) = args.t {
        cfg.options.t = Some(v);
    }
    if let Some(v) = &args.output {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.flow {
        cfg.options.flow = Some(v);
    }
    if let Some(v) = args.radius {
        cfg.options.radius = Some(v);
    }
    if let Some(v) = args.flat_dim {
        cfg.options.flat_dim = Some(v);
    }
    if let Some(v) = args.inner_radius {
        cfg.options.inner_radius = Some(v);
    }
    if let Some(v) = args.trials {
        cfg.options.trials = Some(v);
    }
    if let Some(v) = args.levels {
        cfg.options.levels = Some(v);
    }
    if args.plot_files {
        cfg.options.plot_files = Some(true);
    }
    if cfg.output_dir.as_os_str().is_empty() {
        return Err(Error::InvalidArgument(
            "an output directory is required: pass --output or set output_dir in the config".into(),
        ));
    }
    Ok(cfg)
}

fn run_one(kind: CommandKind, args: &RunArgs) -> Result<()> {
    let cfg = merged_config(kind, args)?;
    let metrics = commands::run_config(&cfg)?;
    println!("{} -> {}", cfg.command, cfg.resolved_output_dir().display());
    for (name, value) in metrics {
        println!("  {name} = {value}");
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<i32> {
    let rows = commands::sweep::run(&args.configs, &args.output)?;
    let mut failed = 0usize;
    for row in &rows {
        match &row.outcome {
            Ok(_) => println!("ok      {} ({})", row.config_path.display(), row.command),
            Err(e) => {
                failed += 1;
                eprintln!("failed  {} ({}): {e}", row.config_path.display(), row.command);
            }
        }
    }
    println!(
        "sweep: {} run(s), {} failed; summary at {}",
        rows.len(),
        failed,
        args.output.join("sweep_summary.csv").display()
    );
    Ok(if failed > 0 { 3 } else { 0 })
}

fn main() {
    let cli = Cli::parse();
    let outcome: Result<i32> = match &cli.cmd {
        Cmd::Harmonic(a) => run_one(CommandKind::Harmonic, a).map(|_| 0),
        Cmd::Evolve(a) => run_one(CommandKind::Evolve, a).map(|_| 0),
        Cmd::Resolve(a) => run_one(CommandKind::Resolve, a).map(|_| 0),
        Cmd::Exterior(a) => run_one(CommandKind::Exterior, a).map(|_| 0),
        Cmd::Certify(a) => run_one(CommandKind::Certify, a).map(|_| 0),
        Cmd::Converge(a) => run_one(CommandKind::Converge, a).map(|_| 0),
        Cmd::Sweep(a) => run_sweep(a),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    };
    std::process::exit(code);
}
