//! One module per subcommand, plus the shared plumbing: dispatching a
//! validated config to its command, building grids/maps/initial data from
//! config keys, and collecting headline metrics for sweep aggregation.

pub mod certify;
pub mod converge;
pub mod evolve;
pub mod exterior;
pub mod harmonic;
pub mod resolve;
pub mod sweep;

use crate::artifacts::{self, Metrics};
use crate::config::{CommandKind, FlowChoice, RunConfig};
use std::path::Path;
use std::sync::Arc;
use wavemap_core::harmonic::{solve_q, SolveSettings};
use wavemap_core::model::make_grid;
use wavemap_core::{
    Error, FieldState, FlowSpec, Form, HarmonicMap, ModelParams, Monitors, RadialGrid, Result,
};

/// Default initial-data bump (amplitude, center, width in x = arcsinh r).
pub const DEFAULT_BUMP_AMP: f64 = 0.01;
pub const DEFAULT_BUMP_CENTER: f64 = 2.0;
pub const DEFAULT_BUMP_WIDTH: f64 = 0.5;

/// Run one validated config end to end: create the output directory,
/// dispatch, write the manifest. Returns the headline metrics.
pub fn run_config(cfg: &RunConfig) -> Result<Metrics> {
    cfg.validate()?;
    let dir = cfg.resolved_output_dir();
    artifacts::prepare_dir(&dir)?;
    let outcome = match cfg.command {
        CommandKind::Harmonic => harmonic::run(cfg, &dir)?,
        CommandKind::Evolve => evolve::run(cfg, &dir)?,
        CommandKind::Resolve => resolve::run(cfg, &dir)?,
        CommandKind::Exterior => exterior::run(cfg, &dir)?,
        CommandKind::Certify => certify::run(cfg, &dir)?,
        CommandKind::Converge => converge::run(cfg, &dir)?,
    };
    artifacts::write_manifest(&dir, cfg, &outcome)?;
    Ok(outcome.metrics)
}

pub(crate) fn params(cfg: &RunConfig) -> Result<ModelParams> {
    ModelParams::new(cfg.model.ell, cfg.model.n)
}

pub(crate) fn grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_grid(cfg.grid.x, cfg.grid.n)?))
}

pub(crate) fn solve_settings(cfg: &RunConfig) -> SolveSettings {
    let mut s = SolveSettings::default();
    if let Some(v) = cfg.options.tol_b {
        s.tol_b = v;
    }
    if let Some(v) = cfg.options.x_end {
        s.x_end = v;
    }
    if let Some(v) = cfg.options.dx_ode {
        s.dx_ode = v;
    }
    s
}

pub(crate) fn solve_map(cfg: &RunConfig, grid: &Arc<RadialGrid>) -> Result<Arc<HarmonicMap>> {
    Ok(Arc::new(solve_q(grid, params(cfg)?, &solve_settings(cfg))?))
}

/// Gaussian bump samples amp·exp(−((x − center)/width)²) over node range
/// [i0, n).
pub(crate) fn bump_samples(
    grid: &RadialGrid,
    i0: usize,
    amp: f64,
    center: f64,
    width: f64,
) -> Vec<f64> {
    grid.x()[i0..]
        .iter()
        .map(|&x| amp * (-((x - center) / width).powi(2)).exp())
        .collect()
}

pub(crate) struct BumpSpec {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
    pub velocity_amp: f64,
}

pub(crate) fn bump_spec(cfg: &RunConfig) -> Result<BumpSpec> {
    let spec = BumpSpec {
        amp: cfg.options.bump_amp.unwrap_or(DEFAULT_BUMP_AMP),
        center: cfg.options.bump_center.unwrap_or(DEFAULT_BUMP_CENTER),
        width: cfg.options.bump_width.unwrap_or(DEFAULT_BUMP_WIDTH),
        velocity_amp: cfg.options.bump_velocity_amp.unwrap_or(0.0),
    };
    if !(spec.width > 0.0 && spec.width.is_finite())
        || !spec.amp.is_finite()
        || !spec.center.is_finite()
        || !spec.velocity_amp.is_finite()
    {
        return Err(Error::InvalidArgument(
            "bump parameters must be finite with width > 0".into(),
        ));
    }
    Ok(spec)
}

/// The flow a config drives together with matching initial data (the
/// configured bump, superposed on the harmonic map where the flow is
/// Q-relative). Also returns the map when one was needed.
pub(crate) fn build_flow(
    cfg: &RunConfig,
) -> Result<(FlowSpec, FieldState, Arc<RadialGrid>, Option<Arc<HarmonicMap>>)> {
    let choice = cfg.options.flow.unwrap_or(FlowChoice::Psi);
    let grid = grid(cfg)?;
    let p = params(cfg)?;
    let bump = bump_spec(cfg)?;
    let full_f = bump_samples(&grid, 0, bump.amp, bump.center, bump.width);
    let full_g = bump_samples(&grid, 0, bump.velocity_amp, bump.center, bump.width);

    let (mut spec, initial, map) = match choice {
        FlowChoice::Psi => {
            let map = solve_map(cfg, &grid)?;
            let f: Vec<f64> = map.q().iter().zip(&full_f).map(|(q, b)| q + b).collect();
            let st = FieldState::full(grid.clone(), p, Form::Psi, f, full_g, 0.0)?;
            (FlowSpec::psi_nonlinear(map.clone()), st, Some(map))
        }
        FlowChoice::U => {
            let map = solve_map(cfg, &grid)?;
            let st = FieldState::full(grid.clone(), p, Form::U, full_f, full_g, 0.0)?;
            (FlowSpec::u_nonlinear(map.clone()), st, Some(map))
        }
        FlowChoice::Linearized => {
            let map = solve_map(cfg, &grid)?;
            let st = FieldState::full(grid.clone(), p, Form::Linear, full_f, full_g, 0.0)?;
            (FlowSpec::linearized(map.clone()), st, Some(map))
        }
        FlowChoice::FreeWormhole => {
            let st = FieldState::full(grid.clone(), p, Form::U, full_f, full_g, 0.0)?;
            (FlowSpec::free_wormhole(p), st, None)
        }
        FlowChoice::FreeFlat => {
            let dim = cfg.options.flat_dim.unwrap_or(p.dim());
            let r_inner = cfg.options.inner_radius.unwrap_or(0.0);
            let st = flat_bump_state(&grid, p, dim, r_inner, &bump)?;
            (FlowSpec::free_flat(p, dim, r_inner)?, st, None)
        }
    };

    if cfg.options.sponge.unwrap_or(false) {
        let mut sp = wavemap_core::SpongeSpec::default();
        if let Some(v) = cfg.options.sponge_fraction {
            sp.fraction = v;
        }
        if let Some(v) = cfg.options.sponge_strength {
            sp.strength = v;
        }
        spec = spec.with_sponge(sp)?;
    }
    Ok((spec, initial, grid, map))
}

/// Flat-free bump: the same gaussian, sampled on the covered node range of
/// a half-line state.
pub(crate) fn flat_bump_state(
    grid: &Arc<RadialGrid>,
    p: ModelParams,
    dim: u32,
    r_inner: f64,
    bump: &BumpSpec,
) -> Result<FieldState> {
    let i0 = grid
        .first_at_least(r_inner.max(0.0))
        .ok_or_else(|| Error::InvalidArgument("inner radius beyond the grid".into()))?;
    let f = bump_samples(grid, i0, bump.amp, bump.center, bump.width);
    let g = bump_samples(grid, i0, bump.velocity_amp, bump.center, bump.width);
    FieldState::flat(grid.clone(), p, dim, r_inner, f, g, 0.0)
}

pub(crate) fn monitors_from(cfg: &RunConfig) -> Monitors {
    Monitors {
        energy_every: cfg.options.energy_every.unwrap_or(16),
        snapshot_times: cfg.options.snapshot_times.clone().unwrap_or_default(),
    }
}

/// Run an engine honoring the optional Courant-factor key.
pub(crate) fn run_engine(
    engine: &mut wavemap_core::Engine,
    initial: &FieldState,
    duration: f64,
    cfg: &RunConfig,
    monitors: &Monitors,
) -> Result<wavemap_core::EvolutionLog> {
    match cfg.options.cfl {
        Some(c) => engine.run_with_cfl(initial, duration, c, monitors),
        None => engine.run(initial, duration, monitors),
    }
}

/// Relative drift of a recorded energy series: max |E(t) − E(0)| scaled by
/// max(|E(0)|, smallest positive normal) so zero-energy runs stay finite.
pub(crate) fn energy_drift(energy: &[wavemap_core::EnergyReport]) -> f64 {
    let Some(first) = energy.first() else { return 0.0 };
    let e0 = first.total;
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    energy.iter().map(|e| (e.total - e0).abs()).fold(0.0, f64::max) / scale
}

pub(crate) fn required_duration(cfg: &RunConfig, default: f64) -> Result<f64> {
    let t = cfg.options.t.unwrap_or(default);
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("T must be positive and finite, got {t}")));
    }
    Ok(t)
}

/// Save a snapshot collection as numbered state files, returning the names.
pub(crate) fn save_snapshots(dir: &Path, log: &wavemap_core::EvolutionLog, plots: bool) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (k, snap) in log.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.json");
        wavemap_core::model::save_state(snap, &dir.join(&name), wavemap_core::model::DataFormat::Csv)?;
        if plots {
            artifacts::write_plot_table(&dir.join(format!("snapshot_{k:03}.dat")), snap)?;
        }
        names.push(name);
    }
    Ok(names)
}

/// The guard used everywhere a command needs a key with no sensible default.
pub(crate) fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("config key options.{key} is required for this command")))
}
