//! `evolve`: drive one of the five flows from configured bump data,
//! recording the energy/flux series, optional snapshots, and the final
//! state. The headline metric is the relative energy drift (for the free
//! and closed runs it doubles as a conservation check).

use crate::artifacts::{json_object, num, write_energy_csv, write_plot_table, RunOutcome};
use crate::commands::{build_flow, energy_drift, monitors_from, required_duration, run_engine, save_snapshots};
use crate::config::RunConfig;
use serde_json::json;
use std::path::Path;
use wavemap_core::model::{save_state, DataFormat};
use wavemap_core::{Engine, Result};

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let duration = required_duration(cfg, 10.0)?;
    let (spec, initial, grid, map) = build_flow(cfg)?;
    let mut engine = Engine::new(spec, grid)?;
    let monitors = monitors_from(cfg);
    let log = run_engine(&mut engine, &initial, duration, cfg, &monitors)?;

    write_energy_csv(dir, &log)?;
    let plots = cfg.options.plot_files.unwrap_or(false);
    let snaps = save_snapshots(dir, &log, plots)?;
    save_state(&log.final_state, &dir.join("final_state.json"), DataFormat::Csv)?;
    if plots {
        write_plot_table(&dir.join("final_state.dat"), &log.final_state)?;
    }

    let drift = energy_drift(&log.energy);
    let e0 = log.energy.first().map(|e| e.total).unwrap_or(0.0);
    let e_end = log.energy.last().map(|e| e.total).unwrap_or(0.0);
    let max_flux = log.boundary_flux.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let results = json_object(vec![
        ("flow", json!(cfg.options.flow)),
        ("duration", num(duration)),
        ("dt", num(log.dt)),
        ("cfl", num(log.cfl)),
        ("energy_initial", num(e0)),
        ("energy_final", num(e_end)),
        ("energy_drift_rel", num(drift)),
        ("max_boundary_flux", num(max_flux)),
        ("map_alpha", map.as_ref().map(|m| num(m.alpha())).unwrap_or(json!(null))),
        ("snapshots", json!(snaps)),
        ("artifacts", json!(["energy.csv", "final_state.json", "final_state.csv"])),
    ]);
    let tolerances = json_object(vec![
        ("cfl_max", num(wavemap_core::CFL_MAX)),
        ("boundary_tol", num(1e-8)),
    ]);
    Ok(RunOutcome {
        results,
        tolerances,
        metrics: vec![("energy_drift_rel".into(), drift), ("energy_final".into(), e_end)],
    })
}
