//! `harmonic`: solve the static map Q_{ℓ,n} by shooting and write it as a
//! manifest + sample table, with the residuals a reviewer would check first:
//! the reflection antisymmetry of the stored samples, strict monotonicity,
//! the throat value, and the tail-coefficient plateau drift.

use crate::artifacts::{json_object, num, write_plot_table, RunOutcome};
use crate::commands::{grid, params, solve_settings};
use crate::config::RunConfig;
use serde_json::json;
use std::path::Path;
use wavemap_core::harmonic::{save_map, solve_q, MapTolerances};
use wavemap_core::Result;

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let grid = grid(cfg)?;
    let p = params(cfg)?;
    let settings = solve_settings(cfg);
    let map = solve_q(&grid, p, &settings)?;

    let tolerances = MapTolerances::default();
    save_map(&map, &settings, &tolerances, &dir.join("map.json"))?;
    if cfg.options.plot_files.unwrap_or(false) {
        let st = wavemap_core::FieldState::full(
            grid.clone(),
            p,
            wavemap_core::Form::Psi,
            map.q().to_vec(),
            vec![0.0; grid.len()],
            0.0,
        )?;
        write_plot_table(&dir.join("map.dat"), &st)?;
    }

    let q = map.q();
    let qx = map.qx();
    let bv = p.boundary_value();
    let n = q.len();
    let antisymmetry = (0..n)
        .map(|i| (q[i] + q[n - 1 - i] - bv).abs())
        .fold(0.0, f64::max);
    let min_slope = qx[1..n - 1].iter().copied().fold(f64::INFINITY, f64::min);
    let throat = (q[grid.center()] - 0.5 * bv).abs();

    let results = json_object(vec![
        ("b_star", num(map.b_star())),
        ("alpha", num(map.alpha())),
        ("alpha_plateau_drift", num(map.alpha_drift())),
        (
            "residuals",
            json_object(vec![
                ("antisymmetry_sup", num(antisymmetry)),
                ("min_interior_slope", num(min_slope)),
                ("throat_value_abs", num(throat)),
            ]),
        ),
        ("artifacts", json!(["map.json", "map.csv"])),
    ]);
    let tol = serde_json::to_value(&tolerances).map_err(wavemap_core::Error::from)?;
    let tolerances = json_object(vec![
        ("comparison", tol),
        ("solver", serde_json::to_value(&settings).map_err(wavemap_core::Error::from)?),
    ]);
    Ok(RunOutcome {
        results,
        tolerances,
        metrics: vec![
            ("alpha".into(), map.alpha()),
            ("b_star".into(), map.b_star()),
            ("antisymmetry_sup".into(), antisymmetry),
        ],
    })
}
