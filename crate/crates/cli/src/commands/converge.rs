//! `converge`: measured convergence order of a flow under grid doubling.
//! The configured grid is refined (N − 1 doubles, X fixed) so nodes nest;
//! successive solutions at the shared nodes give errors e_k whose ratios
//! yield the observed order log2(e_k / e_{k+1}). The scheme is fourth-order
//! in space and time, so the measured order should sit near 4.

use crate::artifacts::{json_object, num, write_csv, RunOutcome};
use crate::commands::{build_flow, required_duration, run_engine};
use crate::config::RunConfig;
use serde_json::json;
use std::path::Path;
use wavemap_core::{Engine, Error, FieldState, Monitors, Result};

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let duration = required_duration(cfg, 5.0)?;
    let levels = cfg.options.levels.unwrap_or(3);
    if !(2..=6).contains(&levels) {
        return Err(Error::InvalidArgument(format!(
            "levels must lie in [2, 6], got {levels}"
        )));
    }

    // Solve every level with the same physical setup, only N changing.
    let mut finals: Vec<FieldState> = Vec::with_capacity(levels);
    let mut dts = Vec::with_capacity(levels);
    let mut ns = Vec::with_capacity(levels);
    for k in 0..levels {
        let mut level_cfg = cfg.clone();
        level_cfg.grid.n = (cfg.grid.n - 1) * (1 << k) + 1;
        let (spec, initial, grid, _) = build_flow(&level_cfg)?;
        let mut engine = Engine::new(spec, grid)?;
        let monitors = Monitors { energy_every: usize::MAX, snapshot_times: vec![] };
        let log = run_engine(&mut engine, &initial, duration, &level_cfg, &monitors)?;
        dts.push(log.dt);
        ns.push(level_cfg.grid.n);
        finals.push(log.final_state);
    }

    // Errors between consecutive levels at the coarse level's nodes (which
    // are every 2^k-th node of level k); measured in the sup norm of the
    // field component.
    let mut errors = Vec::with_capacity(levels - 1);
    for k in 0..levels - 1 {
        let (a, b) = (&finals[k], &finals[k + 1]);
        let mut sup: f64 = 0.0;
        let (fa, fb) = (a.f(), b.f());
        // Covered offsets map coarse node j → fine node 2j when both cover
        // the full line; for wall/origin states the offsets are matched by
        // the shared inner radius.
        let (ga, gb) = (a.grid(), b.grid());
        for (j, va) in fa.iter().enumerate() {
            let i_full = a.offset() + j;
            let x = ga.x()[i_full];
            let i_fine = ((x - gb.x()[0]) / gb.spacing()).round() as usize;
            if let Some(vb) = i_fine.checked_sub(b.offset()).and_then(|idx| fb.get(idx)) {
                sup = sup.max((va - vb).abs());
            }
        }
        errors.push(sup);
    }
    let orders: Vec<f64> = errors
        .windows(2)
        .map(|w| if w[1] > 0.0 { (w[0] / w[1]).log2() } else { f64::NAN })
        .collect();
    let measured_order = orders.last().copied().unwrap_or(f64::NAN);

    write_csv(
        &dir.join("convergence.csv"),
        "n,dt,error_vs_next,order",
        (0..levels).map(|k| {
            vec![
                ns[k] as f64,
                dts[k],
                errors.get(k).copied().unwrap_or(f64::NAN),
                if k >= 1 { orders.get(k - 1).copied().unwrap_or(f64::NAN) } else { f64::NAN },
            ]
        }),
    )?;

    let results = json_object(vec![
        ("flow", json!(cfg.options.flow)),
        ("duration", num(duration)),
        ("levels", json!(levels)),
        ("grid_points", json!(ns)),
        ("errors", json!(errors)),
        ("orders", json!(orders)),
        ("measured_order", num(measured_order)),
        ("artifacts", json!(["convergence.csv"])),
    ]);
    let tolerances = json_object(vec![("expected_order_band", json!([3.5, 4.5]))]);
    Ok(RunOutcome {
        results,
        tolerances,
        metrics: vec![("measured_order".into(), measured_order)],
    })
}
