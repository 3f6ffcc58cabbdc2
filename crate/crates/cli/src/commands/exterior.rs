//! `exterior`: the exterior-region toolkit for one model. Emits the
//! conjugated potential and the nonlinearity envelopes induced by the
//! harmonic map (with their fitted far-field bounds), and projects the
//! configured bump onto the static power-tail plane P(R) in the matching
//! flat dimension, reporting both coefficient routes.

use crate::artifacts::{json_object, num, write_csv, RunOutcome};
use crate::commands::{bump_spec, flat_bump_state, grid, params, solve_map};
use crate::config::RunConfig;
use serde_json::json;
use std::path::Path;
use wavemap_core::analysis::{exterior_coefficients, project_exterior, projection_constants};
use wavemap_core::{Error, Result};

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let grid = grid(cfg)?;
    let p = params(cfg)?;
    let radius = cfg.options.radius.unwrap_or(1.0);
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }

    // Envelope table from the harmonic map.
    let map = solve_map(cfg, &grid)?;
    let coef = exterior_coefficients(&map);
    let radii = coef.radii();
    write_csv(
        &dir.join("envelopes.csv"),
        "r,v,v_e,f_envelope,g_envelope",
        (0..radii.len()).map(|k| {
            vec![radii[k], coef.v_abs()[k], coef.v_e()[k], coef.f_envelope()[k], coef.g_envelope()[k]]
        }),
    )?;

    // Plane projection of the configured bump in d = flat_dim.
    let dim = cfg.options.flat_dim.unwrap_or(p.dim());
    let basis = projection_constants(dim)?;
    let bump = bump_spec(cfg)?;
    let data = flat_bump_state(&grid, p, dim, cfg.options.inner_radius.unwrap_or(0.0), &bump)?;
    let report = project_exterior(&data, radius)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    std::fs::write(dir.join("projection.json"), text + "\n")?;

    let results = json_object(vec![
        ("flat_dim", json!(dim)),
        ("radius", num(report.r)),
        ("basis", serde_json::to_value(&basis).map_err(Error::from)?),
        ("far_field_bounds", json_object(vec![
            ("potential", num(coef.v_e_bound)),
            ("quadratic_envelope", num(coef.f_e_bound)),
            ("cubic_envelope", num(coef.g_e_bound)),
        ])),
        ("norm_total", num(report.norm_total)),
        ("norm_plane", num(report.norm_pi)),
        ("norm_remainder", num(report.norm_pi_perp)),
        ("route_divergence", num(report.route_divergence)),
        ("gram_condition", num(report.gram_condition)),
        ("tail_fit_flagged", json!(report.tail_flag)),
        ("artifacts", json!(["envelopes.csv", "projection.json"])),
    ]);
    let tolerances = json_object(vec![("envelope_fit_range", json!("r >= 1"))]);
    Ok(RunOutcome {
        results,
        tolerances,
        metrics: vec![
            ("route_divergence".into(), report.route_divergence),
            ("norm_remainder".into(), report.norm_pi_perp),
        ],
    })
}
