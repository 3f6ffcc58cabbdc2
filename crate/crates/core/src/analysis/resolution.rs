//! Soliton-resolution diagnostic for nonlinear evolutions.
//!
//! Large-time solutions of the equivariant flow are expected to settle into
//! a harmonic map plus free radiation plus a remainder that vanishes in the
//! energy space.  This module quantifies that picture for one recorded
//! evolution: at each extraction time `T_m` it reads off the deviation
//! `ψ(T_m) − Q`, propagates it with a *radiation* flow (the linearization
//! about `Q`, or optionally the free wormhole flow acting on the flattened
//! deviation), and tracks
//!
//! ```text
//! δ_m(t) = ‖ψ(t) − Q − φ^{(m)}(t)‖   for t ≥ T_m,
//! ```
//!
//! together with the energy of `ψ − Q` inside a fixed local window
//! `{|r| ≤ A}`.  Resolution shows up as: the local energy drains, and the
//! radiation approximations improve as the extraction time grows
//! (`sup_{t ≥ T_m} δ_m` non-increasing in `m`).

use crate::error::Error;
use crate::evolve::{Engine, EvolutionLog, FlowSpec};
use crate::harmonic::HarmonicMap;
use crate::model::{norm_window, FieldState, Form, Measure, Window};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Default radius of the local-energy window.
pub const DEFAULT_LOCAL_WINDOW: f64 = 5.0;

/// Default extraction times for the radiation approximations.
pub const DEFAULT_EXTRACTION_TIMES: [f64; 3] = [10.0, 20.0, 40.0];

/// Which flow propagates the extracted radiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiationFlow {
    /// Linearized flow about the harmonic map, acting on `ψ − Q` directly.
    Linearized,
    /// Free wormhole flow acting on the flattened deviation
    /// `(ψ − Q)/⟨r⟩^ℓ` (drops the potential as well as the nonlinearity).
    FreeWormhole,
}

/// Outcome of the resolution diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionReport {
    /// Extraction times actually used (each snapped to a snapshot).
    pub extraction_times: Vec<f64>,
    /// One series per extraction time: `(t, δ_m(t))` at every snapshot time
    /// `t ≥ T_m`, where `δ_m` is the energy-space distance between the
    /// evolution and `Q` plus propagated radiation.
    pub delta_series: Vec<Vec<(f64, f64)>>,
    /// `(t, ‖ψ(t) − Q‖²_{|r| ≤ A})` at every snapshot time.
    pub local_energy_series: Vec<(f64, f64)>,
    /// Radius `A` of the local window.
    pub window_radius: f64,
    /// Flow used to propagate the extracted radiation.
    pub radiation_flow: RadiationFlow,
}

/// Run the resolution diagnostic on a recorded nonlinear evolution.
///
/// `log` must carry snapshots of a full-line `ψ` evolution on the grid of
/// `map`; each requested extraction time must match a snapshot time to
/// within one time step.
pub fn resolution_diagnostic(
    log: &EvolutionLog,
    map: &Arc<HarmonicMap>,
    extraction_times: &[f64],
    window_radius: f64,
    flow: RadiationFlow,
) -> Result<ResolutionReport> {
    if log.snapshots.is_empty() {
        return Err(Error::InvalidArgument(
            "resolution diagnostic needs snapshots; record some through the monitors".into(),
        ));
    }
    if extraction_times.is_empty() {
        return Err(Error::InvalidArgument(
            "resolution diagnostic needs at least one extraction time".into(),
        ));
    }
    if !(window_radius.is_finite() && window_radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "local window radius must be positive, got {window_radius}"
        )));
    }
    let grid = map.grid();
    for snap in &log.snapshots {
        if snap.form() != Form::Psi {
            return Err(Error::FormMismatch {
                expected: "full-line psi snapshots".into(),
                got: snap.form().to_string(),
            });
        }
        if !snap.grid().same_layout(grid) {
            return Err(Error::GridMismatch(
                "snapshots and harmonic map live on different grids".into(),
            ));
        }
    }
    let mut snaps: Vec<&FieldState> = log.snapshots.iter().collect();
    snaps.sort_by(|a, b| a.time().total_cmp(&b.time()));

    let n = grid.len();
    let q: Vec<f64> = map.q().to_vec();
    let ell = map.params().ell() as i32;

    // Local energy of the deviation from Q at every snapshot.
    let local_energy_series: Vec<(f64, f64)> = snaps
        .iter()
        .map(|snap| {
            let dev_f: Vec<f64> =
                snap.f().iter().zip(q.iter()).map(|(&a, &b)| a - b).collect();
            let dev = snap.with_samples(dev_f, snap.g().to_vec(), snap.time());
            let nv = norm_window(&dev, Measure::Bracket(2), Window::Interior(window_radius));
            (snap.time(), nv.value * nv.value)
        })
        .collect();

    // Snap each extraction time to the nearest snapshot.
    let match_tol = log.dt.abs().max(1e-9) * 1.001;
    let mut extraction_indices = Vec::with_capacity(extraction_times.len());
    for &t_m in extraction_times {
        if !t_m.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "extraction time must be finite, got {t_m}"
            )));
        }
        let (best, gap) = snaps
            .iter()
            .enumerate()
            .map(|(idx, s)| (idx, (s.time() - t_m).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("snapshots are non-empty");
        if gap > match_tol {
            return Err(Error::InvalidArgument(format!(
                "no snapshot within one step of extraction time {t_m} (closest is {:.6}); \
                 add it to the monitors' snapshot times",
                snaps[best].time()
            )));
        }
        extraction_indices.push(best);
    }

    let spec = match flow {
        RadiationFlow::Linearized => FlowSpec::linearized(map.clone()),
        RadiationFlow::FreeWormhole => FlowSpec::free_wormhole(map.params()),
    };
    let mut engine = Engine::new(spec, grid.clone())?;
    let dt_max = engine.dt_max();

    // Energy-space distance between a psi snapshot and Q + radiation.
    let delta_against = |snap: &FieldState, rad: &FieldState| -> f64 {
        let dev_f: Vec<f64> = (0..n)
            .map(|i| {
                let rad_f = match flow {
                    RadiationFlow::Linearized => rad.f()[i],
                    RadiationFlow::FreeWormhole => {
                        grid.jacobian()[i].powi(ell) * rad.f()[i]
                    }
                };
                snap.f()[i] - q[i] - rad_f
            })
            .collect();
        let dev_g: Vec<f64> = (0..n)
            .map(|i| {
                let rad_g = match flow {
                    RadiationFlow::Linearized => rad.g()[i],
                    RadiationFlow::FreeWormhole => {
                        grid.jacobian()[i].powi(ell) * rad.g()[i]
                    }
                };
                snap.g()[i] - rad_g
            })
            .collect();
        let dev = snap.with_samples(dev_f, dev_g, snap.time());
        norm_window(&dev, Measure::Bracket(2), Window::Full).value
    };

    let mut delta_series = Vec::with_capacity(extraction_indices.len());
    let mut used_times = Vec::with_capacity(extraction_indices.len());
    for &start in &extraction_indices {
        let anchor = snaps[start];
        used_times.push(anchor.time());
        // Radiation data extracted at the anchor snapshot.
        let rad0 = match flow {
            RadiationFlow::Linearized => {
                let f: Vec<f64> =
                    anchor.f().iter().zip(q.iter()).map(|(&a, &b)| a - b).collect();
                FieldState::full(
                    grid.clone(),
                    map.params(),
                    Form::Linear,
                    f,
                    anchor.g().to_vec(),
                    anchor.time(),
                )?
            }
            RadiationFlow::FreeWormhole => {
                let f: Vec<f64> = (0..n)
                    .map(|i| (anchor.f()[i] - q[i]) / grid.jacobian()[i].powi(ell))
                    .collect();
                let g: Vec<f64> =
                    (0..n).map(|i| anchor.g()[i] / grid.jacobian()[i].powi(ell)).collect();
                FieldState::full(grid.clone(), map.params(), Form::U, f, g, anchor.time())?
            }
        };
        let mut series = vec![(anchor.time(), delta_against(anchor, &rad0))];
        let mut rad = rad0;
        for snap in snaps.iter().skip(start + 1) {
            let span = snap.time() - rad.time();
            if span.abs() > 0.0 {
                let steps = (span.abs() / dt_max).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                for _ in 0..steps {
                    rad = engine.step(&rad, dt)?;
                }
            }
            series.push((snap.time(), delta_against(snap, &rad)));
        }
        delta_series.push(series);
    }

    Ok(ResolutionReport {
        extraction_times: used_times,
        delta_series,
        local_energy_series,
        window_radius,
        radiation_flow: flow,
    })
}
