//! Forward shooting for the static equation and outcome classification.
//!
//! `integrate_static` integrates W'' + tanh x · W' − (ℓ(ℓ+1)/2) sin 2W = 0
//! from the throat with W(0) = nπ/2, W'(0) = b by the classical four-stage
//! Runge–Kutta scheme at a fixed step. The coefficients are smooth and the
//! velocity field grows at most linearly, so fixed-step integration is
//! reproducible and cannot blow up in finite x; non-finite values are still
//! checked and reported defensively.

use crate::model::ModelParams;
use crate::{Error, Result};

/// Trajectory classification margins. A trajectory leaving the band
/// [0, nπ + MARGIN], or turning around below nπ − MARGIN, never reaches nπ:
/// empirically the ODE then runs to a different plateau.
pub const OVERSHOOT_MARGIN: f64 = 0.1;
/// Acceptance distance |Q(x_end) − nπ| for calling a trajectory converged.
pub const CONV_TOL: f64 = 1e-6;

/// One RK4 step of (w, p) ↦ (w', p') for w'' = −tanh(x) p + (λ/2) sin 2w.
#[inline]
pub(crate) fn rk4_step(x: f64, w: f64, p: f64, h: f64, lam_half: f64) -> (f64, f64) {
    let acc = |x: f64, w: f64, p: f64| -x.tanh() * p + lam_half * (2.0 * w).sin();
    let k1w = p;
    let k1p = acc(x, w, p);
    let k2w = p + 0.5 * h * k1p;
    let k2p = acc(x + 0.5 * h, w + 0.5 * h * k1w, p + 0.5 * h * k1p);
    let k3w = p + 0.5 * h * k2p;
    let k3p = acc(x + 0.5 * h, w + 0.5 * h * k2w, p + 0.5 * h * k2p);
    let k4w = p + h * k3p;
    let k4p = acc(x + h, w + h * k3w, p + h * k3p);
    (w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w), p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p))
}

/// A sampled solution of the static equation on [0, x_end].
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: ModelParams,
    b: f64,
    x: Vec<f64>,
    q: Vec<f64>,
    qx: Vec<f64>,
}

impl Trajectory {
    pub fn params(&self) -> ModelParams {
        self.params
    }

    /// Throat slope this trajectory was shot with.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn qx(&self) -> &[f64] {
        &self.qx
    }

    pub fn end_x(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn end_q(&self) -> f64 {
        *self.q.last().unwrap()
    }
}

/// Integrate the static equation from Q(0) = nπ/2, Q'(0) = b over [0, x_end],
/// recording every step. The step is x_end/⌈x_end/dx_ode⌉ ≤ dx_ode.
pub fn integrate_static(
    b: f64,
    params: ModelParams,
    x_end: f64,
    dx_ode: f64,
) -> Result<Trajectory> {
    if !(x_end > 0.0) || !(dx_ode > 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument(
            "integrate_static needs finite b and positive x_end, dx_ode".into(),
        ));
    }
    let steps = (x_end / dx_ode).ceil() as usize;
    let h = x_end / steps as f64;
    let lam_half = 0.5 * params.lam();
    let mut w = 0.5 * params.boundary_value();
    let mut p = b;
    let mut x = Vec::with_capacity(steps + 1);
    let mut q = Vec::with_capacity(steps + 1);
    let mut qx = Vec::with_capacity(steps + 1);
    x.push(0.0);
    q.push(w);
    qx.push(p);
    for k in 0..steps {
        let xk = k as f64 * h;
        let (w1, p1) = rk4_step(xk, w, p, h, lam_half);
        if !w1.is_finite() || !p1.is_finite() {
            return Err(Error::IntegrationFailure { exit_x: xk });
        }
        w = w1;
        p = p1;
        x.push(if k + 1 == steps { x_end } else { (k + 1) as f64 * h });
        q.push(w);
        qx.push(p);
    }
    Ok(Trajectory { params, b, x, q, qx })
}

/// How a shot ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotClass {
    /// Turned around below the target plateau; b was too small.
    Undershoot,
    /// Crossed above nπ + margin; b was too large.
    Overshoot,
    /// Reached x_end within `CONV_TOL` of nπ.
    Converged,
}

/// Classification of a shot: the class and where it was decided.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ShotOutcome {
    pub class: ShotClass,
    /// x at which the classifying event fired (x_end for Converged).
    pub exit_x: f64,
}

/// Classify a forward shot for degree n ≥ 1. Total on trajectories that
/// leave the margin band; trajectories still inside the band at x_end that
/// miss nπ by more than `CONV_TOL` are reported as inconclusive, with the
/// final distance attached so the caller can enlarge x_end.
pub fn classify_shot(traj: &Trajectory) -> Result<ShotOutcome> {
    let params = traj.params();
    if params.degree() == 0 {
        return Err(Error::InvalidArgument("classification needs degree n >= 1".into()));
    }
    let target = params.boundary_value();
    for i in 0..traj.x.len() {
        if traj.q[i] > target + OVERSHOOT_MARGIN {
            return Ok(ShotOutcome { class: ShotClass::Overshoot, exit_x: traj.x[i] });
        }
        if traj.qx[i] <= 0.0 && traj.q[i] < target - OVERSHOOT_MARGIN {
            return Ok(ShotOutcome { class: ShotClass::Undershoot, exit_x: traj.x[i] });
        }
    }
    let dist = traj.end_q() - target;
    if dist.abs() < CONV_TOL {
        Ok(ShotOutcome { class: ShotClass::Converged, exit_x: traj.end_x() })
    } else {
        Err(Error::InconclusiveShot { x_end: traj.end_x(), distance: dist })
    }
}

/// Which side of the critical slope a shot lies on, for bisection. Uses the
/// margin triggers when they fire; otherwise falls back to the sign of
/// Q(x_end) − nπ, which is dominated by the growing mode ~(b − b_*) e^{ℓx}
/// whenever |b − b_*| is more than a few ulps.
pub(crate) fn bisection_side(traj: &Trajectory) -> bool {
    let target = traj.params().boundary_value();
    for i in 0..traj.x.len() {
        if traj.q[i] > target + OVERSHOOT_MARGIN {
            return true; // high side
        }
        if traj.qx[i] <= 0.0 && traj.q[i] < target - OVERSHOOT_MARGIN {
            return false; // low side
        }
    }
    traj.end_q() >= target
}
