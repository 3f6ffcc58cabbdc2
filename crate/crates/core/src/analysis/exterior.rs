//! Flat-space conjugation of the flattened field and exterior energies.
//!
//! On `r > 0` the substitution `u_e = (⟨r⟩/r)^{(d−1)/2} u` turns the
//! flattened-field equation into a radial wave equation on flat `d`-space
//! with a short-range potential and conjugated nonlinearities:
//!
//! ```text
//! ∂_tt u_e − ∂_rr u_e − ((d−1)/r) ∂_r u_e + V_e u_e = F_e(r, u_e) + G_e(r, u_e),
//! V_e = V − ((d−1)(d−4)/2) r^{−2}⟨r⟩^{−2} + ((d−1)(d−5)/4) r^{−2}⟨r⟩^{−4},
//! F_e(r, u_e) = φ F(r, φ^{−1} u_e),  G_e(r, u_e) = φ G(r, φ^{−1} u_e),
//! φ = (⟨r⟩/r)^{(d−1)/2}.
//! ```
//!
//! The map `u ↦ u_e` is an exact isometry of the `L²` pieces
//! (`φ² r^{d−1} = ⟨r⟩^{d−1}` pointwise), which is what lets flat-space
//! exterior-energy machinery act on wormhole data.  This module provides the
//! conjugation itself, the decay envelopes of the conjugated coefficients
//! (`|V_e| ≲ r^{−4}`, `|F_e| ≲ r^{−3} u_e²`, `|G_e| ≲ r^{d−5} |u_e|³`), and
//! exterior energies over the moving windows `{|r| ≥ R + |t|}`.

use crate::error::Error;
use crate::harmonic::{potential_v_at, HarmonicMap};
use crate::model::{norm_window, FieldState, Form, Measure, ModelParams, Window};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Conformal factor `(⟨r⟩/r)^{(d−1)/2}` relating the flattened field to its
/// flat-space twin; defined for `r > 0` and tending to 1 in the far field.
pub fn ue_factor(params: ModelParams, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "the flat conjugation lives on r > 0, got r = {r}"
        )));
    }
    // (d − 1)/2 = ℓ + 1 is an integer, so the factor is a plain power.
    Ok((f64::hypot(1.0, r) / r).powi(params.ell() as i32 + 1))
}

/// Conjugate a full-line flattened state to its flat exterior form on
/// `r > 0`: `u_e = (⟨r⟩/r)^{(d−1)/2} u`, applied to both field and velocity.
pub fn u_to_ue(state: &FieldState) -> Result<FieldState> {
    if state.form() != Form::U {
        return Err(Error::FormMismatch {
            expected: "a flattened full-line state".into(),
            got: state.form().to_string(),
        });
    }
    let grid = state.grid();
    let first = grid.center() + 1;
    let ell1 = state.params().ell() as i32 + 1;
    let mut f = Vec::with_capacity(grid.len() - first);
    let mut g = Vec::with_capacity(grid.len() - first);
    for i in first..grid.len() {
        let fac = (grid.jacobian()[i] / grid.r()[i]).powi(ell1);
        f.push(fac * state.f()[i]);
        g.push(fac * state.g()[i]);
    }
    FieldState::exterior(grid.clone(), state.params(), f, g, state.time())
}

/// Conjugation shift `V_e − V` produced by moving the wormhole Laplacian to
/// the flat one: `−((d−1)(d−4)/2) r^{−2}⟨r⟩^{−2} + ((d−1)(d−5)/4) r^{−2}⟨r⟩^{−4}`.
fn conjugation_shift(d: f64, r: f64) -> f64 {
    let c2 = 1.0 + r * r;
    -((d - 1.0) * (d - 4.0) / 2.0) / (r * r * c2)
        + ((d - 1.0) * (d - 5.0) / 4.0) / (r * r * c2 * c2)
}

/// Conjugated coefficient fields of a harmonic map on the exterior nodes
/// `r > 0`, with their decay envelopes and fitted far-field bound constants.
#[derive(Debug, Clone)]
pub struct ExteriorCoefficients {
    map: Arc<HarmonicMap>,
    offset: usize,
    factor: Vec<f64>,
    v_e: Vec<f64>,
    v_abs: Vec<f64>,
    f_env: Vec<f64>,
    g_env: Vec<f64>,
    f_env_base: Vec<f64>,
    g_env_base: Vec<f64>,
    /// Fitted constant in `|V_e| ≤ C r^{−4}` over `r ≥ 1`.
    pub v_e_bound: f64,
    /// Fitted constant in `sup_u |F_e(r, u)|/u² ≤ C r^{−3}` over `r ≥ 1`.
    pub f_e_bound: f64,
    /// Fitted constant in `sup_u |G_e(r, u)|/|u|³ ≤ C r^{d−5}` over `r ≥ 1`.
    pub g_e_bound: f64,
}

/// Evaluate the conjugated potential and nonlinearity envelopes of `map` on
/// its exterior nodes.
pub fn exterior_coefficients(map: &Arc<HarmonicMap>) -> ExteriorCoefficients {
    let grid = map.grid();
    let params = map.params();
    let n = grid.len();
    let offset = grid.center() + 1;
    let ell = params.ell() as i32;
    let lam = params.lam();
    let dd = params.dim() as f64;

    let mut factor = Vec::with_capacity(n - offset);
    let mut v_e = Vec::with_capacity(n - offset);
    let mut v_abs = Vec::with_capacity(n - offset);
    let mut f_env = Vec::with_capacity(n - offset);
    let mut g_env = Vec::with_capacity(n - offset);
    let mut f_env_base = Vec::with_capacity(n - offset);
    let mut g_env_base = Vec::with_capacity(n - offset);
    let (mut vb, mut fb, mut gb) = (0.0f64, 0.0f64, 0.0f64);
    for i in offset..n {
        let r = grid.r()[i];
        let c = grid.jacobian()[i];
        let fac = (c / r).powi(ell + 1);
        let theta = map.two_q_principal(i);
        let v = potential_v_at(map, i);
        let ve = v + conjugation_shift(dd, r);
        // Envelopes: the amplitude suprema sup_u |F|/u² and sup_u |G|/|u|³
        // are attained in the small-amplitude limit (sin²a ≤ a² and
        // |x − sin x| ≤ |x|³/6 are saturated at 0).
        let fe_base = lam * c.powi(ell - 2) * theta.sin().abs();
        let ge_base = 2.0 * lam / 3.0 * c.powi(2 * ell - 2) * theta.cos().abs();
        let fe = fe_base / fac;
        let ge = ge_base / (fac * fac);
        if r >= 1.0 {
            vb = vb.max(ve.abs() * r.powi(4));
            fb = fb.max(fe * r.powi(3));
            gb = gb.max(ge * r.powi(5 - params.dim() as i32));
        }
        factor.push(fac);
        v_e.push(ve);
        v_abs.push(v.abs());
        f_env.push(fe);
        g_env.push(ge);
        f_env_base.push(fe_base);
        g_env_base.push(ge_base);
    }
    ExteriorCoefficients {
        map: map.clone(),
        offset,
        factor,
        v_e,
        v_abs,
        f_env,
        g_env,
        f_env_base,
        g_env_base,
        v_e_bound: vb,
        f_e_bound: fb,
        g_e_bound: gb,
    }
}

impl ExteriorCoefficients {
    /// First grid node covered (the first node with `r > 0`).
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Radii of the exterior nodes.
    pub fn radii(&self) -> &[f64] {
        &self.map.grid().r()[self.offset..]
    }

    /// Conformal factor `(⟨r⟩/r)^{(d−1)/2}` per exterior node.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Conjugated potential `V_e` per exterior node.
    pub fn v_e(&self) -> &[f64] {
        &self.v_e
    }

    /// `|V|` per exterior node (the un-conjugated potential's envelope).
    pub fn v_abs(&self) -> &[f64] {
        &self.v_abs
    }

    /// `sup_u |F_e(r, u)| / u²` per exterior node.
    pub fn f_envelope(&self) -> &[f64] {
        &self.f_env
    }

    /// `sup_u |G_e(r, u)| / |u|³` per exterior node.
    pub fn g_envelope(&self) -> &[f64] {
        &self.g_env
    }

    /// `sup_u |F(r, u)| / u²` per exterior node (un-conjugated).
    pub fn f_envelope_base(&self) -> &[f64] {
        &self.f_env_base
    }

    /// `sup_u |G(r, u)| / |u|³` per exterior node (un-conjugated).
    pub fn g_envelope_base(&self) -> &[f64] {
        &self.g_env_base
    }

    /// `F_e(r_i, u_e)`: the conjugated quadratic-type nonlinearity at grid
    /// node `i ≥ offset`.
    pub fn f_e_at(&self, i: usize, u_e: f64) -> f64 {
        let map = &self.map;
        let lam = map.params().lam();
        let ell = map.params().ell() as i32;
        let c = map.grid().jacobian()[i];
        let fac = self.factor[i - self.offset];
        let a = c.powi(ell) * (u_e / fac);
        let sa = a.sin();
        fac * lam / c.powi(ell + 2) * sa * sa * map.two_q_principal(i).sin()
    }

    /// `G_e(r_i, u_e)`: the conjugated cubic-type nonlinearity at grid node
    /// `i ≥ offset`.
    pub fn g_e_at(&self, i: usize, u_e: f64) -> f64 {
        let map = &self.map;
        let lam = map.params().lam();
        let ell = map.params().ell() as i32;
        let c = map.grid().jacobian()[i];
        let fac = self.factor[i - self.offset];
        let a = c.powi(ell) * (u_e / fac);
        fac * lam / c.powi(ell + 2)
            * 0.5
            * crate::harmonic::coefficients::x_minus_sin(2.0 * a)
            * map.two_q_principal(i).cos()
    }
}

/// Squared energy over a moving exterior window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindowEnergy {
    /// Squared norm of the state over `{|r| ≥ radius + t_abs}` in its
    /// natural measure.
    pub value: f64,
    /// The window lies entirely beyond the sampled grid; `value` is 0.
    pub empty_window: bool,
}

/// Energy of `state` outside the moving cone window `{|r| ≥ radius + t_abs}`.
///
/// Returns zero with `empty_window` set (rather than an error) when the
/// window has moved past the grid edge.
pub fn exterior_energy(state: &FieldState, radius: f64, t_abs: f64) -> Result<WindowEnergy> {
    if !(radius.is_finite() && radius >= 0.0 && t_abs.is_finite() && t_abs >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "exterior window needs radius ≥ 0 and |t| ≥ 0, got {radius} and {t_abs}"
        )));
    }
    let nv = norm_window(
        state,
        Measure::natural(state),
        Window::BothTails(radius + t_abs),
    );
    Ok(WindowEnergy {
        value: nv.value * nv.value,
        empty_window: nv.empty_window,
    })
}
