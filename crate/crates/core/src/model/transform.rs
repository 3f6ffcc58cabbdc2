//! Change of variables between the wave-map angle ψ and the flattened
//! perturbation u: ψ = Q + ⟨r⟩^ℓ u, ψ_t = ⟨r⟩^ℓ u_t. The flattening absorbs
//! the r^ℓ growth of linear waves so that u behaves like a radial field in
//! d = 2ℓ + 3 dimensions.

use super::{FieldState, Form};
use crate::harmonic::HarmonicMap;
use crate::{Error, Result};

fn check_compat(state: &FieldState, q: &HarmonicMap) -> Result<()> {
    if state.params() != q.params() {
        return Err(Error::InvalidArgument(
            "state and harmonic map disagree on (ell, degree)".into(),
        ));
    }
    if !state.grid().same_layout(q.grid()) {
        return Err(Error::GridMismatch(
            "state and harmonic map live on different grids".into(),
        ));
    }
    Ok(())
}

/// u = ⟨r⟩^{−ℓ}(ψ − Q), u_t = ⟨r⟩^{−ℓ} ψ_t.
pub fn psi_to_u(state: &FieldState, q: &HarmonicMap) -> Result<FieldState> {
    if state.form() != Form::Psi {
        return Err(Error::FormMismatch { expected: "psi".into(), got: state.form().to_string() });
    }
    check_compat(state, q)?;
    let grid = state.grid();
    let ell = state.params().ell() as i32;
    let mut f = Vec::with_capacity(grid.len());
    let mut g = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let w = grid.jacobian()[i].powi(ell);
        f.push((state.f()[i] - q.q()[i]) / w);
        g.push(state.g()[i] / w);
    }
    FieldState::full(grid.clone(), state.params(), Form::U, f, g, state.time())
}

/// ψ = Q + ⟨r⟩^ℓ u, ψ_t = ⟨r⟩^ℓ u_t. Fails if the reconstructed ψ violates
/// its boundary values, i.e. if u had not decayed enough for the ⟨r⟩^ℓ
/// amplification.
pub fn u_to_psi(state: &FieldState, q: &HarmonicMap) -> Result<FieldState> {
    if state.form() != Form::U {
        return Err(Error::FormMismatch { expected: "u".into(), got: state.form().to_string() });
    }
    check_compat(state, q)?;
    let grid = state.grid();
    let ell = state.params().ell() as i32;
    let mut f = Vec::with_capacity(grid.len());
    let mut g = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let w = grid.jacobian()[i].powi(ell);
        f.push(q.q()[i] + w * state.f()[i]);
        g.push(w * state.g()[i]);
    }
    FieldState::full(grid.clone(), state.params(), Form::Psi, f, g, state.time())
}
