//! Conserved energies of the wave-map and flattened flows.

use super::{FieldState, Form, Measure};
use crate::stencil::DiffOp;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Energy split into kinetic (½∫ f_t²), gradient (½∫ f_r²) and potential
/// parts, each in the measure recorded alongside. `total` is their exact sum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub kinetic: f64,
    pub gradient: f64,
    pub potential_part: f64,
    /// Weight power of the measure used (⟨r⟩^p dr).
    pub weight_power: i32,
}

impl EnergyReport {
    fn assemble(kinetic: f64, gradient: f64, potential_part: f64, weight_power: i32) -> Self {
        EnergyReport {
            total: kinetic + gradient + potential_part,
            kinetic,
            gradient,
            potential_part,
            weight_power,
        }
    }
}

fn require_form(state: &FieldState, want: Form) -> Result<()> {
    if state.form() != want {
        return Err(Error::FormMismatch {
            expected: want.to_string(),
            got: state.form().to_string(),
        });
    }
    Ok(())
}

/// Energy of the full wave map,
/// E = ½ ∫ [ψ_t² + ψ_r² + ℓ(ℓ+1) sin²ψ / ⟨r⟩²] ⟨r⟩² dr.
/// In x-coordinates the three integrands reduce to g²·c³, f_x²·c and
/// ℓ(ℓ+1)·sin²f·c with c = cosh x.
pub fn energy_psi(state: &FieldState) -> Result<EnergyReport> {
    require_form(state, Form::Psi)?;
    let grid = state.grid();
    let n = grid.len();
    let mut fx = vec![0.0; n];
    DiffOp::first().apply(state.f(), grid.spacing(), &mut fx);
    let c = grid.jacobian();
    let lam = state.params().lam();
    let kin = 0.5 * grid.integrate_range(0, n - 1, |i| state.g()[i].powi(2) * c[i].powi(3));
    let grad = 0.5 * grid.integrate_range(0, n - 1, |i| fx[i] * fx[i] * c[i]);
    let pot = 0.5 * lam * grid.integrate_range(0, n - 1, |i| state.f()[i].sin().powi(2) * c[i]);
    Ok(EnergyReport::assemble(kin, grad, pot, 2))
}

/// Quadratic energy of the flattened field for a sampled potential V,
/// E_V = ½ ∫ [u_t² + u_r² + V u²] ⟨r⟩^{d−1} dr.
/// This is the conserved energy of the *linear* part of the u-flow; the full
/// nonlinear flow conserves it plus the nonlinear potential (see `evolve`).
pub fn energy_u(state: &FieldState, v_samples: &[f64]) -> Result<EnergyReport> {
    require_form(state, Form::U)?;
    let grid = state.grid();
    let n = grid.len();
    if v_samples.len() != n {
        return Err(Error::GridMismatch(format!(
            "potential sampled on {} nodes, grid has {}",
            v_samples.len(),
            n
        )));
    }
    let mut fx = vec![0.0; n];
    DiffOp::first().apply(state.f(), grid.spacing(), &mut fx);
    let c = grid.jacobian();
    let d = state.params().dim() as i32;
    let meas = Measure::Bracket(d - 1);
    let w = |i: usize| meas.weight(grid, i) * c[i]; // weight × jacobian
    let kin = 0.5 * grid.integrate_range(0, n - 1, |i| state.g()[i].powi(2) * w(i));
    let grad =
        0.5 * grid.integrate_range(0, n - 1, |i| (fx[i] / c[i]).powi(2) * w(i));
    let pot =
        0.5 * grid.integrate_range(0, n - 1, |i| v_samples[i] * state.f()[i].powi(2) * w(i));
    Ok(EnergyReport::assemble(kin, grad, pot, d - 1))
}

/// Quadratic energy ½ ∫ [f_t² + f_r² + pot·f²] dμ over the nodes the state
/// covers, for an explicit measure and covered-node potential samples. This
/// is the conserved functional of the linear flows (the linearized equation
/// and the free waves); pass an empty `pot` for a vanishing potential.
pub fn energy_quadratic(state: &FieldState, pot: &[f64], measure: Measure) -> Result<EnergyReport> {
    let grid = state.grid();
    let m = state.f().len();
    if !(pot.is_empty() || pot.len() == m) {
        return Err(Error::GridMismatch(format!(
            "potential sampled on {} nodes, state covers {}",
            pot.len(),
            m
        )));
    }
    let s0 = state.offset();
    let s1 = grid.len() - 1;
    let mut fx = vec![0.0; m];
    DiffOp::first().apply(state.f(), grid.spacing(), &mut fx);
    let c = grid.jacobian();
    let w = |i: usize| measure.weight(grid, i) * c[i]; // weight × jacobian
    let kin = 0.5 * grid.integrate_range(s0, s1, |i| state.g()[i - s0].powi(2) * w(i));
    let grad = 0.5 * grid.integrate_range(s0, s1, |i| (fx[i - s0] / c[i]).powi(2) * w(i));
    let potp = if pot.is_empty() {
        0.0
    } else {
        0.5 * grid.integrate_range(s0, s1, |i| pot[i - s0] * state.f()[i - s0].powi(2) * w(i))
    };
    let power = match measure {
        Measure::Bracket(p) | Measure::FlatPower(p) => p,
    };
    Ok(EnergyReport::assemble(kin, grad, potp, power))
}
