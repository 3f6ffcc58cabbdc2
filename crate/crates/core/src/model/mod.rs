//! Geometry, discretization and field-state bookkeeping.
//!
//! The wormhole metric is ds² = −dt² + dr² + (r² + 1) dΩ² with r ∈ ℝ; the
//! throat sits at r = 0 and ⟨r⟩ = √(1 + r²) plays the role of the area
//! radius. All storage and differencing happens in the compactified
//! coordinate x = arcsinh r, where ⟨r⟩ = cosh x and the wave speed
//! dx/dt = 1/cosh x is uniformly ≤ 1 (one global CFL bound).

mod energy;
mod grid;
mod inequalities;
mod io;
mod norm;
mod state;
mod transform;

pub use energy::{energy_psi, energy_quadratic, energy_u, EnergyReport};
pub use grid::{make_grid, RadialGrid};
pub use inequalities::{strauss_hardy_report, StraussHardyReport};
pub use io::{load_state, save_state, DataFormat};
pub use norm::{norm_h, norm_window, Measure, NormValue, Window};
pub use state::{FieldState, Form};
pub use transform::{psi_to_u, u_to_psi};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Field values at the ends of the grid must sit within this distance of
/// their boundary values for a state to be accepted.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// A norm/energy result raises its decay flag when the integrand has not
/// decayed below this fraction of its maximum at the support ends.
pub const DECAY_FLAG_FACTOR: f64 = 1e-4;

/// Largest supported topological degree. Shooting remains well-conditioned
/// in double precision for small degrees; higher windings need a sharper
/// tail treatment than this laboratory provides.
pub const MAX_DEGREE: u32 = 3;

/// Equivariance class ℓ ≥ 1 and topological degree n ≥ 0 of the sector under
/// study. The flattened perturbation field u lives in d = 2ℓ + 3 effective
/// spatial dimensions (always odd ≥ 5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    ell: u32,
    degree: u32,
}

impl ModelParams {
    pub fn new(ell: u32, degree: u32) -> Result<Self> {
        if ell < 1 {
            return Err(Error::InvalidArgument(format!(
                "equivariance class must satisfy ell >= 1, got {ell}"
            )));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        Ok(ModelParams { ell, degree })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Effective dimension d = 2ℓ + 3 of the flattened field.
    pub fn dim(&self) -> u32 {
        2 * self.ell + 3
    }

    /// ℓ(ℓ + 1), the angular eigenvalue entering every potential term.
    pub fn lam(&self) -> f64 {
        (self.ell * (self.ell + 1)) as f64
    }

    /// Boundary value nπ of ψ at r → +∞.
    pub fn boundary_value(&self) -> f64 {
        self.degree as f64 * std::f64::consts::PI
    }

    /// Re-validate (used after deserializing configs).
    pub fn validate(&self) -> Result<()> {
        Self::new(self.ell, self.degree).map(|_| ())
    }
}
