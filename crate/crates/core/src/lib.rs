//! Numerical laboratory for ℓ-equivariant wave maps on a wormhole geometry
//! ds² = −dt² + dr² + (r² + 1) dΩ², r ∈ ℝ.
//!
//! The crate is organised around four subsystems:
//!
//! * [`model`] — geometry, grids, field states, energies, norms and the
//!   ψ ↔ u change of variables (u is the ⟨r⟩^ℓ-flattened perturbation field
//!   living in d = 2ℓ + 3 effective dimensions).
//! * [`harmonic`] — static solutions Q_{ℓ,n} of the equivariant harmonic map
//!   equation, found by shooting from the wormhole throat, together with the
//!   potentials and nonlinearities they induce.
//! * [`evolve`] — method-of-lines evolution (RK4 in time, fourth-order finite
//!   differences in the compactified radial coordinate x = arcsinh r) for the
//!   nonlinear, linearized and free flows.
//! * [`analysis`] — exterior-region machinery: the flattening u ↦ u_e, the
//!   projection onto the finite-dimensional space P(R) spanned by static
//!   power tails, certification of the exterior energy lower bound, and the
//!   soliton-resolution diagnostic.
//!
//! Everything is deterministic: fixed-step integrators, no threading in the
//! numerics, explicit seeds for randomized sweeps.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod harmonic;
pub mod model;
pub mod stencil;

pub use analysis::{
    CertificationRecord, ExteriorCoefficients, ProjectionBasisInfo, ProjectionReport,
    RadiationFlow, ResolutionReport, WindowEnergy,
};
pub use error::Error;
pub use evolve::{Engine, EvolutionLog, FlowKind, FlowSpec, Monitors, SpongeSpec, CFL_MAX};
pub use harmonic::{HarmonicMap, ShotClass, ShotOutcome};
pub use model::{
    EnergyReport, FieldState, Form, Measure, ModelParams, NormValue, RadialGrid, Window,
};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
