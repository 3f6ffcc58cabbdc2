//! Static equivariant harmonic maps on the wormhole and everything derived
//! from them.
//!
//! In the compactified coordinate x = arcsinh r the static equation for the
//! polar angle reads
//!
//!   Q'' + tanh x · Q' − (ℓ(ℓ+1)/2) sin 2Q = 0,
//!
//! and the degree-n map Q_{ℓ,n} is the unique solution with Q(0) = nπ/2,
//! Q(−∞) = 0, Q(+∞) = nπ. It is found by a two-stage construction:
//!
//! 1. *Shooting*: bisection on the throat slope b = Q'(0) between certified
//!    undershoots and overshoots ([`integrate_static`], [`classify_shot`]).
//! 2. *Tail grafting*: the boundary value nπ sits on a saddle of the ODE —
//!    the deviation δ = nπ − Q carries a growing mode e^{ℓx} and a decaying
//!    mode e^{−(ℓ+1)x}, so a forward trajectory at the bisected slope is
//!    contaminated by ~|Δb| e^{ℓx} and cannot reach the far grid nodes.
//!    The final map therefore keeps the forward solution only on [0, x_m]
//!    and continues it with a backward integration of the δ-equation seeded
//!    on the decaying branch δ = α r^{−ℓ−1}, with α matched at x_m by a
//!    secant iteration ([`solve_q`]).
//!
//! The map stores δ on the right half-line instead of Q: beyond moderate x
//! the tail α r^{−ℓ−1} drops below one ulp of nπ, so storing Q would erase
//! it. All trigonometric coefficients of the evolution equations are exposed
//! through the reduced angle 2Q ≡ ±2δ (mod 2π), which keeps them accurate in
//! the far field ([`HarmonicMap::two_q_principal`]).

pub(crate) mod coefficients;
mod family;
mod io;
mod shoot;
mod solve;

pub use coefficients::{
    linearized_potential, nonlinearity, nonlinearity_antiderivative_at, nonlinearity_at,
    nonlinearity_split, potential_v, potential_v_at, NonlinearitySplit,
};
pub use family::{static_u_family, StaticProfile};
pub use io::{load_map, save_map, MapManifest, MapTolerances};
pub use shoot::{classify_shot, integrate_static, ShotClass, ShotOutcome, Trajectory};
pub use solve::{
    extract_alpha, solve_prescribed, solve_q, AlphaEstimate, PrescribedTail, SolveSettings,
    TailSide,
};

use crate::model::{ModelParams, RadialGrid};
use std::sync::Arc;

/// A computed harmonic map Q_{ℓ,n} sampled on a grid, in saddle-safe storage.
///
/// The right half-line is stored as the deviation δ(x) = nπ − Q(x) together
/// with its ODE-exact derivative; Q and Q_x on the full grid are derived
/// views. By the reflection symmetry Q(−x) = nπ − Q(x), the left half of Q
/// *is* the mirrored deviation, so both far fields retain full relative
/// accuracy.
#[derive(Debug, Clone)]
pub struct HarmonicMap {
    params: ModelParams,
    grid: Arc<RadialGrid>,
    /// δ(x_j) = nπ − Q(x_j) for the half-grid x ≥ 0 (j = 0 at the throat).
    dev: Vec<f64>,
    /// δ'(x_j) on the same half-grid, carried by the integrator.
    devx: Vec<f64>,
    /// Q on the full grid (right tail loses sub-ulp detail; use `dev` there).
    q: Vec<f64>,
    /// dQ/dx on the full grid.
    qx: Vec<f64>,
    b_star: f64,
    alpha: f64,
    /// Relative spread of r^{ℓ+1} δ(r) over the outermost decade of the grid.
    alpha_drift: f64,
}

impl HarmonicMap {
    pub(crate) fn from_parts(
        params: ModelParams,
        grid: Arc<RadialGrid>,
        dev: Vec<f64>,
        devx: Vec<f64>,
        b_star: f64,
        alpha: f64,
        alpha_drift: f64,
    ) -> Self {
        let c = grid.center();
        let n = grid.len();
        let bv = params.boundary_value();
        let mut q = vec![0.0; n];
        let mut qx = vec![0.0; n];
        for i in 0..n {
            if i >= c {
                q[i] = bv - dev[i - c];
                qx[i] = -devx[i - c];
            } else {
                q[i] = dev[c - i];
                qx[i] = -devx[c - i];
            }
        }
        HarmonicMap { params, grid, dev, devx, q, qx, b_star, alpha, alpha_drift }
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Throat slope dQ/dr(0) = dQ/dx(0) singled out by the shooting argument.
    pub fn b_star(&self) -> f64 {
        self.b_star
    }

    /// Tail coefficient in Q(r) = nπ − α r^{−ℓ−1} + O(r^{−ℓ−3}).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Relative drift of the tail-coefficient plateau across the outermost
    /// decade of the grid; a quality measure for `alpha`.
    pub fn alpha_drift(&self) -> f64 {
        self.alpha_drift
    }

    /// Q on the full grid.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// dQ/dx on the full grid.
    pub fn qx(&self) -> &[f64] {
        &self.qx
    }

    /// δ = nπ − Q on the half-grid x ≥ 0.
    pub fn dev(&self) -> &[f64] {
        &self.dev
    }

    /// δ' on the half-grid x ≥ 0.
    pub fn devx(&self) -> &[f64] {
        &self.devx
    }

    /// Deviation from the nearer boundary value at full-grid node i:
    /// δ(|x_i|) by the reflection symmetry.
    pub fn dev_mirror(&self, i: usize) -> f64 {
        let c = self.grid.center();
        self.dev[if i >= c { i - c } else { c - i }]
    }

    /// The reduced angle θ_i with θ ≡ 2Q(x_i) (mod 2π) and |θ| ≤ nπ:
    /// θ = −2δ(x) on x ≥ 0 and +2δ(−x) on x < 0. Evaluating cos 2Q = cos θ
    /// and sin 2Q = sin θ through it avoids the total loss of the tail that
    /// reducing 2Q ≈ 2nπ in f64 would cause.
    pub fn two_q_principal(&self, i: usize) -> f64 {
        let c = self.grid.center();
        if i >= c {
            -2.0 * self.dev[i - c]
        } else {
            2.0 * self.dev[c - i]
        }
    }

    /// cos 2Q − 1 at node i, evaluated as −2 sin² δ (no cancellation).
    pub fn cos_two_q_minus_one(&self, i: usize) -> f64 {
        let s = self.dev_mirror(i).sin();
        -2.0 * s * s
    }
}
