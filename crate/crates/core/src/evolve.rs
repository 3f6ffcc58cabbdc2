//! Method-of-lines time evolution for the five radial flows: the nonlinear
//! wave-map angle ψ, its ⟨r⟩^ℓ-flattened form u, the linearization at a
//! harmonic map, the free wave on the wormhole in d = 2ℓ+3 effective
//! dimensions, and the radial free wave on flat space.
//!
//! All flows advance the first-order system (f, g) = (field, ∂_t field) with
//! the classical four-stage fourth-order scheme in time and fourth-order
//! stencils in the stretched coordinate x = arcsinh r. The wave speed in x is
//! cosh(x)^{−1} ≤ 1, so the step bound is proportional to the grid spacing.
//!
//! The nonlinear ψ-flow is stored internally as the deviation φ = ψ − Q from
//! its reference harmonic map: both ends of φ decay, stencils never touch the
//! nonconstant far-field values of ψ, and (Q, 0) is an exact fixed point of
//! the discrete update. States passed in and out remain in ψ form.

use crate::harmonic::{
    linearized_potential, nonlinearity_antiderivative_at, potential_v, HarmonicMap,
};
use crate::model::{
    energy_psi, energy_quadratic, energy_u, EnergyReport, FieldState, Form, Measure, ModelParams,
    RadialGrid,
};
use crate::stencil::DiffOp;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Safety factor on the step bound dt ≤ cfl_max · Δx / (max wave speed).
pub const CFL_MAX: f64 = 0.8;

/// Which partial differential equation to advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// ψ_tt = Δ₂ψ − ℓ(ℓ+1) sin(2ψ)/(2⟨r⟩²), the full wave map.
    PsiNonlinear,
    /// u_tt = Δ_g u − V u + N(r, u), the flattened perturbation equation.
    UNonlinear,
    /// φ_tt = Δ₂φ − ℓ(ℓ+1) cos(2Q) φ/⟨r⟩², the linearization at Q.
    LinearizedQ,
    /// u_tt = Δ_g u, the free wave on the wormhole in d dimensions.
    FreeWormholeD,
    /// v_tt = v_rr + (d−1) v_r / r, the radial free wave on flat space.
    FreeFlatD,
}

impl FlowKind {
    /// The field form states of this flow must carry.
    pub fn form(self) -> Form {
        match self {
            FlowKind::PsiNonlinear => Form::Psi,
            FlowKind::UNonlinear | FlowKind::FreeWormholeD => Form::U,
            FlowKind::LinearizedQ => Form::Linear,
            FlowKind::FreeFlatD => Form::FlatFree,
        }
    }

    /// True for the three flows with linear right-hand sides.
    pub fn is_linear(self) -> bool {
        matches!(
            self,
            FlowKind::LinearizedQ | FlowKind::FreeWormholeD | FlowKind::FreeFlatD
        )
    }
}

/// Absorbing layer: velocity damping g → g − σ(x) g with a quartic ramp
/// σ = strength · ((|x| − x_on)/(X − x_on))⁴ on the outer `fraction` of the
/// domain. Off by default; the preferred regime sizes the domain so signals
/// never reach the edges within the run time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpongeSpec {
    pub fraction: f64,
    pub strength: f64,
}

impl Default for SpongeSpec {
    fn default() -> Self {
        SpongeSpec { fraction: 0.1, strength: 1.0 }
    }
}

/// A fully specified flow: the equation, its parameters, and the references
/// it needs (harmonic map for the Q-relative kinds, dimension and inner
/// boundary for the flat free wave).
#[derive(Debug, Clone)]
pub struct FlowSpec {
    kind: FlowKind,
    params: ModelParams,
    q_ref: Option<Arc<HarmonicMap>>,
    flat_dim: u32,
    inner_radius: f64,
    sponge: Option<SpongeSpec>,
}

impl FlowSpec {
    /// Nonlinear ψ-flow relative to the harmonic map `q` (stored internally
    /// as the deviation ψ − Q; states stay in ψ form).
    pub fn psi_nonlinear(q: Arc<HarmonicMap>) -> FlowSpec {
        FlowSpec::with_map(FlowKind::PsiNonlinear, q)
    }

    /// Nonlinear flattened flow around `q`.
    pub fn u_nonlinear(q: Arc<HarmonicMap>) -> FlowSpec {
        FlowSpec::with_map(FlowKind::UNonlinear, q)
    }

    /// Linearized flow at `q`.
    pub fn linearized(q: Arc<HarmonicMap>) -> FlowSpec {
        FlowSpec::with_map(FlowKind::LinearizedQ, q)
    }

    fn with_map(kind: FlowKind, q: Arc<HarmonicMap>) -> FlowSpec {
        FlowSpec {
            kind,
            params: q.params(),
            q_ref: Some(q),
            flat_dim: 0,
            inner_radius: 0.0,
            sponge: None,
        }
    }

    /// Free wave on the wormhole in d = 2ℓ+3 dimensions.
    pub fn free_wormhole(params: ModelParams) -> FlowSpec {
        FlowSpec { kind: FlowKind::FreeWormholeD, params, q_ref: None, flat_dim: 0, inner_radius: 0.0, sponge: None }
    }

    /// Radial free wave on flat R^{1+dim}. `inner_radius = 0` evolves the
    /// full half-line with the regular-origin closure; `inner_radius > 0`
    /// pins the field at the first node with r ≥ inner_radius (a
    /// time-independent Dirichlet wall) and evolves outward of it.
    pub fn free_flat(params: ModelParams, dim: u32, inner_radius: f64) -> Result<FlowSpec> {
        if dim % 2 == 0 || dim < 3 {
            return Err(Error::InvalidArgument(format!(
                "flat dimension must be odd and >= 3, got {dim}"
            )));
        }
        if !(inner_radius.is_finite() && inner_radius >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inner radius must be finite and >= 0, got {inner_radius}"
            )));
        }
        Ok(FlowSpec {
            kind: FlowKind::FreeFlatD,
            params,
            q_ref: None,
            flat_dim: dim,
            inner_radius,
            sponge: None,
        })
    }

    /// Enable the absorbing layer.
    pub fn with_sponge(mut self, sponge: SpongeSpec) -> Result<FlowSpec> {
        if !(sponge.fraction > 0.0 && sponge.fraction < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "sponge fraction must lie in (0, 0.5), got {}",
                sponge.fraction
            )));
        }
        if !(sponge.strength.is_finite() && sponge.strength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sponge strength must be positive, got {}",
                sponge.strength
            )));
        }
        self.sponge = Some(sponge);
        Ok(self)
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn q_ref(&self) -> Option<&Arc<HarmonicMap>> {
        self.q_ref.as_ref()
    }
}

/// What to record along an evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Monitors {
    /// Record energy and boundary flux every this many steps (the initial
    /// and final states are always recorded).
    pub energy_every: usize,
    /// Absolute times at which to store full snapshots (each snaps to the
    /// nearest step).
    pub snapshot_times: Vec<f64>,
}

impl Default for Monitors {
    fn default() -> Self {
        Monitors { energy_every: 16, snapshot_times: Vec::new() }
    }
}

/// Record of one evolution: monitor series (aligned with `times`), sparse
/// snapshots, and the final state.
#[derive(Debug, Clone)]
pub struct EvolutionLog {
    /// |dt| · (max wave speed) / Δx actually used; ≤ CFL_MAX.
    pub cfl: f64,
    /// Signed time step.
    pub dt: f64,
    pub times: Vec<f64>,
    pub energy: Vec<EnergyReport>,
    /// Instantaneous power f_t · f_r · w(r) leaving through the outer edge
    /// minus the same at the inner edge of the covered domain.
    pub boundary_flux: Vec<f64>,
    pub snapshots: Vec<FieldState>,
    pub final_state: FieldState,
}

/// Left-edge treatment of the covered domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LeftEdge {
    /// Full line: one-sided stencil closures in the (causally silent) edge.
    Open,
    /// Flat half-line from r = 0: even-parity ghosts and the regular-origin
    /// acceleration d · f_xx(0).
    OriginParity,
    /// Flat half-line from a wall: node 0 pinned at its initial value.
    Wall,
}

#[derive(Debug, Default)]
struct Work {
    fx: Vec<f64>,
    fxx: Vec<f64>,
    kf: [Vec<f64>; 4],
    kg: [Vec<f64>; 4],
    sf: Vec<f64>,
    sg: Vec<f64>,
}

impl Work {
    fn ensure(&mut self, m: usize) {
        for v in [&mut self.fx, &mut self.fxx, &mut self.sf, &mut self.sg]
            .into_iter()
            .chain(self.kf.iter_mut())
            .chain(self.kg.iter_mut())
        {
            v.resize(m, 0.0);
        }
    }
}

/// Precomputed tables and scratch space for one flow on one grid. The
/// acceleration at covered node k is
///
///   a2[k] f_xx + a1[k] f_x − pot[k] f + (kind-specific nonlinear term),
///
/// and the damped system is (f, g)' = (g, accel − σ g).
pub struct Engine {
    spec: FlowSpec,
    grid: Arc<RadialGrid>,
    offset: usize,
    left: LeftEdge,
    max_speed: f64,
    a2: Vec<f64>,
    a1: Vec<f64>,
    pot: Vec<f64>,
    sigma: Option<Vec<f64>>,
    /// ψ-flow tables: λ/⟨r⟩² and sin/cos of the reduced angle 2Q.
    lam_c2: Vec<f64>,
    /// sin/cos(2Q) tables (ψ- and u-flow nonlinearities).
    sin2q: Vec<f64>,
    cos2q: Vec<f64>,
    /// u-flow tables: ⟨r⟩^ℓ and λ/⟨r⟩^{ℓ+2}.
    cl: Vec<f64>,
    nl_scale: Vec<f64>,
    /// Reference map samples (ψ-flow ingest/emit).
    q_f: Vec<f64>,
    d1: DiffOp,
    d2: DiffOp,
    work: Work,
}

impl Engine {
    pub fn new(spec: FlowSpec, grid: Arc<RadialGrid>) -> Result<Engine> {
        let n = grid.len();
        let c = grid.jacobian();
        let r = grid.r();
        let kind = spec.kind;

        if let Some(q) = &spec.q_ref {
            if !q.grid().same_layout(&grid) {
                return Err(Error::GridMismatch(
                    "reference map and evolution grid have different layouts".into(),
                ));
            }
        } else if !kind.is_linear() || kind == FlowKind::LinearizedQ {
            return Err(Error::InvalidArgument(format!(
                "flow kind {kind:?} requires a reference harmonic map"
            )));
        }

        let (offset, left) = match kind {
            FlowKind::FreeFlatD => {
                let offset = grid.first_at_least(spec.inner_radius).ok_or_else(|| {
                    Error::InvalidArgument("inner radius lies beyond the grid".into())
                })?;
                let left = if spec.inner_radius == 0.0 {
                    if grid.r()[offset] != 0.0 {
                        return Err(Error::InvalidArgument(
                            "full-line flat evolution needs a node exactly at r = 0 \
                             (use an odd point count)"
                                .into(),
                        ));
                    }
                    LeftEdge::OriginParity
                } else {
                    LeftEdge::Wall
                };
                if n - offset < 6 {
                    return Err(Error::InvalidArgument(
                        "fewer than 6 nodes outside the inner radius".into(),
                    ));
                }
                (offset, left)
            }
            _ => (0, LeftEdge::Open),
        };

        let m = n - offset;
        let mut a2 = vec![0.0; m];
        let mut a1 = vec![0.0; m];
        let mut pot = vec![0.0; m];
        let (mut lam_c2, mut sin2q, mut cos2q) = (Vec::new(), Vec::new(), Vec::new());
        let (mut cl, mut nl_scale) = (Vec::new(), Vec::new());
        let mut q_f = Vec::new();

        // Principal part and drift. The wave operator in x = arcsinh r reads
        // ∂_rr + (p r/⟨r⟩²) ∂_r = ⟨r⟩^{−2} ∂_xx + (p − 1) r ⟨r⟩^{−3} ∂_x with
        // p = 2 (ψ, linearized) or p = d−1 (wormhole u-forms); the flat
        // operator ∂_rr + ((d−1)/r) ∂_r picks up the extra −r⟨r⟩^{−3} term
        // from the chain rule instead.
        let lam = spec.params.lam();
        match kind {
            FlowKind::PsiNonlinear | FlowKind::LinearizedQ => {
                for i in 0..n {
                    a2[i] = 1.0 / (c[i] * c[i]);
                    a1[i] = r[i] / c[i].powi(3);
                }
            }
            FlowKind::UNonlinear | FlowKind::FreeWormholeD => {
                let d = spec.params.dim() as f64;
                for i in 0..n {
                    a2[i] = 1.0 / (c[i] * c[i]);
                    a1[i] = (d - 2.0) * r[i] / c[i].powi(3);
                }
            }
            FlowKind::FreeFlatD => {
                let d = spec.flat_dim as f64;
                for k in 0..m {
                    let i = offset + k;
                    a2[k] = 1.0 / (c[i] * c[i]);
                    a1[k] = (d - 1.0) / (r[i] * c[i]) - r[i] / c[i].powi(3);
                }
                if left == LeftEdge::OriginParity {
                    // Regular origin: f_x(0) = 0 and the angular term tends
                    // to (d−1) f_xx(0), so the acceleration is d · f_xx(0).
                    a2[0] = d;
                    a1[0] = 0.0;
                }
            }
        }

        match kind {
            FlowKind::PsiNonlinear => {
                let q = spec.q_ref.as_ref().unwrap();
                lam_c2 = (0..n).map(|i| lam / (c[i] * c[i])).collect();
                sin2q = (0..n).map(|i| q.two_q_principal(i).sin()).collect();
                cos2q = (0..n).map(|i| q.two_q_principal(i).cos()).collect();
                q_f = q.q().to_vec();
            }
            FlowKind::UNonlinear => {
                let q = spec.q_ref.as_ref().unwrap();
                let ell = spec.params.ell() as i32;
                pot = potential_v(q);
                sin2q = (0..n).map(|i| q.two_q_principal(i).sin()).collect();
                cos2q = (0..n).map(|i| q.two_q_principal(i).cos()).collect();
                cl = (0..n).map(|i| c[i].powi(ell)).collect();
                nl_scale = (0..n).map(|i| lam / c[i].powi(ell + 2)).collect();
            }
            FlowKind::LinearizedQ => {
                pot = linearized_potential(spec.q_ref.as_ref().unwrap());
            }
            FlowKind::FreeWormholeD | FlowKind::FreeFlatD => {}
        }

        let sigma = spec.sponge.map(|s| {
            let x_on = grid.half_width() * (1.0 - s.fraction);
            (0..m)
                .map(|k| {
                    let x = grid.x()[offset + k].abs();
                    let ramp = ((x - x_on) / (grid.half_width() - x_on)).max(0.0);
                    s.strength * ramp.powi(4)
                })
                .collect()
        });

        // Wave speed in x is ⟨r⟩^{−1}, largest at the innermost covered node.
        let max_speed = (0..m).map(|k| 1.0 / c[offset + k]).fold(0.0, f64::max);

        Ok(Engine {
            spec,
            grid,
            offset,
            left,
            max_speed,
            a2,
            a1,
            pot,
            sigma,
            lam_c2,
            sin2q,
            cos2q,
            cl,
            nl_scale,
            q_f,
            d1: DiffOp::first(),
            d2: DiffOp::second(),
            work: Work::default(),
        })
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Largest admissible |dt|.
    pub fn dt_max(&self) -> f64 {
        CFL_MAX * self.grid.spacing() / self.max_speed
    }

    fn check_state(&self, state: &FieldState) -> Result<()> {
        let want = self.spec.kind.form();
        if state.form() != want {
            return Err(Error::FormMismatch {
                expected: want.to_string(),
                got: state.form().to_string(),
            });
        }
        if !state.grid().same_layout(&self.grid) {
            return Err(Error::GridMismatch(
                "state grid does not match the engine grid".into(),
            ));
        }
        if state.params() != self.spec.params {
            return Err(Error::InvalidArgument(
                "state model parameters do not match the flow".into(),
            ));
        }
        if self.spec.kind == FlowKind::FreeFlatD {
            if state.flat_dim() != self.spec.flat_dim {
                return Err(Error::InvalidArgument(format!(
                    "state is {}-dimensional, flow is {}-dimensional",
                    state.flat_dim(),
                    self.spec.flat_dim
                )));
            }
            if state.offset() != self.offset {
                return Err(Error::InvalidArgument(
                    "state inner radius does not match the flow".into(),
                ));
            }
        }
        Ok(())
    }

    /// Raw field samples as evolved internally (deviation φ = ψ − Q for the
    /// ψ-flow, the state's own samples otherwise).
    fn ingest(&self, state: &FieldState) -> (Vec<f64>, Vec<f64>) {
        let mut f = state.f().to_vec();
        if self.spec.kind == FlowKind::PsiNonlinear {
            for (fi, qi) in f.iter_mut().zip(&self.q_f) {
                *fi -= qi;
            }
        }
        (f, state.g().to_vec())
    }

    /// Rebuild a user-facing state from raw samples. Emission bypasses
    /// boundary validation: long runs legitimately accumulate small edge
    /// values once radiation reaches the domain ends.
    fn emit(&self, template: &FieldState, f: &[f64], g: &[f64], time: f64) -> FieldState {
        let mut f = f.to_vec();
        if self.spec.kind == FlowKind::PsiNonlinear {
            for (fi, qi) in f.iter_mut().zip(&self.q_f) {
                *fi += qi;
            }
        }
        template.with_samples(f, g.to_vec(), time)
    }

    /// Acceleration of the raw field into `out` (the nonlinear terms see the
    /// raw field: for the ψ-flow the trigonometry is expressed in φ = ψ − Q,
    /// which keeps (Q, 0) an exact fixed point).
    fn accel(&self, f: &[f64], fx: &mut [f64], fxx: &mut [f64], out: &mut [f64]) {
        let m = f.len();
        let h = self.grid.spacing();
        self.d1.apply(f, h, fx);
        self.d2.apply(f, h, fxx);
        if self.left == LeftEdge::OriginParity {
            // Even-parity ghosts f(−x) = f(x) across the origin.
            let h2 = h * h;
            fx[0] = 0.0;
            fxx[0] = (8.0 / 3.0 * f[1] - f[2] / 6.0 - 2.5 * f[0]) / h2;
            fx[1] = (f[1] / 12.0 - 2.0 / 3.0 * f[0] + 2.0 / 3.0 * f[2] - f[3] / 12.0) / h;
            fxx[1] =
                (4.0 / 3.0 * (f[0] + f[2]) - 31.0 / 12.0 * f[1] - f[3] / 12.0) / h2;
        }
        for k in 0..m {
            out[k] = self.a2[k] * fxx[k] + self.a1[k] * fx[k] - self.pot[k] * f[k];
        }
        match self.spec.kind {
            FlowKind::PsiNonlinear => {
                // −(λ/⟨r⟩²)[sin 2ψ − sin 2Q]/2 = −(λ/⟨r⟩²) cos(2Q + φ) sin φ.
                for k in 0..m {
                    let (sp, cp) = f[k].sin_cos();
                    out[k] -= self.lam_c2[k] * (self.cos2q[k] * cp - self.sin2q[k] * sp) * sp;
                }
            }
            FlowKind::UNonlinear => {
                for k in 0..m {
                    out[k] += self.nonlinear_term(k, f[k]);
                }
            }
            _ => {}
        }
        if self.left == LeftEdge::Wall {
            out[0] = 0.0;
        }
    }

    /// N(r_k, u): same expression as the coefficient module's pointwise
    /// nonlinearity, with the trigonometry of 2Q precomputed.
    #[inline]
    fn nonlinear_term(&self, k: usize, u: f64) -> f64 {
        let a = self.cl[k] * u;
        let sa = a.sin();
        self.nl_scale[k]
            * (sa * sa * self.sin2q[k]
                + 0.5 * crate::harmonic::coefficients::x_minus_sin(2.0 * a) * self.cos2q[k])
    }

    fn pin(&self, kf: &mut [f64], kg: &mut [f64]) {
        if self.left == LeftEdge::Wall {
            kf[0] = 0.0;
            kg[0] = 0.0;
        }
    }

    /// One four-stage step of size `dt` (sign = direction) on raw samples.
    fn step_raw(&mut self, f: &mut [f64], g: &mut [f64], dt: f64) {
        let m = f.len();
        let mut w = std::mem::take(&mut self.work);
        w.ensure(m);

        // Stage 1 at the base point.
        w.kf[0].copy_from_slice(g);
        self.accel(f, &mut w.fx, &mut w.fxx, &mut w.kg[0]);
        if let Some(sig) = &self.sigma {
            for k in 0..m {
                w.kg[0][k] -= sig[k] * g[k];
            }
        }
        self.pin(&mut w.kf[0], &mut w.kg[0]);

        // Stages 2–4 at dt/2, dt/2, dt.
        for (j, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            let a = frac * dt;
            for k in 0..m {
                w.sf[k] = f[k] + a * w.kf[j - 1][k];
                w.sg[k] = g[k] + a * w.kg[j - 1][k];
            }
            w.kf[j].copy_from_slice(&w.sg);
            let (before, rest) = w.kg.split_at_mut(j);
            let _ = before;
            self.accel(&w.sf, &mut w.fx, &mut w.fxx, &mut rest[0]);
            if let Some(sig) = &self.sigma {
                for k in 0..m {
                    rest[0][k] -= sig[k] * w.sg[k];
                }
            }
            let (kfj, kgj) = (&mut w.kf[j], &mut rest[0]);
            self.pin(kfj, kgj);
        }

        let s = dt / 6.0;
        for k in 0..m {
            f[k] += s * (w.kf[0][k] + 2.0 * (w.kf[1][k] + w.kf[2][k]) + w.kf[3][k]);
            g[k] += s * (w.kg[0][k] + 2.0 * (w.kg[1][k] + w.kg[2][k]) + w.kg[3][k]);
        }
        self.work = w;
    }

    /// Second time derivative of the state's field on the covered nodes
    /// (including sponge damping if enabled).
    pub fn rhs(&mut self, state: &FieldState) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let (f, g) = self.ingest(state);
        let m = f.len();
        let mut w = std::mem::take(&mut self.work);
        w.ensure(m);
        let mut out = vec![0.0; m];
        self.accel(&f, &mut w.fx, &mut w.fxx, &mut out);
        self.work = w;
        if let Some(sig) = &self.sigma {
            for k in 0..m {
                out[k] -= sig[k] * g[k];
            }
        }
        if self.left == LeftEdge::Wall {
            out[0] = 0.0;
        }
        Ok(out)
    }

    /// Advance one step of size `dt` (may be negative).
    pub fn step(&mut self, state: &FieldState, dt: f64) -> Result<FieldState> {
        self.check_state(state)?;
        let dtm = self.dt_max();
        if !(dt.is_finite() && dt.abs() <= dtm * (1.0 + 1e-12)) {
            return Err(Error::RejectedStep { dt: dt.abs(), max_dt: dtm });
        }
        let (mut f, mut g) = self.ingest(state);
        self.step_raw(&mut f, &mut g, dt);
        Ok(self.emit(state, &f, &g, state.time() + dt))
    }

    /// Conserved energy of the state under this flow:
    /// E_ℓ for the ψ-flow; the quadratic V-energy minus the integrated
    /// nonlinear potential for the u-flow; the plain quadratic energy in the
    /// natural measure for the linear kinds.
    pub fn energy(&self, state: &FieldState) -> Result<EnergyReport> {
        self.check_state(state)?;
        match self.spec.kind {
            FlowKind::PsiNonlinear => energy_psi(state),
            FlowKind::UNonlinear => {
                let mut rep = energy_u(state, &self.pot)?;
                let q = self.spec.q_ref.as_ref().unwrap();
                let grid = &self.grid;
                let meas = Measure::Bracket(state.params().dim() as i32 - 1);
                let nl = grid.integrate_range(0, grid.len() - 1, |i| {
                    nonlinearity_antiderivative_at(q, i, state.f()[i])
                        * meas.weight(grid, i)
                        * grid.jacobian()[i]
                });
                rep.potential_part -= nl;
                rep.total -= nl;
                Ok(rep)
            }
            FlowKind::LinearizedQ => energy_quadratic(state, &self.pot, Measure::Bracket(2)),
            FlowKind::FreeWormholeD => energy_quadratic(
                state,
                &[],
                Measure::Bracket(state.params().dim() as i32 - 1),
            ),
            FlowKind::FreeFlatD => energy_quadratic(
                state,
                &[],
                Measure::FlatPower(self.spec.flat_dim as i32 - 1),
            ),
        }
    }

    /// Power through the edges of the covered domain: f_t f_r w(r) at the
    /// outer end minus the inner end, in the flow's natural measure.
    fn flux(&mut self, f: &[f64], g: &[f64]) -> f64 {
        let m = f.len();
        let h = self.grid.spacing();
        let mut w = std::mem::take(&mut self.work);
        w.ensure(m);
        self.d1.apply(f, h, &mut w.fx);
        let meas = match self.spec.kind {
            FlowKind::PsiNonlinear | FlowKind::LinearizedQ => Measure::Bracket(2),
            FlowKind::UNonlinear | FlowKind::FreeWormholeD => {
                Measure::Bracket(self.spec.params.dim() as i32 - 1)
            }
            FlowKind::FreeFlatD => Measure::FlatPower(self.spec.flat_dim as i32 - 1),
        };
        let end = |k: usize, fx: &[f64]| {
            let i = self.offset + k;
            g[k] * (fx[k] / self.grid.jacobian()[i]) * meas.weight(&self.grid, i)
        };
        let out = end(m - 1, &w.fx) - end(0, &w.fx);
        self.work = w;
        out
    }

    /// Evolve for a signed duration, recording monitors. The step count is
    /// ⌈|duration| / dt_max⌉, so dt automatically satisfies the CFL bound.
    pub fn run(
        &mut self,
        initial: &FieldState,
        duration: f64,
        monitors: &Monitors,
    ) -> Result<EvolutionLog> {
        self.run_with_cfl(initial, duration, CFL_MAX, monitors)
    }

    /// Evolve with a reduced Courant factor `cfl` ∈ (0, CFL_MAX]: the step
    /// satisfies |dt| ≤ cfl · Δx / (max wave speed). [`Engine::run`] is the
    /// `cfl = CFL_MAX` case.
    pub fn run_with_cfl(
        &mut self,
        initial: &FieldState,
        duration: f64,
        cfl: f64,
        monitors: &Monitors,
    ) -> Result<EvolutionLog> {
        self.check_state(initial)?;
        if !duration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "duration must be finite, got {duration}"
            )));
        }
        if !(cfl > 0.0 && cfl <= CFL_MAX) {
            return Err(Error::InvalidArgument(format!(
                "Courant factor must lie in (0, {CFL_MAX}], got {cfl}"
            )));
        }
        let dt_cap = cfl * self.grid.spacing() / self.max_speed;
        let t0 = initial.time();
        let n_steps = if duration == 0.0 {
            0
        } else {
            (duration.abs() / dt_cap).ceil() as usize
        };
        let dt = if n_steps == 0 { 0.0 } else { duration / n_steps as f64 };

        // Map each requested snapshot time to its nearest step index.
        let mut snap_at: Vec<(usize, f64)> = monitors
            .snapshot_times
            .iter()
            .map(|&s| {
                let k = if dt == 0.0 {
                    0
                } else {
                    ((s - t0) / dt).round().clamp(0.0, n_steps as f64) as usize
                };
                (k, s)
            })
            .collect();
        snap_at.sort_by_key(|p| p.0);
        let mut snap_iter = snap_at.into_iter().peekable();

        let template = initial.clone();
        let (mut f, mut g) = self.ingest(initial);
        let cadence = monitors.energy_every.max(1);
        let mut log = EvolutionLog {
            cfl: dt.abs() * self.max_speed / self.grid.spacing(),
            dt,
            times: Vec::new(),
            energy: Vec::new(),
            boundary_flux: Vec::new(),
            snapshots: Vec::new(),
            final_state: template.clone(),
        };

        for k in 0..=n_steps {
            let t = t0 + dt * k as f64;
            if k % cadence == 0 || k == n_steps {
                let st = self.emit(&template, &f, &g, t);
                log.energy.push(self.energy(&st)?);
                log.boundary_flux.push(self.flux(&f, &g));
                log.times.push(t);
            }
            while snap_iter.peek().is_some_and(|&(at, _)| at == k) {
                snap_iter.next();
                log.snapshots.push(self.emit(&template, &f, &g, t));
            }
            if k == n_steps {
                break;
            }
            self.step_raw(&mut f, &mut g, dt);
            if f.iter().chain(g.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Blowup { time: t0 + dt * (k + 1) as f64, last_good: t });
            }
        }
        log.final_state = self.emit(&template, &f, &g, t0 + dt * n_steps as f64);
        Ok(log)
    }
}

/// Acceleration samples for a state under a flow (one-shot convenience).
pub fn rhs(flow: &FlowSpec, state: &FieldState) -> Result<Vec<f64>> {
    Engine::new(flow.clone(), state.grid().clone())?.rhs(state)
}

/// One time step (one-shot convenience).
pub fn step(flow: &FlowSpec, state: &FieldState, dt: f64) -> Result<FieldState> {
    Engine::new(flow.clone(), state.grid().clone())?.step(state, dt)
}

/// Evolve `initial` for a signed `duration` under `flow`, recording monitors.
pub fn evolve(
    flow: &FlowSpec,
    initial: &FieldState,
    duration: f64,
    monitors: &Monitors,
) -> Result<EvolutionLog> {
    Engine::new(flow.clone(), initial.grid().clone())?.run(initial, duration, monitors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{nonlinearity_at, solve_q, SolveSettings};
    use crate::model::{make_grid, u_to_psi};

    fn solve(ell: u32, n: u32, grid: &Arc<RadialGrid>) -> Arc<HarmonicMap> {
        Arc::new(
            solve_q(grid, ModelParams::new(ell, n).unwrap(), &SolveSettings::default()).unwrap(),
        )
    }

    fn bump(r: f64, center: f64, width: f64) -> f64 {
        (-(r - center) * (r - center) / (width * width)).exp()
    }

    /// Even, decaying profile suitable for U/Linear forms.
    fn bump_pair(grid: &RadialGrid, center: f64, width: f64, amp: f64) -> Vec<f64> {
        grid.r()
            .iter()
            .map(|&r| amp * (bump(r, center, width) + bump(r, -center, width)))
            .collect()
    }

    // ψ-form states need X ≳ 12: the harmonic-map tail α⟨r⟩^{−ℓ−1} must fall
    // below the boundary tolerance at the grid ends.

    #[test]
    fn harmonic_map_is_an_exact_fixed_point_of_the_psi_flow() {
        let grid = Arc::new(make_grid(12.0, 601).unwrap());
        let q = solve(1, 1, &grid);
        let spec = FlowSpec::psi_nonlinear(q.clone());
        let st = FieldState::full(
            grid.clone(),
            q.params(),
            Form::Psi,
            q.q().to_vec(),
            vec![0.0; grid.len()],
            0.0,
        )
        .unwrap();
        let mut engine = Engine::new(spec, grid.clone()).unwrap();
        let acc = engine.rhs(&st).unwrap();
        assert!(acc.iter().all(|&a| a == 0.0), "deviation form must make Q exactly static");
        let mut cur = st.clone();
        let dt = engine.dt_max();
        for _ in 0..50 {
            cur = engine.step(&cur, dt).unwrap();
        }
        let drift = cur
            .f()
            .iter()
            .zip(q.q())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert_eq!(drift, 0.0, "fixed point must hold bitwise");
        assert!(cur.g().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_state_stays_zero_for_every_kind() {
        let grid = Arc::new(make_grid(6.0, 201).unwrap());
        let q = solve(1, 1, &grid);
        let p = q.params();
        let zeros = vec![0.0; grid.len()];
        let specs = vec![
            (FlowSpec::u_nonlinear(q.clone()), Form::U),
            (FlowSpec::linearized(q.clone()), Form::Linear),
            (FlowSpec::free_wormhole(p), Form::U),
        ];
        for (spec, form) in specs {
            let st = FieldState::full(grid.clone(), p, form, zeros.clone(), zeros.clone(), 0.0)
                .unwrap();
            let stepped = step(&spec, &st, 0.5 * grid.spacing()).unwrap();
            assert!(stepped.f().iter().all(|&v| v == 0.0));
            assert!(stepped.g().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn u_flow_rhs_matches_the_pointwise_nonlinearity_tables() {
        let grid = Arc::new(make_grid(8.0, 401).unwrap());
        let q = solve(2, 1, &grid);
        let f = bump_pair(&grid, 1.0, 0.8, 0.4);
        let st = FieldState::full(
            grid.clone(),
            q.params(),
            Form::U,
            f.clone(),
            vec![0.0; grid.len()],
            0.0,
        )
        .unwrap();
        let mut engine = Engine::new(FlowSpec::u_nonlinear(q.clone()), grid.clone()).unwrap();
        let acc = engine.rhs(&st).unwrap();
        // Subtracting the independently assembled nonlinearity must leave
        // exactly the linear part (same floating-point expressions).
        let mut fx = vec![0.0; grid.len()];
        let mut fxx = vec![0.0; grid.len()];
        DiffOp::first().apply(&f, grid.spacing(), &mut fx);
        DiffOp::second().apply(&f, grid.spacing(), &mut fxx);
        let v = potential_v(&q);
        for i in 0..grid.len() {
            let c = grid.jacobian()[i];
            let lin = fxx[i] / (c * c)
                + (q.params().dim() as f64 - 2.0) * grid.r()[i] / c.powi(3) * fx[i]
                - v[i] * f[i];
            let want = lin + nonlinearity_at(&q, i, f[i]);
            let scale = acc[i].abs().max(1.0);
            assert!(
                (acc[i] - want).abs() <= 1e-14 * scale,
                "node {i}: engine {} vs reference {want}",
                acc[i]
            );
        }
    }

    #[test]
    fn time_reversal_returns_to_the_initial_state() {
        let grid = Arc::new(make_grid(6.0, 1601).unwrap());
        let q = solve(1, 1, &grid);
        let f = bump_pair(&grid, 1.0, 0.7, 0.3);
        let g = bump_pair(&grid, 0.5, 0.9, 0.1);
        let st =
            FieldState::full(grid.clone(), q.params(), Form::U, f.clone(), g.clone(), 0.0)
                .unwrap();
        let spec = FlowSpec::u_nonlinear(q);
        let fwd = evolve(&spec, &st, 1.0, &Monitors::default()).unwrap();
        let back = evolve(&spec, &fwd.final_state, -1.0, &Monitors::default()).unwrap();
        let err = back
            .final_state
            .f()
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-7, "forward-backward sup error {err}");
        assert!((back.final_state.time()).abs() < 1e-12);
    }

    #[test]
    fn linear_kinds_superpose_to_roundoff() {
        let grid = Arc::new(make_grid(6.0, 401).unwrap());
        let q = solve(1, 1, &grid);
        let p = q.params();
        let fa = bump_pair(&grid, 1.0, 0.6, 0.5);
        let fb = bump_pair(&grid, 2.0, 0.8, -0.3);
        let fab: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| a + b).collect();
        let zeros = vec![0.0; grid.len()];
        for (spec, form) in [
            (FlowSpec::linearized(q.clone()), Form::Linear),
            (FlowSpec::free_wormhole(p), Form::U),
        ] {
            let run = |f: &Vec<f64>| {
                let st = FieldState::full(grid.clone(), p, form, f.clone(), zeros.clone(), 0.0)
                    .unwrap();
                evolve(&spec, &st, 2.0, &Monitors::default()).unwrap().final_state
            };
            let (sa, sb, sab) = (run(&fa), run(&fb), run(&fab));
            let worst = (0..grid.len())
                .map(|i| (sa.f()[i] + sb.f()[i] - sab.f()[i]).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-11, "superposition defect {worst} for {:?}", spec.kind());
        }
    }

    #[test]
    fn psi_and_u_evolutions_agree_through_the_change_of_variables() {
        let grid = Arc::new(make_grid(12.0, 1201).unwrap());
        let q = solve(1, 1, &grid);
        let p = q.params();
        let u0 = bump_pair(&grid, 1.2, 0.8, 0.25);
        let zeros = vec![0.0; grid.len()];
        let ust = FieldState::full(grid.clone(), p, Form::U, u0, zeros, 0.0).unwrap();
        let pst = u_to_psi(&ust, &q).unwrap();
        let t_final = 2.0;
        let ulog = evolve(&FlowSpec::u_nonlinear(q.clone()), &ust, t_final, &Monitors::default())
            .unwrap();
        let plog =
            evolve(&FlowSpec::psi_nonlinear(q.clone()), &pst, t_final, &Monitors::default())
                .unwrap();
        let from_u = u_to_psi(&ulog.final_state, &q).unwrap();
        let worst = (0..grid.len())
            .map(|i| (from_u.f()[i] - plog.final_state.f()[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 2e-6, "twin-run sup discrepancy {worst}");
        // And the conserved energies agree up to the static background:
        // E_full(u) = E_ℓ(ψ) − E_ℓ(Q).
        let eu = Engine::new(FlowSpec::u_nonlinear(q.clone()), grid.clone())
            .unwrap()
            .energy(&ust)
            .unwrap();
        let ep = energy_psi(&pst).unwrap();
        let eq = energy_psi(
            &FieldState::full(
                grid.clone(),
                p,
                Form::Psi,
                q.q().to_vec(),
                vec![0.0; grid.len()],
                0.0,
            )
            .unwrap(),
        )
        .unwrap();
        // The two routes use different measures and integrands, so they only
        // agree up to quadrature truncation (observed to shrink 16× per grid
        // refinement: 1.2e−6 → 7.4e−8 → 4.6e−9 at N = 1201/2401/4801).
        let diff = (eu.total - (ep.total - eq.total)).abs();
        assert!(
            diff < 4e-6 * eu.total.abs().max(1.0),
            "u-energy {} vs psi-difference {}",
            eu.total,
            ep.total - eq.total
        );
    }

    #[test]
    fn nonlinear_energies_are_conserved_along_the_flow() {
        let grid = Arc::new(make_grid(12.0, 1201).unwrap());
        let q = solve(1, 1, &grid);
        let p = q.params();
        // ψ-flow: harmonic map plus a bump.
        let f: Vec<f64> = (0..grid.len())
            .map(|i| q.q()[i] + 0.3 * bump(grid.r()[i], 1.0, 0.7))
            .collect();
        let g = bump_pair(&grid, 0.0, 1.0, 0.05);
        let pst = FieldState::full(grid.clone(), p, Form::Psi, f, g, 0.0).unwrap();
        let plog = evolve(
            &FlowSpec::psi_nonlinear(q.clone()),
            &pst,
            3.0,
            &Monitors { energy_every: 8, snapshot_times: vec![] },
        )
        .unwrap();
        // Truncation-limited at this resolution (h⁴ ≈ 1.6e−7); the
        // fourth-order improvement of the drift is checked separately in the
        // acceptance suite at reference resolution.
        let e0 = plog.energy[0].total;
        let drift = plog
            .energy
            .iter()
            .map(|e| (e.total - e0).abs())
            .fold(0.0f64, f64::max);
        assert!(drift < 1e-5 * e0, "psi energy drift {}", drift / e0);

        // u-flow with the nonlinear potential included in the monitor.
        let u0 = bump_pair(&grid, 1.0, 0.8, 0.5);
        let zeros = vec![0.0; grid.len()];
        let ust = FieldState::full(grid.clone(), p, Form::U, u0, zeros, 0.0).unwrap();
        let ulog = evolve(
            &FlowSpec::u_nonlinear(q.clone()),
            &ust,
            3.0,
            &Monitors { energy_every: 8, snapshot_times: vec![] },
        )
        .unwrap();
        // This amplitude-0.5 bump is a strong perturbation; the drift is
        // truncation-limited (observed 9.8e−5 → 6.2e−6 → 3.9e−7 over
        // N = 1201/2401/4801, clean fourth order).
        let e0 = ulog.energy[0].total;
        let drift = ulog
            .energy
            .iter()
            .map(|e| (e.total - e0).abs())
            .fold(0.0f64, f64::max);
        assert!(
            drift < 3e-4 * e0.abs().max(1.0),
            "u energy drift {} of {}",
            drift,
            e0
        );
    }

    #[test]
    fn antisymmetric_data_stays_antisymmetric_in_the_degree_zero_flow() {
        let grid = Arc::new(make_grid(6.0, 401).unwrap());
        let q = solve(1, 0, &grid); // Q ≡ 0 in the trivial class
        let n = grid.len();
        let f: Vec<f64> = grid.r().iter().map(|&r| 0.4 * r * (-r * r / 2.0).exp()).collect();
        let g: Vec<f64> = grid.r().iter().map(|&r| 0.1 * r * (-r * r).exp()).collect();
        let st = FieldState::full(grid.clone(), q.params(), Form::Psi, f, g, 0.0).unwrap();
        let log =
            evolve(&FlowSpec::psi_nonlinear(q), &st, 2.0, &Monitors::default()).unwrap();
        let worst = (0..n)
            .map(|i| (log.final_state.f()[i] + log.final_state.f()[n - 1 - i]).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-12, "antisymmetry defect {worst}");
    }

    #[test]
    fn flat_free_wave_respects_the_light_cone() {
        let grid = Arc::new(make_grid(8.0, 3201).unwrap());
        let p = ModelParams::new(1, 0).unwrap();
        let d = 5;
        let m = grid.len() - grid.center();
        // Compactly supported bump on [3, 7]. Features at r ≈ 5 compress in
        // the stencil coordinate (dx = dr/⟨r⟩ ≈ dr/5), hence the fine grid.
        let f: Vec<f64> = (0..m)
            .map(|k| {
                let xi = (grid.r()[grid.center() + k] - 5.0) / 2.0;
                if xi.abs() < 1.0 {
                    (1.0 - xi * xi).powi(5)
                } else {
                    0.0
                }
            })
            .collect();
        let g = vec![0.0; m];
        let st = FieldState::flat(grid.clone(), p, d, 0.0, f, g, 0.0).unwrap();
        let spec = FlowSpec::free_flat(p, d, 0.0).unwrap();
        let t_final = 2.0;
        let log = evolve(&spec, &st, t_final, &Monitors::default()).unwrap();
        // Data supported in r ∈ [3, 7]: the solution must vanish for
        // r < 3 − t and r > 7 + t (up to stencil-level leakage).
        let fin = log.final_state.f();
        let margin = 0.25;
        let mut worst_in = 0.0f64;
        let mut worst_out = 0.0f64;
        for k in 0..m {
            let r = grid.r()[grid.center() + k];
            if r < 3.0 - t_final - margin {
                worst_in = worst_in.max(fin[k].abs());
            }
            if r > 7.0 + t_final + margin {
                worst_out = worst_out.max(fin[k].abs());
            }
        }
        assert!(worst_in < 1e-7, "interior causality violated: {worst_in}");
        assert!(worst_out < 1e-7, "exterior causality violated: {worst_out}");
        // Energy is conserved while the wave stays inside the domain.
        let e0 = log.energy[0].total;
        let drift = log.energy.iter().map(|e| (e.total - e0).abs()).fold(0.0f64, f64::max);
        assert!(drift < 2e-6 * e0, "flat energy drift {}", drift / e0);
    }

    #[test]
    fn flat_wall_mode_pins_the_inner_node_and_conserves_energy() {
        let grid = Arc::new(make_grid(8.0, 1601).unwrap());
        let p = ModelParams::new(1, 0).unwrap();
        let d = 5;
        let r_inner = 0.5;
        let offset = grid.first_at_least(r_inner).unwrap();
        let m = grid.len() - offset;
        let f: Vec<f64> = (0..m)
            .map(|k| bump(grid.r()[offset + k], 3.0, 1.5))
            .collect();
        let wall_value = f[0];
        let st = FieldState::flat(grid.clone(), p, d, r_inner, f, vec![0.0; m], 0.0).unwrap();
        let spec = FlowSpec::free_flat(p, d, r_inner).unwrap();
        let log = evolve(&spec, &st, 4.0, &Monitors::default()).unwrap();
        assert_eq!(log.final_state.f()[0], wall_value, "wall node must stay pinned");
        assert_eq!(log.final_state.g()[0], 0.0);
        // The wall closure keeps the reflection inside the domain; one-sided
        // rows next to the pinned node cost some accuracy relative to the
        // interior, hence the looser conservation tolerance here.
        let e0 = log.energy[0].total;
        let drift = log.energy.iter().map(|e| (e.total - e0).abs()).fold(0.0f64, f64::max);
        assert!(drift < 1e-5 * e0, "wall-mode energy drift {}", drift / e0);
    }

    #[test]
    fn self_convergence_is_fourth_order() {
        let p = ModelParams::new(1, 0).unwrap();
        let run = |n: usize| {
            let grid = Arc::new(make_grid(6.0, n).unwrap());
            let q = solve(1, 1, &grid);
            let f = bump_pair(&grid, 1.0, 0.8, 0.3);
            let st = FieldState::full(
                grid.clone(),
                q.params(),
                Form::U,
                f,
                vec![0.0; grid.len()],
                0.0,
            )
            .unwrap();
            evolve(&FlowSpec::u_nonlinear(q), &st, 1.0, &Monitors::default())
                .unwrap()
                .final_state
        };
        let _ = p;
        let (c, mid, fine) = (run(401), run(801), run(1601));
        // Common nodes: every coarse node appears in the refinements.
        let d1 = (0..401)
            .map(|i| (c.f()[i] - mid.f()[2 * i]).abs())
            .fold(0.0f64, f64::max);
        let d2 = (0..801)
            .map(|i| (mid.f()[i] - fine.f()[2 * i]).abs())
            .fold(0.0f64, f64::max);
        let rate = (d1 / d2).log2();
        assert!((3.3..=4.9).contains(&rate), "observed order {rate} (d1={d1:.3e}, d2={d2:.3e})");
    }

    #[test]
    fn linearized_flow_is_the_small_amplitude_limit_of_the_u_flow() {
        let grid = Arc::new(make_grid(8.0, 801).unwrap());
        let q = solve(1, 1, &grid);
        let p = q.params();
        let ell = p.ell() as i32;
        let profile = bump_pair(&grid, 1.0, 0.8, 1.0);
        let zeros = vec![0.0; grid.len()];
        // φ = ⟨r⟩^ℓ u conjugates the u-linearization into the ψ-linearization,
        // so evolving ε·profile nonlinearly and comparing against the evolved
        // conjugated data isolates the nonlinear defect, which scales as ε².
        let phi0: Vec<f64> = (0..grid.len())
            .map(|i| grid.jacobian()[i].powi(ell) * profile[i])
            .collect();
        let phist =
            FieldState::full(grid.clone(), p, Form::Linear, phi0, zeros.clone(), 0.0).unwrap();
        let phil = evolve(&FlowSpec::linearized(q.clone()), &phist, 1.0, &Monitors::default())
            .unwrap()
            .final_state;
        let defect = |eps: f64| {
            let u0: Vec<f64> = profile.iter().map(|v| eps * v).collect();
            let ust =
                FieldState::full(grid.clone(), p, Form::U, u0, zeros.clone(), 0.0).unwrap();
            let uf = evolve(&FlowSpec::u_nonlinear(q.clone()), &ust, 1.0, &Monitors::default())
                .unwrap()
                .final_state;
            (0..grid.len())
                .map(|i| {
                    (grid.jacobian()[i].powi(ell) * uf.f()[i] - eps * phil.f()[i]).abs()
                })
                .fold(0.0f64, f64::max)
                / eps
        };
        let (d2, d1) = (defect(1e-2), defect(5e-3));
        assert!(
            d2 > d1,
            "defect must shrink with amplitude: {d2:.3e} vs {d1:.3e}"
        );
        let ratio = d2 / d1;
        assert!(
            (1.5..=2.8).contains(&ratio),
            "defect should scale linearly in ε after division: ratio {ratio} ({d2:.3e}/{d1:.3e})"
        );
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let grid = Arc::new(make_grid(12.0, 401).unwrap());
        let q = solve(1, 1, &grid);
        let st = FieldState::full(
            grid.clone(),
            q.params(),
            Form::Psi,
            q.q().to_vec(),
            vec![0.0; grid.len()],
            0.0,
        )
        .unwrap();
        let mut engine = Engine::new(FlowSpec::psi_nonlinear(q), grid.clone()).unwrap();
        let err = engine.step(&st, 1.5 * engine.dt_max()).unwrap_err();
        assert!(matches!(err, Error::RejectedStep { .. }), "got {err:?}");
    }

    #[test]
    fn form_mismatch_is_rejected() {
        let grid = Arc::new(make_grid(6.0, 201).unwrap());
        let q = solve(1, 1, &grid);
        let zeros = vec![0.0; grid.len()];
        let ust = FieldState::full(grid.clone(), q.params(), Form::U, zeros.clone(), zeros, 0.0)
            .unwrap();
        let err = rhs(&FlowSpec::psi_nonlinear(q), &ust).unwrap_err();
        assert!(matches!(err, Error::FormMismatch { .. }), "got {err:?}");
    }

    #[test]
    fn boundary_values_stay_pinned_under_the_psi_flow() {
        let grid = Arc::new(make_grid(8.0, 801).unwrap());
        let q = solve(2, 1, &grid);
        let f: Vec<f64> = (0..grid.len())
            .map(|i| q.q()[i] + 0.4 * bump(grid.r()[i], 0.0, 1.0))
            .collect();
        let st = FieldState::full(
            grid.clone(),
            q.params(),
            Form::Psi,
            f,
            vec![0.0; grid.len()],
            0.0,
        )
        .unwrap();
        let log = evolve(&FlowSpec::psi_nonlinear(q.clone()), &st, 3.0, &Monitors::default())
            .unwrap();
        let fin = log.final_state.f();
        let right = q.params().boundary_value();
        assert!(fin[0].abs() < 1e-8, "left boundary drifted to {}", fin[0]);
        assert!(
            (fin[grid.len() - 1] - right).abs() < 1e-8,
            "right boundary drifted to {}",
            fin[grid.len() - 1]
        );
    }

    #[test]
    fn snapshots_land_at_the_requested_times() {
        let grid = Arc::new(make_grid(6.0, 401).unwrap());
        let q = solve(1, 1, &grid);
        let f = bump_pair(&grid, 1.0, 0.7, 0.2);
        let st = FieldState::full(
            grid.clone(),
            q.params(),
            Form::U,
            f,
            vec![0.0; grid.len()],
            0.0,
        )
        .unwrap();
        let monitors = Monitors { energy_every: 1000, snapshot_times: vec![0.5, 1.0] };
        let log = evolve(&FlowSpec::u_nonlinear(q), &st, 2.0, &monitors).unwrap();
        assert_eq!(log.snapshots.len(), 2);
        assert!((log.snapshots[0].time() - 0.5).abs() <= log.dt);
        assert!((log.snapshots[1].time() - 1.0).abs() <= log.dt);
        // Energy series always includes the endpoints.
        assert_eq!(log.times.first().copied().unwrap(), 0.0);
        assert_eq!(log.times.last().copied().unwrap(), 2.0);
        assert!(log.cfl <= CFL_MAX + 1e-12);
    }

    #[test]
    fn sponge_damps_outgoing_radiation() {
        let grid = Arc::new(make_grid(6.0, 801).unwrap());
        let q = solve(1, 1, &grid);
        let p = q.params();
        let f = bump_pair(&grid, 0.0, 0.8, 0.5);
        let zeros = vec![0.0; grid.len()];
        let st = FieldState::full(grid.clone(), p, Form::U, f, zeros, 0.0).unwrap();
        // Long enough that the wave crosses the boundary region (x speed ≤ 1,
        // but in r the front travels at speed 1: by t = 20 it has long left
        // |x| < 6 ⟺ |r| < 201? No: r = sinh x, the front in x slows as 1/c;
        // x-front position ≈ arcsinh(t). t = 20 → x ≈ 3.7; t = 60 → 4.8.)
        let free = FlowSpec::free_wormhole(p);
        let damped = free
            .clone()
            .with_sponge(SpongeSpec { fraction: 0.3, strength: 4.0 })
            .unwrap();
        let t_final = 80.0;
        let monitors = Monitors { energy_every: 64, snapshot_times: vec![] };
        let log_free = evolve(&free, &st, t_final, &monitors).unwrap();
        let log_damped = evolve(&damped, &st, t_final, &monitors).unwrap();
        let e_free = log_free.energy.last().unwrap().total;
        let e_damped = log_damped.energy.last().unwrap().total;
        assert!(
            e_damped < 0.5 * e_free,
            "sponge should absorb most of the outgoing energy: {e_damped} vs {e_free}"
        );
    }
}
