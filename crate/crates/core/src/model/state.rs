//! Instantaneous field data (f, g) = (field, ∂_t field) on a grid.

use super::{ModelParams, RadialGrid, BOUNDARY_TOL};
use crate::stencil::DiffOp;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which field a state holds. This fixes the natural energy measure and the
/// boundary values the samples must honor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// Full wave-map angle ψ: ψ(−∞) = 0, ψ(+∞) = nπ; measure ⟨r⟩² dr.
    Psi,
    /// Flattened perturbation u = ⟨r⟩^{−ℓ}(ψ − Q); measure ⟨r⟩^{d−1} dr.
    U,
    /// Exterior field u_e = (⟨r⟩/r)^{(d−1)/2} u on r > 0; measure r^{d−1} dr.
    Ue,
    /// Linearized/radiation field in the ψ picture; measure ⟨r⟩² dr.
    Linear,
    /// Radial free wave on flat ℝ^{1+d}, supported on r > 0; r^{d−1} dr.
    FlatFree,
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Form::Psi => "psi",
            Form::U => "u",
            Form::Ue => "u_e",
            Form::Linear => "linear",
            Form::FlatFree => "flat_free",
        };
        f.write_str(s)
    }
}

/// Immutable snapshot of a field and its time derivative on (part of) a grid.
/// Full-line forms cover every node; exterior/flat forms cover a trailing
/// sub-range of positive-r nodes (`offset`..end).
#[derive(Debug, Clone)]
pub struct FieldState {
    params: ModelParams,
    form: Form,
    time: f64,
    grid: Arc<RadialGrid>,
    offset: usize,
    /// Spatial dimension for FlatFree states (defaults to params.dim()).
    flat_dim: Option<u32>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl FieldState {
    /// Full-line state (Psi, U or Linear). Checks sample counts, finiteness
    /// and the form's boundary values at ±X.
    pub fn full(
        grid: Arc<RadialGrid>,
        params: ModelParams,
        form: Form,
        f: Vec<f64>,
        g: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        if matches!(form, Form::Ue | Form::FlatFree) {
            return Err(Error::FormMismatch {
                expected: "a full-line form (psi, u, linear)".into(),
                got: form.to_string(),
            });
        }
        let state =
            FieldState { params, form, time, grid, offset: 0, flat_dim: None, f, g };
        state.validate()?;
        Ok(state)
    }

    /// Exterior state on the positive-r nodes of `grid` (throat excluded).
    pub fn exterior(
        grid: Arc<RadialGrid>,
        params: ModelParams,
        f: Vec<f64>,
        g: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        let offset = grid.center() + 1;
        let state =
            FieldState { params, form: Form::Ue, time, grid, offset, flat_dim: None, f, g };
        state.validate()?;
        Ok(state)
    }

    /// Flat radial free-wave state in dimension `dim` (odd ≥ 3) on the nodes
    /// with r ≥ r_inner (r_inner ≥ 0; r_inner = 0 includes the origin node).
    pub fn flat(
        grid: Arc<RadialGrid>,
        params: ModelParams,
        dim: u32,
        r_inner: f64,
        f: Vec<f64>,
        g: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        if dim % 2 == 0 || dim < 3 {
            return Err(Error::InvalidArgument(format!(
                "flat dimension must be odd and >= 3, got {dim}"
            )));
        }
        if r_inner < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "inner radius must be >= 0, got {r_inner}"
            )));
        }
        let offset = grid
            .first_at_least(r_inner)
            .ok_or_else(|| Error::InvalidArgument("inner radius beyond the grid".into()))?;
        let state = FieldState {
            params,
            form: Form::FlatFree,
            time,
            grid,
            offset,
            flat_dim: Some(dim),
            f,
            g,
        };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        let n = self.grid.len() - self.offset;
        if self.f.len() != n || self.g.len() != n {
            return Err(Error::InvalidArgument(format!(
                "state covers {} nodes but carries {} / {} samples",
                n,
                self.f.len(),
                self.g.len()
            )));
        }
        if self.f.iter().chain(self.g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field sample".into()));
        }
        let tol = BOUNDARY_TOL;
        match self.form {
            Form::Psi => {
                let right = self.params.boundary_value();
                if self.f[0].abs() > tol || (self.f[n - 1] - right).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "psi boundary values off: f(-X) = {:.3e}, f(X) - nπ = {:.3e} (tol {tol:.0e})",
                        self.f[0],
                        self.f[n - 1] - right
                    )));
                }
            }
            Form::U | Form::Linear => {
                if self.f[0].abs() > tol || self.f[n - 1].abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "field must vanish at the ends: f(-X) = {:.3e}, f(X) = {:.3e}",
                        self.f[0],
                        self.f[n - 1]
                    )));
                }
            }
            // Exterior transforms may legitimately blow up toward the
            // excision point; only the outer end must have decayed.
            Form::Ue | Form::FlatFree => {
                if self.f[n - 1].abs() > 1.0 / tol {
                    return Err(Error::InvalidArgument(
                        "exterior field has not decayed at the outer boundary".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Index of the first grid node covered by the samples.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn flat_dim(&self) -> u32 {
        self.flat_dim.unwrap_or_else(|| self.params.dim())
    }

    /// The flat dimension exactly as stored: `None` unless this is a flat
    /// sub-grid state carrying its own dimension.
    pub(crate) fn raw_flat_dim(&self) -> Option<u32> {
        self.flat_dim
    }

    /// Spatial derivative ∂_r f = (∂_x f)/cosh x on the covered nodes, using
    /// fourth-order stencils with one-sided closures at the support ends.
    pub fn f_r(&self) -> Vec<f64> {
        let mut fx = vec![0.0; self.f.len()];
        DiffOp::first().apply(&self.f, self.grid.spacing(), &mut fx);
        for (k, v) in fx.iter_mut().enumerate() {
            *v /= self.grid.jacobian()[self.offset + k];
        }
        fx
    }

    /// Clone with a new time stamp (used by steppers).
    pub(crate) fn with_samples(&self, f: Vec<f64>, g: Vec<f64>, time: f64) -> Self {
        FieldState { f, g, time, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grid;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(make_grid(6.0, 101).unwrap())
    }

    #[test]
    fn boundary_enforced_for_psi() {
        let g = grid();
        let p = ModelParams::new(1, 1).unwrap();
        let n = g.len();
        let bad = FieldState::full(
            g.clone(),
            p,
            Form::Psi,
            vec![0.5; n],
            vec![0.0; n],
            0.0,
        );
        assert!(bad.is_err());
        // A tanh-like profile from 0 to π is accepted.
        let f: Vec<f64> = g
            .x()
            .iter()
            .map(|&x| std::f64::consts::PI * 0.5 * (1.0 + (x * 2.0).tanh()))
            .collect();
        let ok = FieldState::full(g.clone(), p, Form::Psi, f, vec![0.0; n], 0.0);
        assert!(ok.is_ok());
    }

    #[test]
    fn derivative_matches_analytic_profile() {
        // Needs a fine grid: the stencil error scales like h⁴ · f⁽⁵⁾ and the
        // Gaussian's fifth derivative (in x) is O(10) inside |r| < 3.
        let g = Arc::new(make_grid(6.0, 1601).unwrap());
        let p = ModelParams::new(1, 0).unwrap();
        // f(r) = exp(-r²/4) as a function of the node's r value.
        let f: Vec<f64> = g.r().iter().map(|&r| (-r * r / 4.0).exp()).collect();
        let st = FieldState::full(g.clone(), p, Form::U, f, vec![0.0; g.len()], 0.0).unwrap();
        let fr = st.f_r();
        for (i, &r) in g.r().iter().enumerate() {
            if r.abs() < 3.0 {
                let exact = -(r / 2.0) * (-r * r / 4.0).exp();
                assert!(
                    (fr[i] - exact).abs() < 2e-7,
                    "node {i}: {} vs {exact}",
                    fr[i]
                );
            }
        }
    }
}
