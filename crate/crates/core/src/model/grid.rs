//! Uniform grid in the compactified coordinate x = arcsinh r.

use crate::{Error, Result};
use crate::stencil::quadrature_weights;

/// Symmetric uniform grid x_i ∈ [−X, X] with an odd number of nodes, so the
/// throat x = 0 is a grid point. Nodes are constructed by mirroring, which
/// makes x and r exactly antisymmetric and the jacobian exactly symmetric in
/// floating point.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    half_width: f64,
    spacing: f64,
    x: Vec<f64>,
    r: Vec<f64>,
    jacobian: Vec<f64>,
}

/// Build the grid: `n_points` odd (≥ 5 so the fourth-order closures fit),
/// `half_width` > 0. Spacing is 2X/(N−1); r = sinh x; jacobian dr/dx =
/// cosh x = ⟨r⟩.
pub fn make_grid(half_width: f64, n_points: usize) -> Result<RadialGrid> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid half-width must be positive and finite, got {half_width}"
        )));
    }
    if n_points % 2 == 0 || n_points < 5 {
        return Err(Error::InvalidArgument(format!(
            "grid needs an odd node count >= 5 (throat on a node), got {n_points}"
        )));
    }
    let c = n_points / 2;
    let spacing = half_width / c as f64;
    let mut x = vec![0.0; n_points];
    let mut r = vec![0.0; n_points];
    let mut jacobian = vec![0.0; n_points];
    for k in 0..=c {
        let xv = k as f64 * spacing;
        x[c + k] = xv;
        x[c - k] = -xv;
        let rv = xv.sinh();
        r[c + k] = rv;
        r[c - k] = -rv;
        let j = xv.cosh();
        jacobian[c + k] = j;
        jacobian[c - k] = j;
    }
    Ok(RadialGrid { half_width, spacing, x, r, jacobian })
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the throat node (r = 0).
    pub fn center(&self) -> usize {
        self.x.len() / 2
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// dr/dx = cosh x = ⟨r⟩ at each node.
    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Grids are interchangeable iff half-width and node count agree exactly.
    pub fn same_layout(&self, other: &RadialGrid) -> bool {
        self.half_width == other.half_width && self.x.len() == other.x.len()
    }

    /// First index with r_i ≥ a (None if past the right end).
    pub fn first_at_least(&self, a: f64) -> Option<usize> {
        let i = self.r.partition_point(|&rv| rv < a);
        (i < self.r.len()).then_some(i)
    }

    /// Last index with r_i ≤ a (None if before the left end).
    pub fn last_at_most(&self, a: f64) -> Option<usize> {
        let i = self.r.partition_point(|&rv| rv <= a);
        (i > 0).then(|| i - 1)
    }

    /// Composite fourth-order quadrature of `integrand` (a function of node
    /// index) over x on the inclusive index range. The integrand must already
    /// include any jacobian factor.
    pub fn integrate_range<F: Fn(usize) -> f64>(&self, i0: usize, i1: usize, integrand: F) -> f64 {
        if i1 < i0 {
            return 0.0;
        }
        let n = i1 - i0 + 1;
        if n == 1 {
            return 0.0;
        }
        let w = quadrature_weights(n, self.spacing);
        let mut acc = 0.0;
        for k in 0..n {
            acc += w[k] * integrand(i0 + k);
        }
        acc
    }

    /// ∫ F(x) dx over the whole grid (for order checks and diagnostics).
    pub fn integrate_x<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.integrate_range(0, self.len() - 1, |i| f(self.x[i]))
    }
}
