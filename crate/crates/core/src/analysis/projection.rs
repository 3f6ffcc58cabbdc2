//! Orthogonal projection of exterior data onto the plane of static power
//! tails.
//!
//! Radial free waves in `d` (odd) spatial dimensions admit a finite family of
//! initial data whose evolutions carry no energy into exterior light cones:
//! the span
//!
//! ```text
//! P(R) = span{ (r^{2i−d}, 0) : 1 ≤ i ≤ k̃ } ∪ { (0, r^{2j−d}) : 1 ≤ j ≤ k },
//! k̃ = ⌊(d+2)/4⌋,   k = ⌊d/4⌋,
//! ```
//!
//! inside the exterior energy space `Ḣ¹ × L²(r ≥ R; r^{d−1} dr)`.  The
//! exterior-energy lower bound holds exactly on the orthogonal complement of
//! this plane, so everything downstream needs the projection `π_{P(R)}` and
//! its complement accurately.
//!
//! Two independent routes compute the projection coefficients:
//!
//! * **moment identities** — closed-form expressions for the coefficients
//!   built from weighted integrals `∫_R^∞ f ρ^{2i−1} dρ` and combinatorial
//!   constants (`c_j`, `d_j` below); these encode the known inverse of the
//!   Gram matrix of the power basis;
//! * **Gram solve** — assemble the Gram matrix and moment vector of the
//!   basis in the *discrete* inner product (the same finite-difference
//!   derivative and quadrature applied to data and basis alike, closed with
//!   exact power-law integrals beyond the last grid node) and solve the
//!   normal equations directly.
//!
//! The discrete route is the operative one (it makes projections of plane
//! data exact and double projection idempotent at machine precision); the
//! moment route targets the continuum coefficients, and the scaled gap
//! between the two is reported as `route_divergence`.

use crate::error::Error;
use crate::model::{FieldState, Form, ModelParams, RadialGrid};
use crate::stencil::DiffOp;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Fewest grid nodes the projection window may contain.
const MIN_WINDOW_NODES: usize = 33;

/// Combinatorial data of the power-tail plane in `d` spatial dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBasisInfo {
    /// Odd spatial dimension of the ambient flat problem.
    pub d: u32,
    /// Number of position powers `r^{2i−d}`, `i = 1..=k_tilde`.
    pub k_tilde: usize,
    /// Number of velocity powers `r^{2j−d}`, `j = 1..=k`.
    pub k: usize,
    /// `c_j = Π_{1≤l≤k} (d−2j−2l) / Π_{l≠j} (2l−2j)` for `j = 1..=k`.
    pub c: Vec<f64>,
    /// `d_j = Π_{1≤l≤k_tilde} (d+2−2j−2l) / Π_{l≠j} (2l−2j)` for
    /// `j = 1..=k_tilde`.
    pub d_coef: Vec<f64>,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Product of integer factors divided by another, reduced exactly before the
/// single floating-point division.
fn rational_product(
    num: impl Iterator<Item = i128>,
    den: impl Iterator<Item = i128>,
) -> f64 {
    let n: i128 = num.product();
    let d: i128 = den.product();
    debug_assert!(d != 0, "degenerate denominator in basis constants");
    let g = gcd(n.unsigned_abs(), d.unsigned_abs()).max(1) as i128;
    (n / g) as f64 / (d / g) as f64
}

/// Dimension counts and closed-form constants of the power-tail plane.
///
/// Rejects even `d` (the plane construction, like the sharp exterior bound
/// itself, is specific to odd dimensions) and `d < 3`.
pub fn projection_constants(d: u32) -> Result<ProjectionBasisInfo> {
    if d % 2 == 0 || d < 3 {
        return Err(Error::InvalidArgument(format!(
            "power-tail plane needs an odd spatial dimension d ≥ 3, got {d}"
        )));
    }
    let k_tilde = ((d + 2) / 4) as usize;
    let k = (d / 4) as usize;
    let di = d as i128;
    let c: Vec<f64> = (1..=k as i128)
        .map(|j| {
            rational_product(
                (1..=k as i128).map(|l| di - 2 * j - 2 * l),
                (1..=k as i128).filter(|&l| l != j).map(|l| 2 * l - 2 * j),
            )
        })
        .collect();
    let d_coef: Vec<f64> = (1..=k_tilde as i128)
        .map(|j| {
            rational_product(
                (1..=k_tilde as i128).map(|l| di + 2 - 2 * j - 2 * l),
                (1..=k_tilde as i128)
                    .filter(|&l| l != j)
                    .map(|l| 2 * l - 2 * j),
            )
        })
        .collect();
    Ok(ProjectionBasisInfo {
        d,
        k_tilde,
        k,
        c,
        d_coef,
    })
}

/// Result of projecting exterior data onto the power-tail plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// Window start actually used — the requested radius snapped outward to
    /// a grid node.
    pub r: f64,
    /// Time stamp of the projected state.
    pub t: f64,
    /// Position-tail coefficients `λ_i` of `r^{2i−d}` from the Gram solve
    /// (the operative, discretely orthogonal set).
    pub lambda: Vec<f64>,
    /// Velocity-tail coefficients `μ_j` of `r^{2j−d}` from the Gram solve.
    pub mu: Vec<f64>,
    /// The same position coefficients from the closed-form moment
    /// identities.
    pub formula_lambda: Vec<f64>,
    /// The same velocity coefficients from the closed-form moment
    /// identities.
    pub formula_mu: Vec<f64>,
    /// Largest gap between the two routes after weighting each coefficient
    /// by its natural norm scale `R^{2i−(d+2)/2}` (position) or
    /// `R^{2j−d/2}` (velocity), relative to the data norm.
    pub route_divergence: f64,
    /// Norm of the projected part, `‖π_{P(R)} data‖`.
    pub norm_pi: f64,
    /// Norm of the orthogonal remainder, `‖π_{P(R)}^⊥ data‖`.
    pub norm_pi_perp: f64,
    /// Norm of the data over the window, `‖data‖`.
    pub norm_total: f64,
    /// Frobenius condition number of the worse of the two Gram blocks.
    pub gram_condition: f64,
    /// Set when a far-field tail had to be fitted but looked unreliable
    /// (mixed signs, growth, or a divergent power-law integral); the
    /// affected corrections contribute zero.
    pub tail_flag: bool,
}

/// Power-law continuation of a sampled field beyond the last grid node:
/// `f(ρ) ≈ value · (ρ / r_max)^{−power}` for `ρ ≥ r_max`, fitted on the
/// outermost decade of radii.
#[derive(Debug, Clone, Copy)]
struct TailModel {
    value: f64,
    power: f64,
    r_max: f64,
    /// The field is numerically zero on the fitting window; every
    /// continuation integral is taken as exactly zero.
    negligible: bool,
    /// False when the window shows mixed signs or a non-decaying fit.
    clean: bool,
}

impl TailModel {
    fn fit(grid: &RadialGrid, offset: usize, samples: &[f64]) -> TailModel {
        let n = grid.len();
        let rm = grid.r_max();
        let mut model = TailModel {
            value: samples[n - 1 - offset],
            power: 0.0,
            r_max: rm,
            negligible: true,
            clean: true,
        };
        let lo = grid
            .first_at_least(rm / 10.0)
            .unwrap_or(n - 1)
            .max(offset.max(1));
        let window_max = (lo..n)
            .map(|i| samples[i - offset].abs())
            .fold(0.0f64, f64::max);
        // Only an identically zero far field counts as "no tail": even a
        // pointwise-tiny power tail carries integral mass that the moments
        // cannot afford to drop (an r^{−3} velocity tail contributes ~1/r_max
        // of its coefficient to the lowest moment).
        if window_max == 0.0 {
            return model;
        }
        model.negligible = false;
        let (mut pos, mut neg) = (false, false);
        for i in lo..n {
            let v = samples[i - offset];
            if v > 0.0 {
                pos = true;
            } else if v < 0.0 {
                neg = true;
            }
        }
        if pos && neg {
            model.clean = false;
        }
        let xs: Vec<f64> = (lo..n).map(|i| grid.r()[i]).collect();
        let ys: Vec<f64> = (lo..n).map(|i| samples[i - offset].abs()).collect();
        match super::log_log_slope(&xs, &ys) {
            Some(slope) if slope < 0.0 => model.power = -slope,
            _ => model.clean = false,
        }
        model
    }

    /// `∫_{r_max}^∞ f ρ^q dρ` under the fitted law; zero with `flag` set when
    /// the continuation does not safely converge.
    fn moment(&self, q: i32, flag: &mut bool) -> f64 {
        if self.negligible {
            return 0.0;
        }
        if !self.clean {
            *flag = true;
        }
        let margin = self.power - q as f64 - 1.0;
        if margin <= 0.0 {
            *flag = true;
            return 0.0;
        }
        if margin < 0.25 {
            *flag = true;
        }
        self.value * self.r_max.powi(q + 1) / margin
    }

    /// `∫_{r_max}^∞ f' ρ^q dρ` under the fitted law.
    fn deriv_moment(&self, q: i32, flag: &mut bool) -> f64 {
        if self.negligible {
            return 0.0;
        }
        if !self.clean {
            *flag = true;
        }
        let margin = self.power - q as f64;
        if margin <= 0.0 {
            *flag = true;
            return 0.0;
        }
        if margin < 0.25 {
            *flag = true;
        }
        -self.power * self.value * self.r_max.powi(q) / margin
    }

    /// `∫_{r_max}^∞ (f')² ρ^{d−1} dρ` under the fitted law.
    fn grad_energy(&self, d: i32, flag: &mut bool) -> f64 {
        if self.negligible {
            return 0.0;
        }
        if !self.clean {
            *flag = true;
        }
        let margin = 2.0 * self.power + 2.0 - d as f64;
        if margin <= 0.0 {
            *flag = true;
            return 0.0;
        }
        if margin < 0.25 {
            *flag = true;
        }
        self.power * self.power * self.value * self.value * self.r_max.powi(d - 2) / margin
    }

    /// `∫_{r_max}^∞ f² ρ^{d−1} dρ` under the fitted law.
    fn sq_energy(&self, d: i32, flag: &mut bool) -> f64 {
        if self.negligible {
            return 0.0;
        }
        if !self.clean {
            *flag = true;
        }
        let margin = 2.0 * self.power - d as f64;
        if margin <= 0.0 {
            *flag = true;
            return 0.0;
        }
        if margin < 0.25 {
            *flag = true;
        }
        self.value * self.value * self.r_max.powi(d) / margin
    }
}

/// Solve a small dense symmetric system by Gaussian elimination with partial
/// pivoting.  The blocks here are at most a few rows, so no factorization
/// library is warranted.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))
            .expect("non-empty pivot search");
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidArgument(
                "singular Gram block in power-tail projection".into(),
            ));
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for idx in col..=n {
                m[row][idx] -= factor * m[col][idx];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for idx in row + 1..n {
            acc -= m[row][idx] * x[idx];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|row| row.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Frobenius condition number `‖A‖_F · ‖A⁻¹‖_F`; infinite when singular.
fn condition(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let mut inv_sq = 0.0;
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        match solve_dense(a, &e) {
            Ok(x) => inv_sq += x.iter().map(|v| v * v).sum::<f64>(),
            Err(_) => return f64::INFINITY,
        }
    }
    frobenius(a) * inv_sq.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn quadratic_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    m.iter().zip(v.iter()).map(|(row, &x)| x * dot(row, v)).sum()
}

/// Orthogonal projection of exterior data onto the power-tail plane over
/// `{r ≥ radius}`.
///
/// Accepts flat exterior forms (`u_e` on the half line, or flat free-wave
/// data); the requested window start is snapped outward to the first grid
/// node at or beyond `radius` and reported back.  Both coefficient routes
/// are evaluated and cross-checked.
pub fn project_exterior(state: &FieldState, radius: f64) -> Result<ProjectionReport> {
    if !matches!(state.form(), Form::Ue | Form::FlatFree) {
        return Err(Error::FormMismatch {
            expected: "an exterior flat form (u_e or flat free-wave data)".into(),
            got: state.form().to_string(),
        });
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "projection window must start at a finite radius > 0, got {radius}"
        )));
    }
    let d = state.flat_dim();
    let info = projection_constants(d)?;
    let di = d as i32;
    let dd = d as f64;
    let (kt, k) = (info.k_tilde, info.k);

    let grid = state.grid();
    let n = grid.len();
    let rs = grid.r();
    let jac = grid.jacobian();
    let offset = state.offset();
    // First covered node with r > 0: power-law basis samples exist from here.
    let base = if rs[offset] > 0.0 { offset } else { offset + 1 };
    let i0 = grid.first_at_least(radius).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "projection window start r = {radius} lies beyond the grid edge r = {:.3}",
            grid.r_max()
        ))
    })?;
    if i0 < base + 2 {
        return Err(Error::InvalidArgument(format!(
            "projection window start r = {radius} sits at the inner edge of the covered \
             range (node {i0}, covered from {base}); move it outward"
        )));
    }
    if n - i0 < MIN_WINDOW_NODES {
        return Err(Error::DomainTooSmall(format!(
            "only {} grid nodes beyond r = {radius}; the projection window needs at least \
             {MIN_WINDOW_NODES}",
            n - i0
        )));
    }
    let rw = rs[i0];
    let rm = grid.r_max();

    let f = state.f();
    let g = state.g();
    let fr = state.f_r();
    let tail_f = TailModel::fit(grid, offset, f);
    let tail_g = TailModel::fit(grid, offset, g);
    let mut tail_flag = false;

    // Weighted quadrature over the window [rw, rm]; integrand given per grid
    // node index, measure r^{d−1} dr.
    let quad = |integrand: &dyn Fn(usize) -> f64| -> f64 {
        grid.integrate_range(i0, n - 1, |idx| {
            integrand(idx) * rs[idx].powi(di - 1) * jac[idx]
        })
    };

    // Basis samples and their discrete derivatives on the positive-radius
    // covered range, differentiated exactly like the data so that plane data
    // reproduces itself through the Gram route.
    let h = grid.spacing();
    let d1 = DiffOp::first();
    let cov = n - base;
    let mut phi: Vec<Vec<f64>> = Vec::with_capacity(kt);
    let mut phi_r: Vec<Vec<f64>> = Vec::with_capacity(kt);
    for i in 1..=kt {
        let p: Vec<f64> = (base..n).map(|idx| rs[idx].powi(2 * i as i32 - di)).collect();
        let mut px = vec![0.0; cov];
        d1.apply(&p, h, &mut px);
        for (kk, v) in px.iter_mut().enumerate() {
            *v /= jac[base + kk];
        }
        phi.push(p);
        phi_r.push(px);
    }

    // Gram blocks: window quadrature plus exact power-law integrals beyond
    // the last node.
    let mut a_win = vec![vec![0.0; kt]; kt];
    let mut a_tail = vec![vec![0.0; kt]; kt];
    for i in 0..kt {
        for j in i..kt {
            let w = quad(&|idx| phi_r[i][idx - base] * phi_r[j][idx - base]);
            let (pi_, pj) = (2 * (i as i32 + 1), 2 * (j as i32 + 1));
            let t = ((pi_ - di) * (pj - di)) as f64 * rm.powi(pi_ + pj - di - 2)
                / (di + 2 - pi_ - pj) as f64;
            a_win[i][j] = w;
            a_win[j][i] = w;
            a_tail[i][j] = t;
            a_tail[j][i] = t;
        }
    }
    let mut b_win = vec![vec![0.0; k]; k];
    let mut b_tail = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let (pi_, pj) = (2 * (i as i32 + 1), 2 * (j as i32 + 1));
            let w = quad(&|idx| rs[idx].powi(pi_ - di) * rs[idx].powi(pj - di));
            let t = rm.powi(pi_ + pj - di) / (di - pi_ - pj) as f64;
            b_win[i][j] = w;
            b_win[j][i] = w;
            b_tail[i][j] = t;
            b_tail[j][i] = t;
        }
    }
    let gram_a: Vec<Vec<f64>> = a_win
        .iter()
        .zip(a_tail.iter())
        .map(|(wr, tr)| wr.iter().zip(tr.iter()).map(|(w, t)| w + t).collect())
        .collect();
    let gram_b: Vec<Vec<f64>> = b_win
        .iter()
        .zip(b_tail.iter())
        .map(|(wr, tr)| wr.iter().zip(tr.iter()).map(|(w, t)| w + t).collect())
        .collect();

    // Moment vectors of the data against the basis, window plus fitted tail.
    let mut b_lam = vec![0.0; kt];
    let mut b_lam_tail = vec![0.0; kt];
    for i in 0..kt {
        let p = 2 * (i as i32 + 1);
        let w = quad(&|idx| fr[idx - offset] * phi_r[i][idx - base]);
        let t = (p - di) as f64 * tail_f.deriv_moment(p - 2, &mut tail_flag);
        b_lam[i] = w + t;
        b_lam_tail[i] = t;
    }
    let mut b_mu = vec![0.0; k];
    let mut b_mu_tail = vec![0.0; k];
    for j in 0..k {
        let p = 2 * (j as i32 + 1);
        let w = quad(&|idx| g[idx - offset] * rs[idx].powi(p - di));
        let t = tail_g.moment(p - 1, &mut tail_flag);
        b_mu[j] = w + t;
        b_mu_tail[j] = t;
    }

    let lambda = solve_dense(&gram_a, &b_lam)?;
    let mu = solve_dense(&gram_b, &b_mu)?;
    let gram_condition = condition(&gram_a).max(condition(&gram_b));

    // Closed-form route: weighted moments of the raw fields from rw outward.
    let mut m_f = vec![0.0; kt]; // m_f[i] = ∫ f ρ^{2i−1} dρ, index i = 1..k̃−1 used
    for i in 1..kt {
        let q = 2 * i as i32 - 1;
        m_f[i] = quad(&|idx| f[idx - offset] * rs[idx].powi(q - (di - 1)))
            + tail_f.moment(q, &mut tail_flag);
    }
    let mut m_g = vec![0.0; k + 1]; // m_g[i] = ∫ g ρ^{2i−1} dρ, i = 1..k
    for i in 1..=k {
        let q = 2 * i as i32 - 1;
        m_g[i] = quad(&|idx| g[idx - offset] * rs[idx].powi(q - (di - 1)))
            + tail_g.moment(q, &mut tail_flag);
    }
    let f_at_rw = f[i0 - offset];
    let mut formula_lambda = Vec::with_capacity(kt);
    for j in 1..=kt {
        let ji = j as i32;
        let mut acc = f_at_rw * rw.powi(di - 2 * ji);
        for i in 1..kt {
            let ii = i as i32;
            acc += (2 * i) as f64 * info.d_coef[i] * rw.powi(di - 2 * ii - 2 * ji)
                / (di - 2 * ii - 2 * ji) as f64
                * m_f[i];
        }
        formula_lambda.push(info.d_coef[j - 1] / (di - 2 * ji) as f64 * acc);
    }
    let mut formula_mu = Vec::with_capacity(k);
    for j in 1..=k {
        let ji = j as i32;
        let mut acc = 0.0;
        for i in 1..=k {
            let ii = i as i32;
            acc += info.c[i - 1] * info.c[j - 1] * rw.powi(di - 2 * ii - 2 * ji)
                / (di - 2 * ii - 2 * ji) as f64
                * m_g[i];
        }
        formula_mu.push(acc);
    }

    // Norms.  The total and the remainder are integrated discretely with the
    // same quadrature and closed with tail models, so the orthogonal split
    // is consistent by construction.
    let t_ff =
        tail_f.grad_energy(di, &mut tail_flag) + tail_g.sq_energy(di, &mut tail_flag);
    let total_sq = quad(&|idx| {
        let dfr = fr[idx - offset];
        let gg = g[idx - offset];
        dfr * dfr + gg * gg
    }) + t_ff;
    let pi_sq = quadratic_form(&gram_a, &lambda) + quadratic_form(&gram_b, &mu);
    let perp_window = quad(&|idx| {
        let mut res_fr = fr[idx - offset];
        for (i, &l) in lambda.iter().enumerate() {
            res_fr -= l * phi_r[i][idx - base];
        }
        let mut res_g = g[idx - offset];
        for (j, &m) in mu.iter().enumerate() {
            res_g -= m * rs[idx].powi(2 * (j as i32 + 1) - di);
        }
        res_fr * res_fr + res_g * res_g
    });
    let t_pp = quadratic_form(&a_tail, &lambda) + quadratic_form(&b_tail, &mu);
    let t_fp = dot(&lambda, &b_lam_tail) + dot(&mu, &b_mu_tail);
    let perp_sq = (perp_window + t_ff + t_pp - 2.0 * t_fp).max(0.0);

    let norm_total = total_sq.max(0.0).sqrt();
    let scale = norm_total.max(1e-300);
    let mut route_divergence = 0.0f64;
    for j in 0..kt {
        let weight = rw.powf(2.0 * (j as f64 + 1.0) - (dd + 2.0) / 2.0);
        route_divergence =
            route_divergence.max((lambda[j] - formula_lambda[j]).abs() * weight);
    }
    for j in 0..k {
        let weight = rw.powf(2.0 * (j as f64 + 1.0) - dd / 2.0);
        route_divergence = route_divergence.max((mu[j] - formula_mu[j]).abs() * weight);
    }
    route_divergence /= scale;

    Ok(ProjectionReport {
        r: rw,
        t: state.time(),
        lambda,
        mu,
        formula_lambda,
        formula_mu,
        route_divergence,
        norm_pi: pi_sq.max(0.0).sqrt(),
        norm_pi_perp: perp_sq.sqrt(),
        norm_total,
        gram_condition,
        tail_flag,
    })
}

/// Sampled element of the power-tail plane as flat free-wave data:
/// `f = Σ_i lambda[i−1] r^{2i−d}`, `g = Σ_j mu[j−1] r^{2j−d}` on
/// `{r ≥ r_inner}` with `r_inner > 0`.
pub fn plane_element(
    grid: &Arc<RadialGrid>,
    params: ModelParams,
    flat_dim: u32,
    r_inner: f64,
    lambda: &[f64],
    mu: &[f64],
    time: f64,
) -> Result<FieldState> {
    let info = projection_constants(flat_dim)?;
    if lambda.len() > info.k_tilde || mu.len() > info.k {
        return Err(Error::InvalidArgument(format!(
            "plane element in d = {flat_dim} takes at most {} position and {} velocity \
             coefficients, got {} and {}",
            info.k_tilde,
            info.k,
            lambda.len(),
            mu.len()
        )));
    }
    if !(r_inner.is_finite() && r_inner > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power tails blow up at the origin; the inner radius must be positive, got \
             {r_inner}"
        )));
    }
    let offset = grid.first_at_least(r_inner).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "inner radius {r_inner} lies beyond the grid edge r = {:.3}",
            grid.r_max()
        ))
    })?;
    let di = flat_dim as i32;
    let sample = |coeffs: &[f64], r: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, &cf)| cf * r.powi(2 * (i as i32 + 1) - di))
            .sum()
    };
    let f: Vec<f64> = (offset..grid.len())
        .map(|idx| sample(lambda, grid.r()[idx]))
        .collect();
    let g: Vec<f64> = (offset..grid.len())
        .map(|idx| sample(mu, grid.r()[idx]))
        .collect();
    FieldState::flat(grid.clone(), params, flat_dim, r_inner, f, g, time)
}
