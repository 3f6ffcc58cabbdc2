//! Pointwise coefficient fields induced by a harmonic map.
//!
//! The flattened field u (ψ = Q + ⟨r⟩^ℓ u, d = 2ℓ + 3) obeys
//!
//!   u_tt = Δ_g u − V u + F(r, u) + G(r, u),
//!   V = ℓ²/⟨r⟩⁴ + ℓ(ℓ+1)(cos 2Q − 1)/⟨r⟩²,
//!   F = ℓ(ℓ+1) ⟨r⟩^{−ℓ−2} sin²(⟨r⟩^ℓ u) sin 2Q,
//!   G = (ℓ(ℓ+1)/2) ⟨r⟩^{−ℓ−2} [2⟨r⟩^ℓ u − sin(2⟨r⟩^ℓ u)] cos 2Q,
//!
//! and the ψ-form linearization about Q carries the potential
//! ℓ(ℓ+1) cos 2Q / ⟨r⟩². All trigonometry of 2Q routes through the reduced
//! angle ±2δ so the far field keeps full relative accuracy, and the small
//! quantities x − sin x and sin²a − a² are evaluated by series/factored forms
//! to avoid cancellation.

use super::HarmonicMap;
use crate::{Error, Result};

/// x − sin x without cancellation: series below |x| = 0.1 (relative error
/// ~1e−11 at the crossover, shrinking as x⁶ below), direct form above.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x - x.sin()
    }
}

/// sin²a − a², factored as −(a − sin a)(a + sin a) to avoid cancellation.
pub(crate) fn sin_sq_minus_sq(a: f64) -> f64 {
    -x_minus_sin(a) * (a + a.sin())
}

/// V at node i: ℓ²/⟨r⟩⁴ − 2ℓ(ℓ+1) sin²δ/⟨r⟩².
pub fn potential_v_at(map: &HarmonicMap, i: usize) -> f64 {
    let c = map.grid().jacobian()[i];
    let ell = map.params().ell() as f64;
    let s = map.dev_mirror(i).sin();
    ell * ell / c.powi(4) - 2.0 * map.params().lam() * s * s / (c * c)
}

/// The flattened-field potential V on the full grid.
pub fn potential_v(map: &HarmonicMap) -> Vec<f64> {
    (0..map.grid().len()).map(|i| potential_v_at(map, i)).collect()
}

/// The ψ-linearization potential ℓ(ℓ+1) cos 2Q / ⟨r⟩² on the full grid.
pub fn linearized_potential(map: &HarmonicMap) -> Vec<f64> {
    let lam = map.params().lam();
    (0..map.grid().len())
        .map(|i| {
            let c = map.grid().jacobian()[i];
            lam * (2.0 * map.dev_mirror(i)).cos() / (c * c)
        })
        .collect()
}

/// N(r_i, u) = F + G at node i for a single sample u.
pub fn nonlinearity_at(map: &HarmonicMap, i: usize, u: f64) -> f64 {
    let lam = map.params().lam();
    let ell = map.params().ell() as i32;
    let c = map.grid().jacobian()[i];
    let theta = map.two_q_principal(i);
    let a = c.powi(ell) * u;
    let scale = lam / c.powi(ell + 2);
    let sa = a.sin();
    scale * (sa * sa * theta.sin() + 0.5 * x_minus_sin(2.0 * a) * theta.cos())
}

/// Antiderivative 𝒫(r_i, u) = ∫₀ᵘ N(r_i, v) dv of the nonlinearity in its
/// field argument,
///
///   𝒫 = (λ/⟨r⟩^{2ℓ+2}) [¼(2a − sin 2a) sin 2Q − ½(sin²a − a²) cos 2Q],
///
/// a = ⟨r⟩^ℓ u. The conserved energy of the flattened flow subtracts
/// ∫ 𝒫 ⟨r⟩^{d−1} dr from its quadratic part.
pub fn nonlinearity_antiderivative_at(map: &HarmonicMap, i: usize, u: f64) -> f64 {
    let lam = map.params().lam();
    let ell = map.params().ell() as i32;
    let c = map.grid().jacobian()[i];
    let theta = map.two_q_principal(i);
    let a = c.powi(ell) * u;
    let scale = lam / c.powi(2 * ell + 2);
    scale
        * (0.25 * x_minus_sin(2.0 * a) * theta.sin()
            - 0.5 * sin_sq_minus_sq(a) * theta.cos())
}

/// N(r, u) on the full grid.
pub fn nonlinearity(map: &HarmonicMap, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != map.grid().len() {
        return Err(Error::GridMismatch(format!(
            "nonlinearity: {} samples on a {}-node grid",
            u.len(),
            map.grid().len()
        )));
    }
    Ok((0..u.len()).map(|i| nonlinearity_at(map, i, u[i])).collect())
}

/// The nonlinearity split into its components and the quadratic/quartic
/// decomposition of F: F = ℓ(ℓ+1)⟨r⟩^{ℓ−2} sin 2Q · u² + F₀ with
/// F₀ = ℓ(ℓ+1)⟨r⟩^{−ℓ−2} sin 2Q · (sin²a − a²), a = ⟨r⟩^ℓ u.
#[derive(Debug, Clone)]
pub struct NonlinearitySplit {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Leading quadratic part of F.
    pub f_quadratic: Vec<f64>,
    /// Quartic-order remainder F₀ (exact, cancellation-free).
    pub f_remainder: Vec<f64>,
}

pub fn nonlinearity_split(map: &HarmonicMap, u: &[f64]) -> Result<NonlinearitySplit> {
    if u.len() != map.grid().len() {
        return Err(Error::GridMismatch(format!(
            "nonlinearity_split: {} samples on a {}-node grid",
            u.len(),
            map.grid().len()
        )));
    }
    let lam = map.params().lam();
    let ell = map.params().ell() as i32;
    let n = u.len();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut fq = vec![0.0; n];
    let mut f0 = vec![0.0; n];
    for i in 0..n {
        let c = map.grid().jacobian()[i];
        let theta = map.two_q_principal(i);
        let (st, ct) = (theta.sin(), theta.cos());
        let a = c.powi(ell) * u[i];
        let scale = lam / c.powi(ell + 2);
        let sa = a.sin();
        f[i] = scale * sa * sa * st;
        g[i] = 0.5 * scale * x_minus_sin(2.0 * a) * ct;
        fq[i] = lam * c.powi(ell - 2) * st * u[i] * u[i];
        f0[i] = scale * st * sin_sq_minus_sq(a);
    }
    Ok(NonlinearitySplit { f, g, f_quadratic: fq, f_remainder: f0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{solve_q, SolveSettings};
    use crate::model::{make_grid, ModelParams};
    use std::sync::Arc;

    fn map(ell: u32, n: u32) -> HarmonicMap {
        let grid = Arc::new(make_grid(12.0, 401).unwrap());
        solve_q(&grid, ModelParams::new(ell, n).unwrap(), &SolveSettings::default()).unwrap()
    }

    #[test]
    fn small_quantity_helpers_match_naive_forms_where_safe() {
        for &x in &[0.5, 1.0, 2.0, 3.0] {
            assert!((x_minus_sin(x) - (x - x.sin())).abs() < 1e-15 * x);
            let s = x.sin();
            assert!((sin_sq_minus_sq(x) - (s * s - x * x)).abs() < 1e-14 * x * x);
        }
        // Deep in the series regime the naive forms lose everything; check
        // against the leading term instead.
        let x = 1e-6;
        let lead = x * x * x / 6.0;
        assert!((x_minus_sin(x) - lead).abs() < 1e-12 * lead);
        assert!((sin_sq_minus_sq(x) + x * lead * 2.0).abs() < 1e-10 * x * lead);
    }

    #[test]
    fn degree_zero_potential_is_the_pure_centrifugal_term() {
        let grid = Arc::new(make_grid(12.0, 401).unwrap());
        let params = ModelParams::new(2, 0).unwrap();
        let m = solve_q(&grid, params, &SolveSettings::default()).unwrap();
        let v = potential_v(&m);
        for (i, &vi) in v.iter().enumerate() {
            let c = grid.jacobian()[i];
            assert_eq!(vi, 4.0 / c.powi(4));
        }
    }

    #[test]
    fn potential_is_even_and_has_the_centrifugal_tail() {
        let m = map(1, 1);
        let grid = m.grid().clone();
        let v = potential_v(&m);
        let c0 = grid.center();
        for k in 0..grid.len() / 2 {
            assert_eq!(v[c0 + k], v[c0 - k], "evenness violated at k={k}");
        }
        // ⟨r⟩⁴ V → ℓ² and the correction is O(⟨r⟩^{−2ℓ−4}): the scaled
        // correction is bounded across the whole grid (the bound constant
        // is a property of the transition region of Q, fitted here as the
        // observed sup) and settles at exactly 2ℓ(ℓ+1)α² in the far field
        // (sin δ → δ → α r^{−ℓ−1}).
        let lam = m.params().lam();
        let alpha = m.alpha();
        let mut worst = 0.0_f64;
        for i in 0..grid.len() {
            let c = grid.jacobian()[i];
            let corr = (v[i] - 1.0 / c.powi(4)).abs() * c.powi(6);
            worst = worst.max(corr);
        }
        assert!(worst.is_finite() && worst < 50.0 * lam, "scaled tail correction {worst}");
        let edge = (v[grid.len() - 1] - 1.0 / grid.jacobian()[grid.len() - 1].powi(4)).abs()
            * grid.jacobian()[grid.len() - 1].powi(6);
        let plateau = 2.0 * lam * alpha * alpha;
        assert!(
            (edge - plateau).abs() < 0.05 * plateau,
            "far-field correction {edge} vs predicted {plateau}"
        );
    }

    #[test]
    fn zero_field_produces_zero_nonlinearity() {
        let m = map(1, 1);
        let n = nonlinearity(&m, &vec![0.0; m.grid().len()]).unwrap();
        assert!(n.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonlinearity_equals_sum_of_split_parts() {
        let m = map(2, 1);
        let grid = m.grid().clone();
        let u: Vec<f64> =
            grid.r().iter().map(|&r| 0.3 * (-0.2 * r * r).exp()).collect();
        let total = nonlinearity(&m, &u).unwrap();
        let split = nonlinearity_split(&m, &u).unwrap();
        for i in 0..u.len() {
            assert!((total[i] - (split.f[i] + split.g[i])).abs() <= 1e-16 + 1e-12 * total[i].abs());
            // F = quadratic + remainder, with the remainder assembled
            // independently through the factored form.
            let recon = split.f_quadratic[i] + split.f_remainder[i];
            let scale = split.f[i]
                .abs()
                .max(split.f_quadratic[i].abs())
                .max(split.f_remainder[i].abs());
            assert!(
                (split.f[i] - recon).abs() <= 1e-14 * scale + 1e-300,
                "i={i}: F={} recon={recon}",
                split.f[i]
            );
        }
    }

    #[test]
    fn antiderivative_differentiates_back_to_the_nonlinearity() {
        let m = map(2, 1);
        let grid = m.grid().clone();
        let c0 = grid.center();
        for &k in &[0usize, 5, 20, 60, 120] {
            for &u in &[0.4f64, -0.15, 1.3e-4] {
                for &i in &[c0 + k, c0 - k] {
                    // Step scaled so ⟨r⟩^ℓ du stays small: the curvature of 𝒫
                    // lives on the scale of the rescaled argument a = ⟨r⟩^ℓ u.
                    let du = 1e-5 * u.abs() / grid.jacobian()[i].powi(2);
                    let fd = (nonlinearity_antiderivative_at(&m, i, u + du)
                        - nonlinearity_antiderivative_at(&m, i, u - du))
                        / (2.0 * du);
                    let n = nonlinearity_at(&m, i, u);
                    let scale = n.abs().max(1e-300);
                    assert!(
                        (fd - n).abs() < 1e-4 * scale,
                        "i={i} u={u}: d𝒫/du = {fd} vs N = {n}"
                    );
                }
            }
        }
        // 𝒫(·, 0) = 0 exactly.
        assert_eq!(nonlinearity_antiderivative_at(&m, c0 + 7, 0.0), 0.0);
    }

    #[test]
    fn cubic_and_quartic_envelopes_hold_on_a_sweep() {
        // |G| ≤ (2λ/3)⟨r⟩^{2ℓ−2}|u|³ exactly (|x − sin x| ≤ |x|³/6), and
        // |F₀| ≤ C⟨r⟩^{2ℓ−3}|u|⁴ with C from the decay of sin 2Q.
        let m = map(1, 1);
        let grid = m.grid().clone();
        let lam = m.params().lam();
        let ell = m.params().ell() as i32;
        // Envelope constant for F₀: |sin 2Q|·⟨r⟩^{ℓ+1} is bounded on the grid.
        let s_sup = (0..grid.len())
            .map(|i| m.two_q_principal(i).sin().abs() * grid.jacobian()[i].powi(ell + 1))
            .fold(0.0_f64, f64::max);
        let c_g = 2.0 * lam / 3.0;
        let c_f0 = lam / 3.0 * s_sup;
        let mut x = 0.123_f64;
        for _ in 0..20 {
            let u: Vec<f64> = grid
                .x()
                .iter()
                .map(|&xi| {
                    x = (x * 997.0 + xi * 0.37).sin(); // deterministic scatter in [−1,1]
                    x
                })
                .collect();
            let split = nonlinearity_split(&m, &u).unwrap();
            for i in 0..u.len() {
                let c = grid.jacobian()[i];
                let ub = u[i].abs();
                assert!(
                    split.g[i].abs() <= c_g * c.powi(2 * ell - 2) * ub.powi(3) * (1.0 + 1e-12) + 1e-300,
                    "G bound violated at i={i}"
                );
                assert!(
                    split.f_remainder[i].abs()
                        <= c_f0 * c.powi(2 * ell - 3) * ub.powi(4) * (1.0 + 1e-12) + 1e-300,
                    "F₀ bound violated at i={i}"
                );
            }
        }
    }
}
