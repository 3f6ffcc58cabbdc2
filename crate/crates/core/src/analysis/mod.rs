//! Exterior-energy analysis of the flattened wave-map field.
//!
//! The flattened deviation `u` can be traded, on `r > 0`, for a field
//! `u_e = (⟨r⟩/r)^{(d−1)/2} u` that lives in the flat exterior energy space
//! `Ḣ¹ × L²(r ≥ R; r^{d−1} dr)` of radial waves in `d = 2ℓ + 3` spatial
//! dimensions.  This module provides the pieces of that picture that the
//! solver itself does not need but the asymptotic analysis does:
//!
//! * [`exterior`] — the conformal factor, the conjugated potential and
//!   nonlinearities together with their decay envelopes, and exterior
//!   energies over shrinking windows `{|r| ≥ R + |t|}`;
//! * [`projection`] — the orthogonal projection of exterior data onto the
//!   plane of static power tails `P(R)`, computed by two independent routes
//!   (closed-form moment identities and a Gram-matrix solve) that are
//!   cross-checked against each other;
//! * [`certify`] — a numerical certificate for the exterior-energy lower
//!   bound: free waves keep at least half of `‖π_{P(R)}^⊥ data‖²` outside
//!   one of the two light cones `{r ≥ R + |t|}`;
//! * [`resolution`] — a soliton-resolution diagnostic that strips a harmonic
//!   map and a radiation approximation from a nonlinear evolution and tracks
//!   what is left.

pub mod certify;
pub mod exterior;
pub mod projection;
pub mod resolution;

pub use certify::{certify_exterior_estimate, CertificationRecord, TOL_CERT};
pub use exterior::{
    exterior_coefficients, exterior_energy, u_to_ue, ue_factor, ExteriorCoefficients,
    WindowEnergy,
};
pub use projection::{
    plane_element, project_exterior, projection_constants, ProjectionBasisInfo, ProjectionReport,
};
pub use resolution::{
    resolution_diagnostic, RadiationFlow, ResolutionReport, DEFAULT_EXTRACTION_TIMES,
    DEFAULT_LOCAL_WINDOW,
};

/// Least-squares slope of `ln y` against `ln x`.
///
/// Points with `x ≤ 0` or `y ≤ 0` are skipped; returns `None` when fewer
/// than two usable points remain.  Used to read off power-law exponents
/// from sampled decay curves.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "slope fit needs paired samples");
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y.iter())
        .filter(|(&a, &b)| a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in &pts {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::log_log_slope;

    #[test]
    fn slope_recovers_pure_power() {
        let x: Vec<f64> = (1..40).map(|i| 1.5f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|r| 7.3 * r.powf(-2.5)).collect();
        let s = log_log_slope(&x, &y).unwrap();
        assert!((s + 2.5).abs() < 1e-12, "slope {s}");
    }

    #[test]
    fn slope_skips_nonpositive_samples() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y = [1.0, 0.0, 0.0625, 0.015625];
        let s = log_log_slope(&x, &y).unwrap();
        assert!((s + 2.0).abs() < 1e-12, "slope {s}");
    }

    #[test]
    fn slope_needs_two_points() {
        assert!(log_log_slope(&[1.0], &[1.0]).is_none());
        assert!(log_log_slope(&[1.0, 2.0], &[0.0, 0.0]).is_none());
    }
}
