//! Windowed energy norms ‖(f, g)‖² = ∫ (f_r² + g²) w(r) dr by composite
//! quadrature in x (jacobian cosh x folded into the weights).

use super::{FieldState, Form, RadialGrid, DECAY_FLAG_FACTOR};

/// Radial weight of the norm/energy integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// ⟨r⟩^p dr (wormhole measures: p = 2 for ψ, p = d−1 for u).
    Bracket(i32),
    /// |r|^p dr (flat exterior measures: p = d−1).
    FlatPower(i32),
}

impl Measure {
    /// Natural measure for a state's form.
    pub fn natural(state: &FieldState) -> Measure {
        match state.form() {
            Form::Psi | Form::Linear => Measure::Bracket(2),
            Form::U => Measure::Bracket(state.params().dim() as i32 - 1),
            Form::Ue | Form::FlatFree => Measure::FlatPower(state.flat_dim() as i32 - 1),
        }
    }

    /// Weight w(r_i) at a grid node.
    pub fn weight(&self, grid: &RadialGrid, i: usize) -> f64 {
        match *self {
            Measure::Bracket(p) => grid.jacobian()[i].powi(p),
            Measure::FlatPower(p) => grid.r()[i].abs().powi(p),
        }
    }
}

/// Integration window in r. Window edges snap outward to the first covered
/// node inside the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Full,
    /// r ≥ a (one tail).
    RightTail(f64),
    /// |r| ≥ a (both tails for full-line states).
    BothTails(f64),
    /// |r| ≤ a (interior region).
    Interior(f64),
}

/// A norm together with quality flags: `empty_window` when no nodes fell in
/// the window, `decay_flag` when |f| at a support end exceeds
/// `DECAY_FLAG_FACTOR · max|f|` (data has not decayed; tails are being cut).
#[derive(Debug, Clone, Copy)]
pub struct NormValue {
    pub value: f64,
    pub empty_window: bool,
    pub decay_flag: bool,
}

/// Contiguous index sub-ranges of [s0, s1] covered by the window.
fn window_ranges(
    grid: &RadialGrid,
    s0: usize,
    s1: usize,
    window: Window,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut push = |a: usize, b: usize| {
        if b >= a + 1 {
            out.push((a, b));
        }
    };
    match window {
        Window::Full => push(s0, s1),
        Window::RightTail(a) => {
            if let Some(i) = grid.first_at_least(a) {
                push(i.max(s0), s1);
            }
        }
        Window::BothTails(a) => {
            if let Some(j) = grid.last_at_most(-a) {
                if j >= s0 {
                    push(s0, j.min(s1));
                }
            }
            if let Some(i) = grid.first_at_least(a) {
                push(i.max(s0), s1);
            }
        }
        Window::Interior(a) => {
            let lo = grid.first_at_least(-a).unwrap_or(s1 + 1).max(s0);
            let hi = grid.last_at_most(a).map(|h| h.min(s1));
            if let Some(hi) = hi {
                if lo <= hi {
                    push(lo, hi);
                }
            }
        }
    }
    out
}

/// ‖(f, g)‖_{H(window; w dr)} for the given measure: the square root of
/// ∫ (f_r² + g²) w dr restricted to the window.
pub fn norm_window(state: &FieldState, measure: Measure, window: Window) -> NormValue {
    let grid = state.grid();
    let s0 = state.offset();
    let s1 = grid.len() - 1;
    let fr = state.f_r();
    let ranges = window_ranges(grid, s0, s1, window);
    let mut total = 0.0;
    for &(a, b) in &ranges {
        total += grid.integrate_range(a, b, |i| {
            let k = i - s0;
            (fr[k] * fr[k] + state.g()[k] * state.g()[k])
                * measure.weight(grid, i)
                * grid.jacobian()[i]
        });
    }
    let fmax = state.f().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gmax = state.g().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amp = fmax.max(gmax);
    let n = state.f().len();
    let edge = state.f()[0]
        .abs()
        .max(state.f()[n - 1].abs())
        .max(state.g()[0].abs())
        .max(state.g()[n - 1].abs());
    // Exterior forms may blow up toward the excision point by construction;
    // only the outer end matters for them.
    let edge = if state.offset() > 0 {
        state.f()[n - 1].abs().max(state.g()[n - 1].abs())
    } else {
        edge
    };
    NormValue {
        value: total.max(0.0).sqrt(),
        empty_window: ranges.is_empty(),
        decay_flag: amp > 0.0 && edge > DECAY_FLAG_FACTOR * amp,
    }
}

/// The spec-level H norm: ∫_{r ≥ r_min} (f_r² + g²) ⟨r⟩^p dr, square-rooted.
/// Pass `f64::NEG_INFINITY` for the full line.
pub fn norm_h(state: &FieldState, weight_power: i32, r_min: f64) -> NormValue {
    let window = if r_min == f64::NEG_INFINITY {
        Window::Full
    } else {
        Window::RightTail(r_min)
    };
    norm_window(state, Measure::Bracket(weight_power), window)
}
