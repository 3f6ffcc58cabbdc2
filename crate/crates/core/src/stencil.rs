//! Fourth-order finite-difference stencils and composite quadrature on
//! uniform grids.
//!
//! Interior nodes use centered five-point stencils; the two outermost nodes
//! on each side use one-sided closures of the same order. All weights are
//! generated with Fornberg's recurrence, which keeps the boundary closures
//! free of hand-transcription errors.

/// Finite-difference weights for the `order`-th derivative at `x0` over the
/// given nodes (Fornberg 1988). Exact for polynomials up to degree
/// `nodes.len() - 1`.
pub fn fd_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(order < n, "need more nodes than the derivative order");
    // c[k][j]: weight of node j for the k-th derivative.
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c[order].clone()
}

fn uniform_weights(offsets: std::ops::RangeInclusive<i64>, at: i64, order: usize) -> Vec<f64> {
    let nodes: Vec<f64> = offsets.map(|k| k as f64).collect();
    fd_weights(at as f64, &nodes, order)
}

/// Precomputed fourth-order differentiation rows for a uniform grid.
/// Row layout: weights are in units of 1/h^order; callers divide once.
#[derive(Debug, Clone)]
pub struct DiffOp {
    order: usize,
    /// Centered row, offsets −2..=2.
    centered: [f64; 5],
    /// One-sided rows for nodes 0 and 1 (offsets start at −node index).
    left: [Vec<f64>; 2],
}

impl DiffOp {
    pub fn first() -> Self {
        DiffOp {
            order: 1,
            centered: to5(uniform_weights(-2..=2, 0, 1)),
            left: [uniform_weights(0..=4, 0, 1), uniform_weights(-1..=3, 0, 1)],
        }
    }

    pub fn second() -> Self {
        DiffOp {
            order: 2,
            centered: to5(uniform_weights(-2..=2, 0, 2)),
            left: [uniform_weights(0..=5, 0, 2), uniform_weights(-1..=4, 0, 2)],
        }
    }

    /// Apply to `f` with spacing `h`, writing into `out`. One-sided closures
    /// at the two outermost nodes on each side; mirrored on the right (with a
    /// sign flip for odd derivative orders).
    pub fn apply(&self, f: &[f64], h: f64, out: &mut [f64]) {
        let n = f.len();
        assert!(n >= 6, "stencils need at least 6 nodes");
        assert_eq!(out.len(), n);
        let scale = h.powi(-(self.order as i32));
        let sign = if self.order % 2 == 1 { -1.0 } else { 1.0 };
        for (node, row) in self.left.iter().enumerate() {
            // Left closure at `node`, mirrored closure at `n-1-node`.
            let mut acc = 0.0;
            let mut acc_r = 0.0;
            for (j, w) in row.iter().enumerate() {
                let idx = j as i64 - node as i64; // offset from the node
                acc += w * f[(node as i64 + idx) as usize];
                acc_r += w * f[(n as i64 - 1 - node as i64 - idx) as usize];
            }
            out[node] = acc * scale;
            out[n - 1 - node] = sign * acc_r * scale;
        }
        for i in 2..n - 2 {
            let c = &self.centered;
            out[i] = (c[0] * f[i - 2] + c[1] * f[i - 1] + c[2] * f[i] + c[3] * f[i + 1]
                + c[4] * f[i + 2])
                * scale;
        }
    }

    /// Apply assuming two valid ghost nodes on each side of `f` (centered
    /// stencils throughout). `f` has length n + 4, `out` length n.
    pub fn apply_padded(&self, f: &[f64], h: f64, out: &mut [f64]) {
        let n = out.len();
        assert_eq!(f.len(), n + 4);
        let scale = h.powi(-(self.order as i32));
        let c = &self.centered;
        for i in 0..n {
            let p = i + 2;
            out[i] = (c[0] * f[p - 2] + c[1] * f[p - 1] + c[2] * f[p] + c[3] * f[p + 1]
                + c[4] * f[p + 2])
                * scale;
        }
    }
}

fn to5(v: Vec<f64>) -> [f64; 5] {
    [v[0], v[1], v[2], v[3], v[4]]
}

/// Composite quadrature weights for `n` uniformly spaced samples with
/// spacing `h`. Simpson's rule when the interval count is even; otherwise
/// Simpson on the leading part plus a 3/8 closure on the final three
/// intervals. Exact for polynomials of degree ≤ 3 whenever n ≥ 4.
pub fn quadrature_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 => {}
        1 => {}
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        3 => simpson(&mut w, 0, 2, h),
        4 => three_eighths(&mut w, 0, h),
        _ => {
            if (n - 1) % 2 == 0 {
                simpson(&mut w, 0, n - 1, h);
            } else {
                // Odd interval count: Simpson up to n-4, 3/8 rule on the rest.
                simpson(&mut w, 0, n - 4, h);
                three_eighths(&mut w, n - 4, h);
            }
        }
    }
    w
}

fn simpson(w: &mut [f64], lo: usize, hi: usize, h: f64) {
    debug_assert!((hi - lo) % 2 == 0 && hi > lo);
    let c = h / 3.0;
    w[lo] += c;
    w[hi] += c;
    let mut i = lo + 1;
    while i < hi {
        w[i] += 4.0 * c;
        if i + 1 < hi {
            w[i + 1] += 2.0 * c;
        }
        i += 2;
    }
}

fn three_eighths(w: &mut [f64], lo: usize, h: f64) {
    let c = 3.0 * h / 8.0;
    w[lo] += c;
    w[lo + 1] += 3.0 * c;
    w[lo + 2] += 3.0 * c;
    w[lo + 3] += c;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn centered_first_derivative_weights_match_tables() {
        let d = DiffOp::first();
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        assert!(max_err(&d.centered, &expect) < 1e-14);
    }

    #[test]
    fn centered_second_derivative_weights_match_tables() {
        let d = DiffOp::second();
        let expect = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        assert!(max_err(&d.centered, &expect) < 1e-14);
    }

    #[test]
    fn one_sided_rows_are_exact_on_quartics() {
        // p(x) = x^4 - 2x^3 + x - 5 on nodes 0..6; derivative rows at nodes 0
        // and 1 must reproduce p' and p'' exactly (degree ≤ 4 with ≥5 nodes
        // for first, ≥6 for second derivative).
        let h = 0.37;
        let xs: Vec<f64> = (0..8).map(|i| i as f64 * h).collect();
        let p: Vec<f64> = xs.iter().map(|&x| x.powi(4) - 2.0 * x.powi(3) + x - 5.0).collect();
        let dp: Vec<f64> = xs.iter().map(|&x| 4.0 * x.powi(3) - 6.0 * x * x + 1.0).collect();
        let d2p: Vec<f64> = xs.iter().map(|&x| 12.0 * x * x - 12.0 * x).collect();

        let mut out = vec![0.0; xs.len()];
        DiffOp::first().apply(&p, h, &mut out);
        assert!(max_err(&out, &dp) < 1e-10, "first derivative: {:?}", out);
        DiffOp::second().apply(&p, h, &mut out);
        assert!(max_err(&out, &d2p) < 1e-9, "second derivative: {:?}", out);
    }

    #[test]
    fn derivative_order_is_four() {
        // Global error on sin(x) should drop ~16x when h halves.
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
            let f: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
            let mut out = vec![0.0; n];
            DiffOp::first().apply(&f, h, &mut out);
            xs.iter()
                .zip(&out)
                .map(|(&x, &d)| (d - x.cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(101), err(201));
        let rate = (e1 / e2).log2();
        assert!(rate > 3.6 && rate < 4.6, "observed order {rate}");
    }

    #[test]
    fn quadrature_exact_on_cubics() {
        for n in 4usize..40 {
            let h = 0.21;
            let b = (n - 1) as f64 * h;
            let w = quadrature_weights(n, h);
            let num: f64 = (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    w[i] * (3.0 * x.powi(3) - x * x + 2.0 * x - 7.0)
                })
                .sum();
            let exact = 0.75 * b.powi(4) - b.powi(3) / 3.0 + b * b - 7.0 * b;
            assert!(
                (num - exact).abs() < 1e-11 * (1.0 + exact.abs()),
                "n = {n}: {num} vs {exact}"
            );
        }
    }

    #[test]
    fn quadrature_order_is_four() {
        let integrate = |n: usize| {
            let h = std::f64::consts::PI / (n - 1) as f64;
            let w = quadrature_weights(n, h);
            (0..n).map(|i| w[i] * (i as f64 * h).sin()).sum::<f64>()
        };
        let e1 = (integrate(51) - 2.0).abs();
        let e2 = (integrate(101) - 2.0).abs();
        let rate = (e1 / e2).log2();
        assert!(rate > 3.5 && rate < 4.7, "observed order {rate}");
    }
}
