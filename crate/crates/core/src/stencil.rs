//! Fourth-order finite-difference first derivatives on uniform grids.

use crate::real::Real;

/// First derivative of `values` sampled with spacing `h`, fourth order.
/// Central five-point stencil in the interior, one-sided five-point
/// stencils at the two points nearest each edge. Requires n >= 5.
pub fn derivative4<R: Real>(values: &[R], h: R) -> Vec<R> {
    let n = values.len();
    assert!(n >= 5, "derivative4 needs at least 5 points");
    let c12 = R::of(12.0) * h;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i < 2 {
            let f = &values[..5];
            if i == 0 {
                (-R::of(25.0) * f[0] + R::of(48.0) * f[1] - R::of(36.0) * f[2]
                    + R::of(16.0) * f[3]
                    - R::of(3.0) * f[4])
                    / c12
            } else {
                (-R::of(3.0) * f[0] - R::of(10.0) * f[1] + R::of(18.0) * f[2]
                    - R::of(6.0) * f[3]
                    + f[4])
                    / c12
            }
        } else if i >= n - 2 {
            let f = &values[n - 5..];
            if i == n - 1 {
                (R::of(3.0) * f[0] - R::of(16.0) * f[1] + R::of(36.0) * f[2]
                    - R::of(48.0) * f[3]
                    + R::of(25.0) * f[4])
                    / c12
            } else {
                (-f[0] + R::of(6.0) * f[1] - R::of(18.0) * f[2] + R::of(10.0) * f[3]
                    + R::of(3.0) * f[4])
                    / c12
            }
        } else {
            (values[i - 2] - R::of(8.0) * values[i - 1] + R::of(8.0) * values[i + 1]
                - values[i + 2])
                / c12
        };
        out.push(d);
    }
    out
}
