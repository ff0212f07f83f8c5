//! Tabulated anti-derivative on an adaptive panel grid.
//!
//! `CumulativeTable` stores `F(z) = int_{z0}^{z} f` at panel boundaries.
//! Panels are refined until the per-panel G7-K15 estimate meets a
//! length-proportional share of the tolerance and a cubic-Hermite midpoint
//! check confirms the grid resolves `F`. Evaluation completes the nearest
//! boundary value with a partial-panel G7-K15 application, so values are
//! smooth in `z` at the accuracy of the panel rule.

use super::qk15;
use crate::error::{CdrError, Result};
use crate::real::Real;

#[derive(Debug, Clone)]
pub(crate) struct CumulativeTable<R> {
    nodes: Vec<R>,
    cums: Vec<R>,
}

impl<R: Real> CumulativeTable<R> {
    /// Tabulate the anti-derivative of `f` anchored at `z0` over [lo, hi].
    pub fn build<F>(f: &mut F, lo: R, z0: R, hi: R, tol: R, max_depth: usize) -> Result<Self>
    where
        F: FnMut(R) -> Result<R>,
    {
        assert!(lo <= z0 && z0 <= hi && lo < hi, "bad table window");
        let total_len = hi - lo;
        let mut panels: Vec<(R, R)> = Vec::new(); // (right edge, panel integral)

        let mut sides = Vec::new();
        if lo < z0 {
            sides.push((lo, z0));
        }
        if z0 < hi {
            sides.push((z0, hi));
        }
        let mut nodes = vec![lo];
        for (a, b) in sides {
            // a few seed panels per side so features away from the anchor
            // are seen before refinement starts
            let seeds = 4;
            let step = (b - a) / R::of(seeds as f64);
            for k in 0..seeds {
                let pa = a + step * R::of(k as f64);
                let pb = if k == seeds - 1 {
                    b
                } else {
                    a + step * R::of((k + 1) as f64)
                };
                subdivide(f, pa, pb, tol, total_len, 0, max_depth, &mut panels)?;
            }
        }

        let mut cums = vec![R::zero()];
        let mut acc = R::zero();
        for (edge, integral) in panels {
            acc = acc + integral;
            nodes.push(edge);
            cums.push(acc);
        }
        // shift so F(z0) = 0
        let anchor = nodes
            .iter()
            .position(|n| *n == z0)
            .expect("anchor is a panel boundary");
        let offset = cums[anchor];
        for c in &mut cums {
            *c = *c - offset;
        }
        Ok(CumulativeTable { nodes, cums })
    }

    pub fn lo(&self) -> R {
        self.nodes[0]
    }

    pub fn hi(&self) -> R {
        *self.nodes.last().unwrap()
    }

    /// F(z), completing from the nearest tabulated boundary.
    pub fn eval<F>(&self, z: R, f: &mut F) -> Result<R>
    where
        F: FnMut(R) -> Result<R>,
    {
        if z < self.lo() || z > self.hi() {
            return Err(CdrError::OutOfWindow {
                z: z.as_f64(),
                lo: self.lo().as_f64(),
                hi: self.hi().as_f64(),
            });
        }
        // nodes[k] <= z <= nodes[k+1]
        let k = match self.nodes.binary_search_by(|n| n.partial_cmp(&z).unwrap()) {
            Ok(i) => return Ok(self.cums[i]),
            Err(i) => i - 1,
        };
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        if z - a <= b - z {
            let (partial, _) = qk15(f, a, z)?;
            Ok(self.cums[k] + partial)
        } else {
            let (partial, _) = qk15(f, z, b)?;
            Ok(self.cums[k + 1] - partial)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn subdivide<R: Real, F>(
    f: &mut F,
    a: R,
    b: R,
    tol: R,
    total_len: R,
    depth: usize,
    max_depth: usize,
    out: &mut Vec<(R, R)>,
) -> Result<()>
where
    F: FnMut(R) -> Result<R>,
{
    let (v, e) = qk15(f, a, b)?;
    let mid = R::of(0.5) * (a + b);
    let (vl, _) = qk15(f, a, mid)?;
    let tol_local = tol * (b - a) / total_len;

    // cubic-Hermite midpoint prediction of F relative to the panel edges:
    // F(mid) - F(a) ~ v/2 + (b-a)(f(a) - f(b))/8
    let fa = f(a)?;
    let fb = f(b)?;
    let hermite_dev = (R::of(0.5) * v + (b - a) * (fa - fb) / R::of(8.0) - vl).abs();

    if e <= tol_local && hermite_dev <= tol_local {
        let (vr, _) = qk15(f, mid, b)?;
        out.push((mid, vl));
        out.push((b, vr));
        return Ok(());
    }
    if depth >= max_depth {
        return Err(CdrError::QuadratureNoConvergence {
            a: a.as_f64(),
            b: b.as_f64(),
            error_estimate: e.max(hermite_dev).as_f64(),
            tol: tol_local.as_f64(),
        });
    }
    subdivide(f, a, mid, tol, total_len, depth + 1, max_depth, out)?;
    subdivide(f, mid, b, tol, total_len, depth + 1, max_depth, out)
}
