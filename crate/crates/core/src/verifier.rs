//! Independent certification by integrating the full CDR equation.
//!
//! The closed form supplies exact initial data at `t0` and exact Dirichlet
//! values at both ends of a truncated x-interval, so agreement of the
//! finite-difference solution with the reconstructed `W` over `[t0, t1]`
//! certifies the closed form against the PDE itself.
//!
//! Spatial discretisation is conservative: diffusive and convective fluxes
//! at cell faces with face-averaged coefficients and centred `W`. Time
//! stepping is trapezoidal (Crank-Nicolson) for everything linear in `W`; a
//! `W`-nonlinear reaction remainder is advanced with a second-order
//! predictor-corrector (Heun) pass. The reaction splits symbolically as
//! `rho(z, y) = rho(z, 0) + d(rho)/dy|_{y=0} y + nonlinear remainder`.

use crate::error::{CdrError, Result};
use crate::expr::Expr;
use crate::real::Real;
use crate::scaling::SolvableSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<R> {
    pub x_min: R,
    pub x_max: R,
    pub nx: usize,
    pub t0: R,
    pub t1: R,
    pub nt: usize,
}

impl<R: Real> Grid1D<R> {
    pub fn new(x_min: R, x_max: R, nx: usize, t0: R, t1: R, nt: usize) -> Result<Self> {
        if nx < 9 {
            return Err(CdrError::GridTooCoarse { n: nx, min: 9 });
        }
        if !(x_min < x_max) {
            return Err(CdrError::Domain {
                what: format!("x_min {x_min} must be below x_max {x_max}"),
            });
        }
        if !(t0 > R::zero()) {
            return Err(CdrError::Domain {
                what: format!("t0 must be positive, got {t0}"),
            });
        }
        if t1 < t0 {
            return Err(CdrError::Domain {
                what: format!("t1 = {t1} must not precede t0 = {t0}"),
            });
        }
        Ok(Grid1D {
            x_min,
            x_max,
            nx,
            t0,
            t1,
            nt,
        })
    }

    pub fn dx(&self) -> R {
        (self.x_max - self.x_min) / R::of((self.nx - 1) as f64)
    }

    pub fn dt(&self) -> R {
        if self.nt == 0 {
            R::zero()
        } else {
            (self.t1 - self.t0) / R::of(self.nt as f64)
        }
    }

    pub fn xs(&self) -> Vec<R> {
        let dx = self.dx();
        (0..self.nx)
            .map(|i| {
                if i == self.nx - 1 {
                    self.x_max
                } else {
                    self.x_min + dx * R::of(i as f64)
                }
            })
            .collect()
    }

    /// One refinement level: halving dx and dt.
    pub fn refined(&self) -> Grid1D<R> {
        Grid1D {
            nx: 2 * (self.nx - 1) + 1,
            nt: 2 * self.nt,
            ..*self
        }
    }
}

/// Stored snapshots of a finite-difference run. All values finite.
#[derive(Debug, Clone)]
pub struct GridField<R: Real> {
    pub grid: Grid1D<R>,
    pub times: Vec<R>,
    pub snapshots: Vec<Vec<R>>,
}

impl<R: Real> GridField<R> {
    pub fn final_time(&self) -> R {
        *self.times.last().unwrap()
    }

    pub fn final_values(&self) -> &[R] {
        self.snapshots.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport<R> {
    pub linf: R,
    /// dx-weighted l2 norm.
    pub l2: R,
    pub relative_linf: R,
    pub converged: bool,
}

struct ReactionSplit<R: Real> {
    /// rho(z, 0)
    source: Expr<R>,
    /// d(rho)/dy at y = 0
    linear: Expr<R>,
    rho: Expr<R>,
    nonlinear: bool,
}

impl<R: Real> ReactionSplit<R> {
    fn of(sys: &SolvableSystem<R>) -> Self {
        let rho = sys.profiles().rho().clone();
        let zero = Expr::num(0.0);
        let d_rho = rho.differentiate("y");
        ReactionSplit {
            source: rho.substitute_var("y", &zero).simplified(),
            linear: d_rho.substitute_var("y", &zero).simplified(),
            nonlinear: d_rho.references_var("y"),
            rho,
        }
    }
}

/// Node-sampled PDE coefficients at one time level.
struct Coeffs<R> {
    diffusion: Vec<R>,
    convection: Vec<R>,
    /// diagonal reaction coefficient (linear-in-W part)
    reaction_lin: Vec<R>,
    source: Vec<R>,
}

fn coeffs_at<R: Real>(
    sys: &SolvableSystem<R>,
    split: &ReactionSplit<R>,
    xs: &[R],
    t: R,
) -> Result<Coeffs<R>> {
    let e = sys.exponents();
    let td = t.powf(e.delta);
    let tg = t.powf(e.gamma);
    let tr = t.powf(e.rho_exp);
    let t_inv = R::one() / t;
    let mut b = sys.bindings_at(R::zero(), None);
    let mut out = Coeffs {
        diffusion: Vec::with_capacity(xs.len()),
        convection: Vec::with_capacity(xs.len()),
        reaction_lin: Vec::with_capacity(xs.len()),
        source: Vec::with_capacity(xs.len()),
    };
    let t_alpha = t.powf(e.alpha);
    for &x in xs {
        let z = x / t_alpha;
        b.set("z", z);
        out.diffusion.push(td * sys.profiles().sigma().eval(&b)?);
        out.convection.push(tg * sys.profiles().tau().eval(&b)?);
        out.reaction_lin.push(t_inv * split.linear.eval(&b)?);
        out.source.push(tr * split.source.eval(&b)?);
    }
    for v in out
        .diffusion
        .iter()
        .chain(&out.convection)
        .chain(&out.reaction_lin)
        .chain(&out.source)
    {
        if !v.is_finite() {
            return Err(CdrError::NonFinite {
                what: format!("PDE coefficient at t = {t}"),
            });
        }
    }
    Ok(out)
}

/// Tridiagonal operator rows (interior nodes 1..nx-2) of the linear part.
struct Operator<R> {
    lower: Vec<R>,
    diag: Vec<R>,
    upper: Vec<R>,
}

fn assemble<R: Real>(c: &Coeffs<R>, dx: R) -> Operator<R> {
    let n = c.diffusion.len();
    let half = R::of(0.5);
    let dx2 = dx * dx;
    let mut op = Operator {
        lower: vec![R::zero(); n],
        diag: vec![R::zero(); n],
        upper: vec![R::zero(); n],
    };
    for i in 1..n - 1 {
        let dp = half * (c.diffusion[i] + c.diffusion[i + 1]);
        let dm = half * (c.diffusion[i - 1] + c.diffusion[i]);
        let cp = half * (c.convection[i] + c.convection[i + 1]);
        let cm = half * (c.convection[i - 1] + c.convection[i]);
        op.lower[i] = dm / dx2 + cm / (dx + dx);
        op.diag[i] = -(dp + dm) / dx2 - (cp - cm) / (dx + dx) + c.reaction_lin[i];
        op.upper[i] = dp / dx2 - cp / (dx + dx);
    }
    op
}

fn apply<R: Real>(op: &Operator<R>, w: &[R], i: usize) -> R {
    op.lower[i] * w[i - 1] + op.diag[i] * w[i] + op.upper[i] * w[i + 1]
}

/// Thomas solve of the interior system; `lower/diag/upper/rhs` are indexed
/// by interior position 0..m-1.
fn thomas<R: Real>(lower: &[R], diag: &[R], upper: &[R], rhs: &[R]) -> Vec<R> {
    let m = rhs.len();
    let mut c_star = vec![R::zero(); m];
    let mut d_star = vec![R::zero(); m];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - lower[i] * c_star[i - 1];
        c_star[i] = upper[i] / denom;
        d_star[i] = (rhs[i] - lower[i] * d_star[i - 1]) / denom;
    }
    let mut x = vec![R::zero(); m];
    x[m - 1] = d_star[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d_star[i] - c_star[i] * x[i + 1];
    }
    x
}

fn nonlinear_term<R: Real>(
    sys: &SolvableSystem<R>,
    split: &ReactionSplit<R>,
    xs: &[R],
    w: &[R],
    t: R,
) -> Result<Vec<R>> {
    let e = sys.exponents();
    let tr = t.powf(e.rho_exp);
    let tm = t.powf(-e.mu);
    let t_alpha = t.powf(e.alpha);
    let mut b = sys.bindings_at(R::zero(), None);
    let mut out = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let z = x / t_alpha;
        let y_bar = tm * w[i];
        b.set("z", z);
        b.set("y", y_bar);
        let full = split.rho.eval(&b)?;
        let lin = split.source.eval(&b)? + split.linear.eval(&b)? * y_bar;
        out.push(tr * (full - lin));
    }
    Ok(out)
}

/// Advance the full CDR equation over the grid with exact initial and
/// Dirichlet boundary data from the closed form. Stores a snapshot every
/// `snapshot_stride` steps (and always the initial and final levels).
pub fn integrate_with_snapshots<R: Real>(
    sys: &SolvableSystem<R>,
    grid: &Grid1D<R>,
    snapshot_stride: usize,
) -> Result<GridField<R>> {
    let xs = grid.xs();
    let nx = grid.nx;
    let mut w: Vec<R> = xs
        .iter()
        .map(|&x| sys.reconstruct_w(x, grid.t0))
        .collect::<Result<_>>()?;

    let mut times = vec![grid.t0];
    let mut snapshots = vec![w.clone()];
    if grid.nt == 0 || grid.t1 == grid.t0 {
        return Ok(GridField {
            grid: *grid,
            times,
            snapshots,
        });
    }

    let split = ReactionSplit::of(sys);
    let dt = grid.dt();
    let dx = grid.dx();
    let half_dt = R::of(0.5) * dt;

    // advisory only: Crank-Nicolson is unconditionally stable for the
    // linear part, but a large explicit reaction step degrades accuracy
    let c0 = coeffs_at(sys, &split, &xs, grid.t0)?;
    let max_d = c0
        .diffusion
        .iter()
        .fold(R::zero(), |acc, d| acc.max(d.abs()));
    if max_d > R::zero() && dt > dx * dx / (R::of(2.0) * max_d) {
        log::warn!(
            "dt = {dt} exceeds dx^2 / (2 max D) = {}; explicit reaction terms may lose accuracy",
            (dx * dx / (R::of(2.0) * max_d))
        );
    }

    let mut coeffs_old = c0;
    for step in 0..grid.nt {
        let t_old = grid.t0 + dt * R::of(step as f64);
        let t_new = if step + 1 == grid.nt {
            grid.t1
        } else {
            grid.t0 + dt * R::of((step + 1) as f64)
        };
        let coeffs_new = coeffs_at(sys, &split, &xs, t_new)?;
        let op_old = assemble(&coeffs_old, dx);
        let op_new = assemble(&coeffs_new, dx);

        let wb_left = sys.reconstruct_w(xs[0], t_new)?;
        let wb_right = sys.reconstruct_w(xs[nx - 1], t_new)?;

        // explicit half-step of the linear part plus the averaged source
        let mut explicit = vec![R::zero(); nx];
        for i in 1..nx - 1 {
            explicit[i] = w[i]
                + half_dt
                    * (apply(&op_old, &w, i) + coeffs_old.source[i] + coeffs_new.source[i]);
        }

        // interior matrix I - dt/2 A_new
        let m = nx - 2;
        let mut lower = vec![R::zero(); m];
        let mut diag = vec![R::zero(); m];
        let mut upper = vec![R::zero(); m];
        for k in 0..m {
            let i = k + 1;
            lower[k] = -half_dt * op_new.lower[i];
            diag[k] = R::one() - half_dt * op_new.diag[i];
            upper[k] = -half_dt * op_new.upper[i];
        }

        let boundary_term = |k: usize| -> R {
            let i = k + 1;
            if i == 1 {
                half_dt * op_new.lower[1] * wb_left
            } else if i == nx - 2 {
                half_dt * op_new.upper[nx - 2] * wb_right
            } else {
                R::zero()
            }
        };

        let solve = |g_terms: &[R]| -> Vec<R> {
            let rhs: Vec<R> = (0..m)
                .map(|k| explicit[k + 1] + g_terms[k + 1] + boundary_term(k))
                .collect();
            thomas(&lower, &diag, &upper, &rhs)
        };

        let interior = if split.nonlinear {
            let g_old = nonlinear_term(sys, &split, &xs, &w, t_old)?;
            // predictor: explicit Euler on the nonlinear remainder
            let g_full: Vec<R> = g_old.iter().map(|&g| dt * g).collect();
            let predicted = solve(&g_full);
            let mut w_pred = w.clone();
            w_pred[0] = wb_left;
            w_pred[nx - 1] = wb_right;
            w_pred[1..nx - 1].copy_from_slice(&predicted);
            // corrector: trapezoidal average of the nonlinear remainder
            let g_new = nonlinear_term(sys, &split, &xs, &w_pred, t_new)?;
            let g_avg: Vec<R> = g_old
                .iter()
                .zip(&g_new)
                .map(|(&a, &b)| half_dt * (a + b))
                .collect();
            solve(&g_avg)
        } else {
            solve(&vec![R::zero(); nx])
        };

        w[0] = wb_left;
        w[nx - 1] = wb_right;
        w[1..nx - 1].copy_from_slice(&interior);

        if w.iter().any(|v| !v.is_finite()) {
            return Err(CdrError::Diverged { step });
        }

        let last = step + 1 == grid.nt;
        if last || (snapshot_stride > 0 && (step + 1) % snapshot_stride == 0) {
            times.push(t_new);
            snapshots.push(w.clone());
        }
        coeffs_old = coeffs_new;
    }

    Ok(GridField {
        grid: *grid,
        times,
        snapshots,
    })
}

/// Advance storing only the initial and final levels.
pub fn integrate<R: Real>(sys: &SolvableSystem<R>, grid: &Grid1D<R>) -> Result<GridField<R>> {
    integrate_with_snapshots(sys, grid, 0)
}

/// Norms of the final snapshot against the reconstructed closed form.
pub fn compare<R: Real>(field: &GridField<R>, sys: &SolvableSystem<R>) -> Result<ErrorReport<R>> {
    let xs = field.grid.xs();
    let t = field.final_time();
    let w = field.final_values();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(CdrError::Diverged { step: field.grid.nt });
    }
    let mut linf = R::zero();
    let mut sum_sq = R::zero();
    let mut w_max = R::zero();
    for (i, &x) in xs.iter().enumerate() {
        let exact = sys.reconstruct_w(x, t)?;
        let diff = (w[i] - exact).abs();
        linf = linf.max(diff);
        sum_sq = sum_sq + diff * diff;
        w_max = w_max.max(exact.abs());
    }
    let l2 = (sum_sq * field.grid.dx()).sqrt();
    let relative_linf = if w_max > R::zero() { linf / w_max } else { linf };
    Ok(ErrorReport {
        linf,
        l2,
        relative_linf,
        converged: true,
    })
}

#[derive(Debug, Clone)]
pub struct LevelReport<R> {
    pub nx: usize,
    pub nt: usize,
    pub error: ErrorReport<R>,
}

/// Refinement study: each level halves dx and dt.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy<R> {
    pub levels: Vec<LevelReport<R>>,
    /// log2(e_k / e_{k+1}) per level pair; `None` when an error vanishes.
    pub orders: Vec<Option<R>>,
}

pub fn convergence_order<R: Real>(
    sys: &SolvableSystem<R>,
    base_grid: &Grid1D<R>,
    levels: usize,
) -> Result<ConvergenceStudy<R>> {
    if levels == 0 {
        return Err(CdrError::Domain {
            what: "need at least one refinement level".into(),
        });
    }
    let mut grid = *base_grid;
    let mut reports = Vec::with_capacity(levels);
    for _ in 0..levels {
        let field = integrate(sys, &grid)?;
        let error = compare(&field, sys)?;
        reports.push(LevelReport {
            nx: grid.nx,
            nt: grid.nt,
            error,
        });
        grid = grid.refined();
    }
    let orders = reports
        .windows(2)
        .map(|pair| {
            let (e0, e1) = (pair[0].error.relative_linf, pair[1].error.relative_linf);
            if e0 > R::zero() && e1 > R::zero() {
                Some((e0 / e1).ln() / R::of(2.0).ln())
            } else {
                None
            }
        })
        .collect();
    Ok(ConvergenceStudy {
        levels: reports,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Bindings;
    use crate::families::{instantiate, FamilyId};

    fn example2() -> SolvableSystem<f64> {
        let params: Bindings<f64> = [("a".to_string(), 2.0), ("beta".to_string(), 0.3)]
            .into_iter()
            .collect();
        instantiate(FamilyId::Example2, &params, 0.5, 1.0).unwrap()
    }

    #[test]
    fn zero_steps_returns_initial_condition() {
        let sys = example2();
        let grid = Grid1D::new(0.0, 25.0, 101, 1.0, 1.0, 0).unwrap();
        let field = integrate(&sys, &grid).unwrap();
        assert_eq!(field.snapshots.len(), 1);
        let xs = grid.xs();
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(field.final_values()[i], sys.reconstruct_w(x, 1.0).unwrap());
        }
        let report = compare(&field, &sys).unwrap();
        assert_eq!(report.linf, 0.0);
        assert_eq!(report.l2, 0.0);
    }

    #[test]
    fn short_run_tracks_closed_form() {
        let sys = example2();
        let grid = Grid1D::new(0.0, 25.0, 201, 1.0, 1.2, 80).unwrap();
        let field = integrate(&sys, &grid).unwrap();
        let report = compare(&field, &sys).unwrap();
        assert!(report.relative_linf < 5e-4, "{:?}", report);
    }

    #[test]
    fn compare_detects_constant_shift() {
        let sys = example2();
        let grid = Grid1D::new(0.0, 25.0, 101, 1.0, 1.0, 0).unwrap();
        let mut field = integrate(&sys, &grid).unwrap();
        for v in field.snapshots.last_mut().unwrap().iter_mut() {
            *v += 1.0;
        }
        let report = compare(&field, &sys).unwrap();
        assert!((report.linf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 25.0, 5, 1.0, 2.0, 10).is_err());
        assert!(Grid1D::new(0.0, 25.0, 101, 0.0, 2.0, 10).is_err());
        assert!(Grid1D::new(0.0, 25.0, 101, 2.0, 1.0, 10).is_err());
        assert!(Grid1D::new(25.0, 0.0, 101, 1.0, 2.0, 10).is_err());
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = Grid1D::new(0.0f64, 10.0, 101, 1.0, 2.0, 50).unwrap();
        let r = g.refined();
        assert_eq!(r.nx, 201);
        assert_eq!(r.nt, 100);
        assert!((r.dx() - g.dx() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn nonlinear_family_short_run() {
        let params: Bindings<f64> = [
            ("lambda".to_string(), 2.0),
            ("C".to_string(), 3.0),
            ("tau".to_string(), 2.4),
        ]
        .into_iter()
        .collect();
        let sys = instantiate(FamilyId::Example4Nonlinear, &params, 0.0, 1.3).unwrap();
        let grid = Grid1D::new(0.5, 30.0, 101, 1.0, 1.5, 100).unwrap();
        let field = integrate(&sys, &grid).unwrap();
        let report = compare(&field, &sys).unwrap();
        assert!(report.relative_linf < 1e-3, "{:?}", report);
    }
}
