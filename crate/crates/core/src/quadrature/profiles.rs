//! Similarity-profile constructors from the integrated reduced equation.
//!
//! Three construction routes, all anchored at `z0` over an explicit window:
//!
//! - [`fp_type_profile`]: conserving Fokker-Planck-type systems, where the
//!   once-integrated reduced equation gives
//!   `y(z) = exp( int (beta + tau - alpha z) / sigma )`, normalised to
//!   `y(z0) = 1`.
//! - [`non_fp_profile`]: conserving systems with an explicit `rho_bar(z)`,
//!   `y = e^{-I} ( int e^{I} rho_bar / sigma + C )` with
//!   `I = int (alpha z - tau) / sigma`.
//! - [`formal_solution_mu_neq`]: the non-conserving formal solution, a double
//!   integral against the integrating factor `gamma`.

use super::{CumulativeTable, QuadConfig};
use crate::error::{CdrError, Result};
use crate::expr::{Bindings, Expr};
use crate::real::Real;
use std::sync::Arc;

type ArcIntegrand<R> = Arc<dyn Fn(R) -> Result<R> + Send + Sync>;

struct Level<R: Real> {
    table: CumulativeTable<R>,
    integrand: ArcIntegrand<R>,
}

impl<R: Real> Level<R> {
    fn eval(&self, z: R) -> Result<R> {
        let mut f = |u: R| (self.integrand)(u);
        self.table.eval(z, &mut f)
    }
}

impl<R: Real> std::fmt::Debug for Level<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Level")
            .field("lo", &self.table.lo())
            .field("hi", &self.table.hi())
            .finish()
    }
}

fn build_level<R: Real>(
    integrand: ArcIntegrand<R>,
    lo: R,
    z0: R,
    hi: R,
    tol: R,
    max_depth: usize,
    evals: &mut usize,
) -> Result<Level<R>> {
    let table = {
        let inner = &integrand;
        let mut counted = |u: R| {
            *evals += 1;
            inner(u)
        };
        CumulativeTable::build(&mut counted, lo, z0, hi, tol, max_depth)?
    };
    Ok(Level { table, integrand })
}

fn finite<R: Real>(v: R, z: R) -> Result<R> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CdrError::NonFiniteSample { z: z.as_f64() })
    }
}

/// Reject profiles whose diffusion factor vanishes at sampled interior
/// points of the window; the constructors divide by it.
fn check_sigma_nonzero<R: Real>(
    sigma: &Expr<R>,
    params: &Bindings<R>,
    window: (R, R),
) -> Result<()> {
    let n = 129;
    let mut b = params.clone();
    for i in 0..n {
        let frac = (R::of(i as f64) + R::of(0.5)) / R::of(n as f64);
        let z = window.0 + (window.1 - window.0) * frac;
        b.set("z", z);
        let v = sigma.eval(&b)?;
        if !v.is_finite() {
            return Err(CdrError::NonFiniteSample { z: z.as_f64() });
        }
        if v == R::zero() {
            return Err(CdrError::SigmaVanishes { z: z.as_f64() });
        }
    }
    Ok(())
}

fn check_window<R: Real>(z0: R, window: (R, R)) -> Result<()> {
    if !(window.0 < window.1) || z0 < window.0 || z0 > window.1 {
        return Err(CdrError::Domain {
            what: format!(
                "profile window [{}, {}] must be non-empty and contain z0 = {z0}",
                window.0, window.1
            ),
        });
    }
    Ok(())
}

/// Integrating factor `gamma(z) = int_{z0}^{z} (sigma' + alpha z - tau) / sigma`,
/// with `gamma(z0) = 0`.
#[derive(Debug)]
pub struct IntegratingFactor<R: Real> {
    level: Arc<Level<R>>,
    z0: R,
}

impl<R: Real> IntegratingFactor<R> {
    pub fn build(
        sigma: &Expr<R>,
        tau: &Expr<R>,
        alpha: R,
        params: &Bindings<R>,
        z0: R,
        window: (R, R),
        cfg: &QuadConfig,
    ) -> Result<Self> {
        let mut evals = 0usize;
        let factor = Self::build_counted(sigma, tau, alpha, params, z0, window, cfg, &mut evals)?;
        Ok(factor)
    }

    #[allow(clippy::too_many_arguments)]
    fn build_counted(
        sigma: &Expr<R>,
        tau: &Expr<R>,
        alpha: R,
        params: &Bindings<R>,
        z0: R,
        window: (R, R),
        cfg: &QuadConfig,
        evals: &mut usize,
    ) -> Result<Self> {
        check_window(z0, window)?;
        check_sigma_nonzero(sigma, params, window)?;
        let sigma_prime = sigma.differentiate("z");
        let integrand: ArcIntegrand<R> = {
            let sigma = sigma.clone();
            let tau = tau.clone();
            let params = params.clone();
            Arc::new(move |z: R| {
                let mut b = params.clone();
                b.set("z", z);
                let s = sigma.eval(&b)?;
                let sp = sigma_prime.eval(&b)?;
                let t = tau.eval(&b)?;
                finite((sp + alpha * z - t) / s, z)
            })
        };
        let level = build_level(
            integrand,
            window.0,
            z0,
            window.1,
            R::of(cfg.abs_tol),
            cfg.max_depth,
            evals,
        )?;
        Ok(IntegratingFactor {
            level: Arc::new(level),
            z0,
        })
    }

    pub fn eval(&self, z: R) -> Result<R> {
        self.level.eval(z)
    }

    pub fn anchor(&self) -> R {
        self.z0
    }
}

#[derive(Debug)]
enum Kind<R: Real> {
    FpType {
        exponent: Level<R>,
    },
    NonFp {
        i_level: Arc<Level<R>>,
        j_level: Level<R>,
        c: R,
        sigma: Expr<R>,
        tau: Expr<R>,
        rho_bar: Expr<R>,
        alpha: R,
        params: Bindings<R>,
    },
    Formal {
        gamma: IntegratingFactor<R>,
        k_level: Arc<Level<R>>,
        l_level: Level<R>,
        c: R,
        c_prime: R,
    },
}

/// A similarity profile `y(z)` produced by one of the quadrature
/// constructors. Immutable after construction; evaluation is thread-safe.
#[derive(Debug)]
pub struct SimilarityProfile<R: Real> {
    kind: Kind<R>,
    z0: R,
    window: (R, R),
    build_evaluations: usize,
}

impl<R: Real> SimilarityProfile<R> {
    pub fn eval(&self, z: R) -> Result<R> {
        Ok(self.eval_with_derivative(z)?.0)
    }

    /// `(y, y')` at `z`. The derivative comes from the defining first-order
    /// relation of each construction, not from finite differences.
    pub fn eval_with_derivative(&self, z: R) -> Result<(R, R)> {
        match &self.kind {
            Kind::FpType { exponent } => {
                let y = exponent.eval(z)?.exp();
                let slope = (exponent.integrand)(z)?;
                Ok((y, y * slope))
            }
            Kind::NonFp {
                i_level,
                j_level,
                c,
                sigma,
                tau,
                rho_bar,
                alpha,
                params,
            } => {
                let i = i_level.eval(z)?;
                let j = j_level.eval(z)?;
                let y = (-i).exp() * (j + *c);
                let mut b = params.clone();
                b.set("z", z);
                let s = sigma.eval(&b)?;
                let t = tau.eval(&b)?;
                let rb = rho_bar.eval(&b)?;
                Ok((y, (rb - (*alpha * z - t) * y) / s))
            }
            Kind::Formal {
                gamma,
                k_level,
                l_level,
                c,
                c_prime,
            } => {
                let l = l_level.eval(z)?;
                let g = gamma.eval(z)?;
                let k = k_level.eval(z)?;
                Ok((l + *c, (-g).exp() * (k + *c_prime)))
            }
        }
    }

    pub fn anchor(&self) -> R {
        self.z0
    }

    pub fn window(&self) -> (R, R) {
        self.window
    }

    /// Integrand evaluations spent constructing the tables.
    pub fn build_evaluations(&self) -> usize {
        self.build_evaluations
    }

    /// Sample onto a uniform grid (inclusive endpoints).
    pub fn sample(&self, lo: R, hi: R, n: usize) -> Result<(Vec<R>, Vec<R>)> {
        let mut zs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let step = (hi - lo) / R::of((n - 1) as f64);
        for i in 0..n {
            let z = if i == n - 1 {
                hi
            } else {
                lo + step * R::of(i as f64)
            };
            zs.push(z);
            ys.push(self.eval(z)?);
        }
        Ok((zs, ys))
    }
}

/// Fokker-Planck-type profile: `y(z) = exp( int_{z0}^{z} (beta + tau - alpha u) / sigma du )`.
/// The conserving first integral with `rho_bar = beta(z) y` fixes it up to
/// scale; normalisation is `y(z0) = 1`.
pub fn fp_type_profile<R: Real>(
    sigma: &Expr<R>,
    tau: &Expr<R>,
    drift_beta: &Expr<R>,
    alpha: R,
    params: &Bindings<R>,
    z0: R,
    window: (R, R),
    cfg: &QuadConfig,
) -> Result<SimilarityProfile<R>> {
    check_window(z0, window)?;
    check_sigma_nonzero(sigma, params, window)?;
    let integrand: ArcIntegrand<R> = {
        let sigma = sigma.clone();
        let tau = tau.clone();
        let beta = drift_beta.clone();
        let params = params.clone();
        Arc::new(move |z: R| {
            let mut b = params.clone();
            b.set("z", z);
            let s = sigma.eval(&b)?;
            let t = tau.eval(&b)?;
            let w = beta.eval(&b)?;
            finite((w + t - alpha * z) / s, z)
        })
    };
    let mut evals = 0usize;
    let exponent = build_level(
        integrand,
        window.0,
        z0,
        window.1,
        R::of(cfg.abs_tol),
        cfg.max_depth,
        &mut evals,
    )?;
    warn_budget(evals, cfg);
    Ok(SimilarityProfile {
        kind: Kind::FpType { exponent },
        z0,
        window,
        build_evaluations: evals,
    })
}

/// Conserving profile with explicit `rho_bar(z)`:
/// `y(z) = e^{-I(z)} ( int_{z0}^{z} e^{I} rho_bar / sigma + C )`.
#[allow(clippy::too_many_arguments)]
pub fn non_fp_profile<R: Real>(
    sigma: &Expr<R>,
    tau: &Expr<R>,
    rho_bar: &Expr<R>,
    alpha: R,
    const_c: R,
    params: &Bindings<R>,
    z0: R,
    window: (R, R),
    cfg: &QuadConfig,
) -> Result<SimilarityProfile<R>> {
    check_window(z0, window)?;
    check_sigma_nonzero(sigma, params, window)?;
    let inner_tol = R::of(cfg.abs_tol);
    let outer_tol = R::of(cfg.abs_tol * 100.0);
    let mut evals = 0usize;

    let i_integrand: ArcIntegrand<R> = {
        let sigma = sigma.clone();
        let tau = tau.clone();
        let params = params.clone();
        Arc::new(move |z: R| {
            let mut b = params.clone();
            b.set("z", z);
            let s = sigma.eval(&b)?;
            let t = tau.eval(&b)?;
            finite((alpha * z - t) / s, z)
        })
    };
    let i_level = Arc::new(build_level(
        i_integrand,
        window.0,
        z0,
        window.1,
        inner_tol,
        cfg.max_depth,
        &mut evals,
    )?);

    let j_integrand: ArcIntegrand<R> = {
        let sigma = sigma.clone();
        let rho_bar = rho_bar.clone();
        let params = params.clone();
        let i_level = Arc::clone(&i_level);
        Arc::new(move |z: R| {
            let mut b = params.clone();
            b.set("z", z);
            let s = sigma.eval(&b)?;
            let rb = rho_bar.eval(&b)?;
            let i = i_level.eval(z)?;
            finite(i.exp() * rb / s, z)
        })
    };
    let j_level = build_level(
        j_integrand,
        window.0,
        z0,
        window.1,
        outer_tol,
        cfg.max_depth,
        &mut evals,
    )?;
    warn_budget(evals, cfg);
    Ok(SimilarityProfile {
        kind: Kind::NonFp {
            i_level,
            j_level,
            c: const_c,
            sigma: sigma.clone(),
            tau: tau.clone(),
            rho_bar: rho_bar.clone(),
            alpha,
            params: params.clone(),
        },
        z0,
        window,
        build_evaluations: evals,
    })
}

/// Non-conserving formal solution:
/// `y(z) = int_{z0}^{z} e^{-gamma(s)} [ int_{z0}^{s} e^{gamma} rho_tilde / sigma + C' ] ds + C`,
/// where `rho_tilde` must be an explicit function of `z`.
#[allow(clippy::too_many_arguments)]
pub fn formal_solution_mu_neq<R: Real>(
    sigma: &Expr<R>,
    tau: &Expr<R>,
    rho_tilde: &Expr<R>,
    alpha: R,
    const_c: R,
    const_c_prime: R,
    params: &Bindings<R>,
    z0: R,
    window: (R, R),
    cfg: &QuadConfig,
) -> Result<SimilarityProfile<R>> {
    let mut evals = 0usize;
    let gamma =
        IntegratingFactor::build_counted(sigma, tau, alpha, params, z0, window, cfg, &mut evals)?;

    let mid_tol = R::of(cfg.abs_tol * 100.0);
    let outer_tol = R::of(cfg.abs_tol * 1000.0);

    let k_integrand: ArcIntegrand<R> = {
        let sigma = sigma.clone();
        let rho_tilde = rho_tilde.clone();
        let params = params.clone();
        let gamma_level = Arc::clone(&gamma.level);
        Arc::new(move |z: R| {
            let mut b = params.clone();
            b.set("z", z);
            let s = sigma.eval(&b)?;
            let rt = rho_tilde.eval(&b)?;
            let g = gamma_level.eval(z)?;
            finite(g.exp() * rt / s, z)
        })
    };
    let k_level = Arc::new(build_level(
        k_integrand,
        window.0,
        z0,
        window.1,
        mid_tol,
        cfg.max_depth,
        &mut evals,
    )?);

    let l_integrand: ArcIntegrand<R> = {
        let gamma_level = Arc::clone(&gamma.level);
        let k_level = Arc::clone(&k_level);
        Arc::new(move |z: R| {
            let g = gamma_level.eval(z)?;
            let k = k_level.eval(z)?;
            finite((-g).exp() * (k + const_c_prime), z)
        })
    };
    let l_level = build_level(
        l_integrand,
        window.0,
        z0,
        window.1,
        outer_tol,
        cfg.max_depth,
        &mut evals,
    )?;
    warn_budget(evals, cfg);
    Ok(SimilarityProfile {
        kind: Kind::Formal {
            gamma,
            k_level,
            l_level,
            c: const_c,
            c_prime: const_c_prime,
        },
        z0,
        window,
        build_evaluations: evals,
    })
}

fn warn_budget(evals: usize, cfg: &QuadConfig) {
    if evals > cfg.eval_budget {
        log::warn!(
            "profile construction used {evals} integrand evaluations (budget {})",
            cfg.eval_budget
        );
    }
}
