//! Reduced-equation residuals and continuity diagnostics.
//!
//! The scaling ansatz reduces the CDR equation to
//!
//! ```text
//! sigma y'' + (sigma' + alpha z - tau) y' - (tau' + mu) y + rho(z, y) = 0
//! ```
//!
//! In the conserving case `mu = -alpha` the left side is a total derivative
//! `d/dz ( sigma y' + (alpha z - tau) y ) + rho = 0`, which integrates once
//! to the first integral `sigma y' + (alpha z - tau) y - rho_bar = const`.
//! The continuity balance over the domain reads
//! `(alpha + mu) int y = int rho + Delta(sigma y' - tau y)` together with
//! the boundary condition `Delta(alpha z y) = 0`.

use crate::error::{CdrError, Result};
use crate::quadrature::{quad_with, QuadConfig};
use crate::real::Real;
use crate::scaling::{DomainSpec, ExponentSet, ProfileSet, SolvableSystem};
use crate::stencil::derivative4;
use crate::expr::Bindings;

/// `(y, y', y'')` at one z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YTriple<R> {
    pub y: R,
    pub y1: R,
    pub y2: R,
}

impl<R: Real> YTriple<R> {
    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.y1.is_finite() && self.y2.is_finite()
    }
}

/// Pointwise residual of the reduced second-order equation.
pub fn residual<R: Real>(
    profiles: &ProfileSet<R>,
    exponents: &ExponentSet<R>,
    params: &Bindings<R>,
    yt: &YTriple<R>,
    z: R,
) -> Result<R> {
    if !yt.is_finite() {
        return Err(CdrError::NonFinite {
            what: format!("y triple at z = {z}"),
        });
    }
    let mut b = params.clone();
    b.set("z", z);
    b.set("y", yt.y);
    let sigma = profiles.sigma().eval(&b)?;
    let sigma_prime = profiles.sigma_prime().eval(&b)?;
    let tau = profiles.tau().eval(&b)?;
    let tau_prime = profiles.tau_prime().eval(&b)?;
    let rho = profiles.rho().eval(&b)?;
    for (label, v) in [
        ("sigma", sigma),
        ("sigma'", sigma_prime),
        ("tau", tau),
        ("tau'", tau_prime),
        ("rho", rho),
    ] {
        if !v.is_finite() {
            return Err(CdrError::NonFinite {
                what: format!("profile {label} at z = {z}"),
            });
        }
    }
    let alpha = exponents.alpha;
    let mu = exponents.mu;
    Ok(sigma * yt.y2 + (sigma_prime + alpha * z - tau) * yt.y1 - (tau_prime + mu) * yt.y + rho)
}

/// Max residual of the conserving-case flux form
/// `d/dz ( sigma y' + (alpha z - tau) y ) + rho` over a sampled y-field,
/// using fourth-order finite differences on a uniform grid.
pub fn conserved_form_residual<R: Real>(
    profiles: &ProfileSet<R>,
    exponents: &ExponentSet<R>,
    params: &Bindings<R>,
    z_grid: &[R],
    y_values: &[R],
) -> Result<R> {
    if !exponents.is_conserving() {
        return Err(CdrError::NotConserving {
            alpha: exponents.alpha.as_f64(),
            mu: exponents.mu.as_f64(),
        });
    }
    let n = z_grid.len();
    if n < 9 || y_values.len() != n {
        return Err(CdrError::GridTooCoarse { n, min: 9 });
    }
    let h = z_grid[1] - z_grid[0];
    for w in z_grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > R::of(1e-9) * h.abs() {
            return Err(CdrError::Domain {
                what: "conserved_form_residual requires a uniform grid".into(),
            });
        }
    }
    let alpha = exponents.alpha;
    let y_prime = derivative4(y_values, h);
    let mut b = params.clone();
    let mut bracket = Vec::with_capacity(n);
    for i in 0..n {
        let z = z_grid[i];
        b.set("z", z);
        b.set("y", y_values[i]);
        let sigma = profiles.sigma().eval(&b)?;
        let tau = profiles.tau().eval(&b)?;
        bracket.push(sigma * y_prime[i] + (alpha * z - tau) * y_values[i]);
    }
    let d_bracket = derivative4(&bracket, h);
    let mut max_res = R::zero();
    // interior points where both stencil applications were central
    for i in 4..n - 4 {
        b.set("z", z_grid[i]);
        b.set("y", y_values[i]);
        let rho = profiles.rho().eval(&b)?;
        max_res = max_res.max((d_bracket[i] + rho).abs());
    }
    Ok(max_res)
}

/// Residual of the once-integrated conserving equation
/// `sigma y' + (alpha z - tau) y - rho_bar - constant`.
pub fn first_integral_residual<R: Real>(
    profiles: &ProfileSet<R>,
    exponents: &ExponentSet<R>,
    params: &Bindings<R>,
    yt: &YTriple<R>,
    z: R,
    constant: R,
) -> Result<R> {
    let rho_bar = profiles
        .rho_bar()
        .ok_or(CdrError::MissingProfile { name: "rho_bar" })?;
    if !exponents.is_conserving() {
        return Err(CdrError::NotConserving {
            alpha: exponents.alpha.as_f64(),
            mu: exponents.mu.as_f64(),
        });
    }
    let mut b = params.clone();
    b.set("z", z);
    b.set("y", yt.y);
    let sigma = profiles.sigma().eval(&b)?;
    let tau = profiles.tau().eval(&b)?;
    let rb = rho_bar.eval(&b)?;
    Ok(sigma * yt.y1 + (exponents.alpha * z - tau) * yt.y - rb - constant)
}

/// Continuity diagnostics for a certified system.
///
/// `lhs = (alpha + mu) int y` must balance `int rho + Delta(sigma y' - tau y)`
/// and the boundary condition `Delta(alpha z y) = 0` must hold. Integrals
/// are `None` when the profile has no integrable truncation (the balance
/// check is then skipped and only the boundary condition is enforced).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport<R> {
    pub integral_y: Option<R>,
    pub integral_rho: Option<R>,
    pub lhs: Option<R>,
    pub boundary_flux: R,
    pub delta_alpha_z_y: R,
    pub alpha_plus_mu: R,
    /// Integration window actually used (the far bound is the scan cap when
    /// the integral is divergent).
    pub window: (R, R),
    pub divergent: bool,
    pub satisfied: bool,
    pub tol: R,
}

impl<R: Real> ContinuityReport<R> {
    /// `N(t) = t^(alpha+mu) int y dz`; `None` when `int y` is divergent.
    pub fn n_of_t(&self, t: R) -> Option<R> {
        self.integral_y.map(|iy| t.powf(self.alpha_plus_mu) * iy)
    }
}

const TRUNCATION_THRESHOLD: f64 = 1e-14;
const SCAN_START: f64 = 0.5;
const SCAN_GROWTH: f64 = 1.25;
const SCAN_CAP: f64 = 1e6;
const TRUNCATION_PAD: f64 = 1.2;

/// First |z| in `direction` where both |y| and |rho| drop below the
/// truncation threshold, padded 20%. `None` when no such point exists
/// below the scan cap (non-integrable tail).
fn scan_truncation<R: Real>(sys: &SolvableSystem<R>, direction: R) -> Result<Option<R>> {
    let thr = R::of(TRUNCATION_THRESHOLD);
    let mut radius = R::of(SCAN_START);
    loop {
        let z = direction * radius;
        let y = sys.y_value(z)?;
        let b = sys.bindings_at(z, Some(y));
        let rho = sys.profiles().rho().eval(&b)?;
        if y.abs() < thr && rho.abs() < thr {
            return Ok(Some(radius * R::of(TRUNCATION_PAD)));
        }
        radius = radius * R::of(SCAN_GROWTH);
        if radius > R::of(SCAN_CAP) {
            return Ok(None);
        }
    }
}

/// Integration window for domain integrals: `(lo, hi, divergent)`.
fn integration_window<R: Real>(sys: &SolvableSystem<R>) -> Result<(R, R, bool)> {
    match sys.domain() {
        DomainSpec::HalfLine => match scan_truncation(sys, R::one())? {
            Some(radius) => Ok((R::zero(), radius, false)),
            None => Ok((R::zero(), R::of(SCAN_CAP), true)),
        },
        DomainSpec::RealLine => {
            let right = scan_truncation(sys, R::one())?;
            let left = scan_truncation(sys, -R::one())?;
            match (left, right) {
                (Some(l), Some(r)) => Ok((-l, r, false)),
                _ => Ok((
                    -left.unwrap_or(R::of(SCAN_CAP)),
                    right.unwrap_or(R::of(SCAN_CAP)),
                    true,
                )),
            }
        }
    }
}

fn flux_bracket<R: Real>(sys: &SolvableSystem<R>, z: R) -> Result<R> {
    let yt = sys.y_triple(z)?;
    let b = sys.bindings_at(z, Some(yt.y));
    let sigma = sys.profiles().sigma().eval(&b)?;
    let tau = sys.profiles().tau().eval(&b)?;
    Ok(sigma * yt.y1 - tau * yt.y)
}

pub fn continuity_report<R: Real>(
    sys: &SolvableSystem<R>,
    tol: R,
    cfg: &QuadConfig,
) -> Result<ContinuityReport<R>> {
    let exps = *sys.exponents();
    let alpha_plus_mu = exps.alpha + exps.mu;
    let (lo, hi, divergent) = integration_window(sys)?;

    let (integral_y, integral_rho, lhs) = if divergent {
        (None, None, None)
    } else {
        let iy = quad_with(
            |z| sys.y_value(z).unwrap_or_else(|_| R::nan()),
            lo,
            hi,
            cfg,
        )?
        .value;
        let ir = quad_with(
            |z| {
                sys.y_value(z)
                    .and_then(|y| {
                        let b = sys.bindings_at(z, Some(y));
                        Ok(sys.profiles().rho().eval(&b)?)
                    })
                    .unwrap_or_else(|_| R::nan())
            },
            lo,
            hi,
            cfg,
        )?
        .value;
        (Some(iy), Some(ir), Some(alpha_plus_mu * iy))
    };

    let boundary_flux = flux_bracket(sys, hi)? - flux_bracket(sys, lo)?;
    let zy = |z: R| -> Result<R> { Ok(exps.alpha * z * sys.y_value(z)?) };
    let delta_alpha_z_y = zy(hi)? - zy(lo)?;

    let balance_ok = match (lhs, integral_rho) {
        (Some(l), Some(ir)) => (l - ir - boundary_flux).abs() <= tol,
        _ => true,
    };
    let satisfied = balance_ok && delta_alpha_z_y.abs() <= tol;

    Ok(ContinuityReport {
        integral_y,
        integral_rho,
        lhs,
        boundary_flux,
        delta_alpha_z_y,
        alpha_plus_mu,
        window: (lo, hi),
        divergent,
        satisfied,
        tol,
    })
}

/// Total particle number `N(t) = t^(alpha+mu) int y dz`.
pub fn particle_number<R: Real>(sys: &SolvableSystem<R>, t: R, cfg: &QuadConfig) -> Result<R> {
    if !(t > R::zero()) {
        return Err(CdrError::Domain {
            what: format!("t must be positive, got {t}"),
        });
    }
    let (lo, hi, divergent) = integration_window(sys)?;
    if divergent {
        return Err(CdrError::DivergentIntegral {
            what: format!("int y over the {} domain", sys.domain().name()),
        });
    }
    let iy = quad_with(
        |z| sys.y_value(z).unwrap_or_else(|_| R::nan()),
        lo,
        hi,
        cfg,
    )?
    .value;
    let exps = sys.exponents();
    Ok(t.powf(exps.alpha + exps.mu) * iy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::scaling::{derive_exponents, CertificationConfig};

    fn pe(src: &str) -> crate::Expr64 {
        parse(src, &["z", "y"], &["c", "a", "beta", "alpha", "mu"]).unwrap()
    }

    fn gaussian_decay_system() -> SolvableSystem<f64> {
        // sigma=1, tau=0, rho=0, y=e^{-z^2/2}, alpha=1, mu=-1:
        // y'' + z y' + y = (z^2-1)y - z^2 y + y = 0
        let profiles = ProfileSet::new(pe("1"), pe("0"), pe("0"), DomainSpec::RealLine)
            .with_rho_bar(pe("0"));
        SolvableSystem::new(
            "gaussian-decay",
            derive_exponents(1.0, -1.0).unwrap(),
            profiles,
            pe("exp(-z^2/2)"),
            Bindings::new(),
            &CertificationConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn residual_zero_for_trivial_system() {
        // y = 0 with rho(z) = 0
        let profiles = ProfileSet::new(pe("1"), pe("z"), pe("0"), DomainSpec::RealLine);
        let exps = derive_exponents(0.5, 1.0).unwrap();
        let yt = YTriple { y: 0.0, y1: 0.0, y2: 0.0 };
        let r = residual(&profiles, &exps, &Bindings::new(), &yt, 1.7).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn residual_rejects_non_finite_triple() {
        let profiles = ProfileSet::new(pe("1"), pe("0"), pe("0"), DomainSpec::RealLine);
        let exps = derive_exponents(0.5, 1.0).unwrap();
        let yt = YTriple { y: f64::NAN, y1: 0.0, y2: 0.0 };
        assert!(residual(&profiles, &exps, &Bindings::new(), &yt, 0.0).is_err());
    }

    #[test]
    fn first_integral_returns_negated_constant_for_exact_solution() {
        let sys = gaussian_decay_system();
        let yt = sys.y_triple(0.8).unwrap();
        let r = first_integral_residual(
            sys.profiles(),
            sys.exponents(),
            sys.params(),
            &yt,
            0.8,
            5.0,
        )
        .unwrap();
        assert!((r + 5.0).abs() < 1e-14, "{r}");
    }

    #[test]
    fn first_integral_gaussian_solves_zero_constant() {
        // rho_bar=0, tau=0, sigma=1, alpha=1: y' + z y = 0 for the gaussian
        let sys = gaussian_decay_system();
        for z in [-3.0, -0.5, 0.0, 1.2, 2.9] {
            let yt = sys.y_triple(z).unwrap();
            let r = first_integral_residual(
                sys.profiles(),
                sys.exponents(),
                sys.params(),
                &yt,
                z,
                0.0,
            )
            .unwrap();
            assert!(r.abs() < 1e-14, "z={z}: {r}");
        }
    }

    #[test]
    fn first_integral_requires_rho_bar() {
        let profiles = ProfileSet::new(pe("1"), pe("0"), pe("0"), DomainSpec::RealLine);
        let exps = derive_exponents(1.0, -1.0).unwrap();
        let yt = YTriple { y: 1.0, y1: 0.0, y2: 0.0 };
        let err =
            first_integral_residual(&profiles, &exps, &Bindings::new(), &yt, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, CdrError::MissingProfile { name: "rho_bar" }));
    }

    #[test]
    fn conserved_form_rejects_non_conserving_exponents() {
        let profiles = ProfileSet::new(pe("1"), pe("0"), pe("0"), DomainSpec::RealLine);
        let exps = derive_exponents(0.5, 1.0).unwrap();
        let zs: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let ys = vec![0.0; 16];
        let err =
            conserved_form_residual(&profiles, &exps, &Bindings::new(), &zs, &ys).unwrap_err();
        assert!(matches!(err, CdrError::NotConserving { .. }));
    }

    #[test]
    fn conserved_form_residual_small_for_exact_gaussian() {
        let sys = gaussian_decay_system();
        let n = 512;
        let (lo, hi) = (-3.0, 3.0);
        let h = (hi - lo) / (n - 1) as f64;
        let zs: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let ys: Vec<f64> = zs.iter().map(|z| (-0.5 * z * z).exp()).collect();
        let r = conserved_form_residual(sys.profiles(), sys.exponents(), sys.params(), &zs, &ys)
            .unwrap();
        assert!(r <= 1e-8, "max residual {r}");
    }

    #[test]
    fn continuity_of_compactly_decaying_profile() {
        // alpha + mu = 0, rho = 0, tau = 0: every continuity quantity vanishes
        let sys = gaussian_decay_system();
        let report = continuity_report(&sys, 1e-6, &QuadConfig::default()).unwrap();
        assert!(!report.divergent);
        assert!(report.satisfied);
        assert!(report.lhs.unwrap().abs() < 1e-12);
        assert!(report.integral_rho.unwrap().abs() < 1e-12);
        assert!(report.boundary_flux.abs() < 1e-12);
        assert!(report.delta_alpha_z_y.abs() < 1e-12);
        // N = int y = sqrt(2 pi), constant in t
        let n1 = report.n_of_t(1.0).unwrap();
        let n3 = report.n_of_t(3.0).unwrap();
        assert!((n1 - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
        assert_eq!(n1, n3);
    }

    #[test]
    fn particle_number_of_zero_profile() {
        let profiles = ProfileSet::new(pe("1"), pe("z"), pe("0"), DomainSpec::RealLine);
        let sys = SolvableSystem::new(
            "zero",
            derive_exponents(0.5, 1.0).unwrap(),
            profiles,
            pe("0"),
            Bindings::new(),
            &CertificationConfig::default(),
        )
        .unwrap();
        let n = particle_number(&sys, 2.0, &QuadConfig::default()).unwrap();
        assert_eq!(n, 0.0);
        assert!(particle_number(&sys, 0.0, &QuadConfig::default()).is_err());
    }
}
