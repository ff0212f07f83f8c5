//! Equivalent systems: same similarity profile, different profiles.
//!
//! Two systems with the same `y(z)` and exponents satisfy
//!
//! ```text
//! d/dz[ (tilde_sigma - sigma) y' ] - d/dz[ (tilde_tau - tau) y ]
//!     + (tilde_rho - rho) = 0
//! ```
//!
//! so choosing `tilde_sigma` and `tilde_tau` freely determines
//! `tilde_rho = rho - d/dz[(tilde_sigma - sigma) y'] + d/dz[(tilde_tau - tau) y]`.
//! The construction preserves the continuity balance: the integral-plus-flux
//! combination is identical for the two systems.

use crate::error::{CdrError, Result};
use crate::expr::{BinOp, Expr};
use crate::quadrature::{quad_with, QuadConfig};
use crate::real::Real;
use crate::scaling::{CertificationConfig, ProfileSet, SolvableSystem};
use crate::stencil::derivative4;

/// The two freely chosen profiles of an equivalent system.
#[derive(Debug, Clone)]
pub struct EquivalentSpec<R> {
    pub tilde_sigma: Expr<R>,
    pub tilde_tau: Expr<R>,
}

fn sub<R: Real>(a: &Expr<R>, b: &Expr<R>) -> Expr<R> {
    Expr::Bin(BinOp::Sub, Box::new(a.clone()), Box::new(b.clone()))
}

fn mul<R: Real>(a: Expr<R>, b: Expr<R>) -> Expr<R> {
    Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b))
}

/// Symbolic reaction profile of the equivalent system. The result still
/// references the symbol `y` wherever the base reaction does; evaluation
/// binds `y = y(z)` as usual.
pub fn equivalent_rho<R: Real>(
    base: &SolvableSystem<R>,
    spec: &EquivalentSpec<R>,
) -> Result<Expr<R>> {
    Ok(equivalent_system(base, spec)?.profiles().rho().clone())
}

/// Build and certify the full equivalent system (tolerance 1e-10; a failure
/// here indicates a differentiation bug, not a user error).
pub fn equivalent_system<R: Real>(
    base: &SolvableSystem<R>,
    spec: &EquivalentSpec<R>,
) -> Result<SolvableSystem<R>> {
    // the replacement diffusion profile must not vanish in the interior
    let window = base.domain().default_window::<R>();
    for z in base.domain().interior_samples(129, window) {
        let b = base.bindings_at(z, None);
        let v = spec.tilde_sigma.eval(&b)?;
        if v == R::zero() {
            return Err(CdrError::SigmaVanishes { z: z.as_f64() });
        }
    }

    let y = base.y_expr();
    let y_prime = base.y_prime_expr();

    let sigma_term = mul(sub(&spec.tilde_sigma, base.profiles().sigma()), y_prime.clone())
        .differentiate("z");
    let tau_term = mul(sub(&spec.tilde_tau, base.profiles().tau()), y.clone()).differentiate("z");
    let rho_tilde = Expr::Bin(
        BinOp::Add,
        Box::new(Expr::Bin(
            BinOp::Sub,
            Box::new(base.profiles().rho().clone()),
            Box::new(sigma_term),
        )),
        Box::new(tau_term),
    )
    .simplified();

    let profiles = ProfileSet::new(
        spec.tilde_sigma.clone(),
        spec.tilde_tau.clone(),
        rho_tilde,
        base.domain(),
    );
    let cert = CertificationConfig {
        tol: R::of(1e-10),
        ..CertificationConfig::default()
    };
    SolvableSystem::new(
        format!("{}~equivalent", base.name()),
        *base.exponents(),
        profiles,
        y.clone(),
        base.params().clone(),
        &cert,
    )
}

/// Numeric-only route: sample `tilde_rho` on a uniform grid with
/// fourth-order finite-difference derivatives.
pub fn equivalent_rho_numeric<R: Real>(
    base: &SolvableSystem<R>,
    spec: &EquivalentSpec<R>,
    z_grid: &[R],
) -> Result<Vec<R>> {
    let n = z_grid.len();
    if n < 9 {
        return Err(CdrError::GridTooCoarse { n, min: 9 });
    }
    let h = z_grid[1] - z_grid[0];
    for w in z_grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > R::of(1e-9) * h.abs() {
            return Err(CdrError::Domain {
                what: "equivalent_rho_numeric requires a uniform grid".into(),
            });
        }
    }

    let mut ys = Vec::with_capacity(n);
    let mut sigma_diff = Vec::with_capacity(n);
    let mut tau_diff = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for &z in z_grid {
        let y = base.y_value(z)?;
        ys.push(y);
        let b = base.bindings_at(z, Some(y));
        sigma_diff.push(spec.tilde_sigma.eval(&b)? - base.profiles().sigma().eval(&b)?);
        tau_diff.push(spec.tilde_tau.eval(&b)? - base.profiles().tau().eval(&b)?);
        rho.push(base.profiles().rho().eval(&b)?);
    }
    let y_prime = derivative4(&ys, h);
    let u: Vec<R> = (0..n).map(|i| sigma_diff[i] * y_prime[i]).collect();
    let v: Vec<R> = (0..n).map(|i| tau_diff[i] * ys[i]).collect();
    let du = derivative4(&u, h);
    let dv = derivative4(&v, h);
    Ok((0..n).map(|i| rho[i] - du[i] + dv[i]).collect())
}

/// Both sides of the preserved continuity combination
/// `int rho + Delta(sigma y' - tau y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport<R> {
    pub base_side: R,
    pub equivalent_side: R,
    pub difference: R,
    pub window: (R, R),
}

/// Check the continuity identity between a base system and an equivalent
/// one over `window` (pass an explicit window for profiles with
/// non-integrable tails).
pub fn continuity_identity_check<R: Real>(
    base: &SolvableSystem<R>,
    equivalent: &SolvableSystem<R>,
    window: (R, R),
    cfg: &QuadConfig,
) -> Result<IdentityReport<R>> {
    let be = base.exponents();
    let ee = equivalent.exponents();
    if be.alpha != ee.alpha || be.mu != ee.mu {
        return Err(CdrError::Domain {
            what: "systems must share alpha and mu".into(),
        });
    }
    for i in 0..5 {
        let z = window.0 + (window.1 - window.0) * (R::of(i as f64) + R::of(0.5)) / R::of(5.0);
        let d = (base.y_value(z)? - equivalent.y_value(z)?).abs();
        if d > R::of(1e-12) * (R::one() + base.y_value(z)?.abs()) {
            return Err(CdrError::Domain {
                what: format!("systems do not share y(z) at z = {z}"),
            });
        }
    }

    let side = |sys: &SolvableSystem<R>| -> Result<R> {
        let integral = quad_with(
            |z| {
                sys.y_value(z)
                    .and_then(|y| {
                        let b = sys.bindings_at(z, Some(y));
                        Ok(sys.profiles().rho().eval(&b)?)
                    })
                    .unwrap_or_else(|_| R::nan())
            },
            window.0,
            window.1,
            cfg,
        )?
        .value;
        let bracket = |z: R| -> Result<R> {
            let yt = sys.y_triple(z)?;
            let b = sys.bindings_at(z, Some(yt.y));
            let sigma = sys.profiles().sigma().eval(&b)?;
            let tau = sys.profiles().tau().eval(&b)?;
            Ok(sigma * yt.y1 - tau * yt.y)
        };
        Ok(integral + bracket(window.1)? - bracket(window.0)?)
    };

    let base_side = side(base)?;
    let equivalent_side = side(equivalent)?;
    Ok(IdentityReport {
        base_side,
        equivalent_side,
        difference: (base_side - equivalent_side).abs(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Bindings};
    use crate::families::{instantiate, FamilyId};
    use crate::scaling::{derive_exponents, DomainSpec};

    fn b(pairs: &[(&str, f64)]) -> Bindings<f64> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    /// The reaction-diffusion base of the worked equivalent-system example:
    /// sigma=1, tau=0, rho=[c(alpha-c)z^2 + (mu+c)] y, y = exp(-c z^2/2).
    /// `extra` params are carried so the equivalent profiles may reference
    /// them.
    fn rd_base(alpha: f64, mu: f64, c: f64, extra: &[(&str, f64)]) -> SolvableSystem<f64> {
        let mut params = b(&[("c", c), ("alpha", alpha), ("mu", mu)]);
        for (n, v) in extra {
            params.set(n, *v);
        }
        let names: Vec<&str> = params.names().collect();
        let profiles = ProfileSet::new(
            parse("1", &["z"], &names).unwrap(),
            parse("0", &["z"], &names).unwrap(),
            parse("(c*(alpha - c)*z^2 + (mu + c))*y", &["z", "y"], &names).unwrap(),
            DomainSpec::RealLine,
        );
        SolvableSystem::new(
            "rd-base",
            derive_exponents(alpha, mu).unwrap(),
            profiles,
            parse("exp(-0.5*c*z^2)", &["z"], &names).unwrap(),
            params,
            &CertificationConfig::default(),
        )
        .unwrap()
    }

    fn spec(sigma: &str, tau: &str) -> EquivalentSpec<f64> {
        let names = ["c", "alpha", "mu", "beta", "lambda", "C"];
        EquivalentSpec {
            tilde_sigma: parse(sigma, &["z"], &names).unwrap(),
            tilde_tau: parse(tau, &["z"], &names).unwrap(),
        }
    }

    #[test]
    fn linear_drift_shift_matches_closed_form() {
        // tilde_tau = beta z: rho~ = [c(alpha-beta-c) z^2 + (mu+beta+c)] y
        let base = rd_base(0.5, 1.0, 1.0, &[("beta", 0.3)]);
        let rho_tilde = equivalent_rho(&base, &spec("1", "beta*z")).unwrap();

        let expected = parse(
            "(c*(alpha - beta - c)*z^2 + (mu + beta + c))*exp(-0.5*c*z^2)",
            &["z"],
            &["c", "alpha", "mu", "beta"],
        )
        .unwrap();
        for i in 0..100 {
            let z = -5.0 + 10.0 * (i as f64 + 0.5) / 100.0;
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let got = rho_tilde.eval(&bd).unwrap();
            let want = expected.eval(&bd).unwrap();
            assert!((got - want).abs() < 1e-12, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn constant_drift_matches_closed_form() {
        // tilde_tau = beta: rho~ = [c(alpha-c)z^2 - beta c z + (mu+c)] y
        let base = rd_base(0.5, 1.0, 1.0, &[("beta", 0.3)]);
        let rho_tilde = equivalent_rho(&base, &spec("1", "beta")).unwrap();
        let expected = parse(
            "(c*(alpha - c)*z^2 - beta*c*z + (mu + c))*exp(-0.5*c*z^2)",
            &["z"],
            &["c", "alpha", "mu", "beta"],
        )
        .unwrap();
        for i in 0..100 {
            let z = -5.0 + 10.0 * (i as f64 + 0.5) / 100.0;
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let got = rho_tilde.eval(&bd).unwrap();
            let want = expected.eval(&bd).unwrap();
            assert!((got - want).abs() < 1e-12, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn identity_transform_returns_same_rho() {
        let base = rd_base(0.5, 1.0, 1.0, &[]);
        let sp = spec("1", "0");
        let rho_tilde = equivalent_rho(&base, &sp).unwrap();
        for i in 0..50 {
            let z = -4.0 + 8.0 * (i as f64 + 0.5) / 50.0;
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let got = rho_tilde.eval(&bd).unwrap();
            let want = base.profiles().rho().eval(&bd).unwrap();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn nonlinear_base_reduces_to_cubic_reaction() {
        // removing the constant convection from the nonlinear family leaves
        // rho~ = mu y - lambda y^3
        let base = instantiate(
            FamilyId::Example4Nonlinear,
            &b(&[("lambda", 2.0), ("C", 3.0), ("tau", 2.4)]),
            0.0,
            1.3,
        )
        .unwrap();
        let sp = spec("1", "0");
        let rho_tilde = equivalent_rho(&base, &sp).unwrap();
        let expected = parse("mu*y - lambda*y^3", &["z", "y"], &["mu", "lambda"]).unwrap();
        for i in 0..100 {
            let z = 0.1 + 30.0 * (i as f64 + 0.5) / 100.0;
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let got = rho_tilde.eval(&bd).unwrap();
            let want = expected.eval(&bd).unwrap();
            assert!((got - want).abs() < 1e-12, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn numeric_route_agrees_with_symbolic() {
        let base = rd_base(0.5, 1.0, 1.0, &[]);
        let sp = {
            let names = ["beta"];
            EquivalentSpec {
                tilde_sigma: parse("1", &["z"], &names).unwrap(),
                tilde_tau: parse("0.3*z", &["z"], &names).unwrap(),
            }
        };
        let rho_tilde = equivalent_rho(&base, &sp).unwrap();
        let n = 512;
        let h = 12.0 / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| -6.0 + h * i as f64).collect();
        let table = equivalent_rho_numeric(&base, &sp, &grid).unwrap();
        let mut max_dev = 0.0f64;
        for (i, &z) in grid.iter().enumerate() {
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let want = rho_tilde.eval(&bd).unwrap();
            max_dev = max_dev.max((table[i] - want).abs());
        }
        assert!(max_dev <= 1e-6, "max deviation {max_dev}");
    }

    #[test]
    fn numeric_route_identity_is_exact() {
        let base = rd_base(0.5, 1.0, 1.0, &[]);
        let sp = spec("1", "0");
        let n = 64;
        let h = 8.0 / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| -4.0 + h * i as f64).collect();
        let table = equivalent_rho_numeric(&base, &sp, &grid).unwrap();
        for (i, &z) in grid.iter().enumerate() {
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let want = base.profiles().rho().eval(&bd).unwrap();
            assert!((table[i] - want).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn grid_too_coarse_rejected() {
        let base = rd_base(0.5, 1.0, 1.0, &[]);
        let sp = spec("1", "0");
        let grid: Vec<f64> = (0..8).map(|i| i as f64 * 0.5 - 2.0).collect();
        assert!(matches!(
            equivalent_rho_numeric(&base, &sp, &grid),
            Err(CdrError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn continuity_identity_for_gaussian_base() {
        let base = rd_base(0.5, 1.0, 1.0, &[]);
        let sp = {
            EquivalentSpec {
                tilde_sigma: parse("1", &["z"], &[]).unwrap(),
                tilde_tau: parse("0.3*z", &["z"], &[]).unwrap(),
            }
        };
        let equiv = equivalent_system(&base, &sp).unwrap();
        let report =
            continuity_identity_check(&base, &equiv, (-9.0, 9.0), &QuadConfig::default()).unwrap();
        assert!(report.difference <= 1e-8, "difference {}", report.difference);
    }

    #[test]
    fn equivalence_is_path_independent() {
        // base -> spec1 -> spec2 equals base -> spec2
        let base = rd_base(0.5, 1.0, 1.0, &[]);
        let sp1 = EquivalentSpec {
            tilde_sigma: parse("1", &["z"], &[]).unwrap(),
            tilde_tau: parse("0.4*z", &["z"], &[]).unwrap(),
        };
        let sp2 = EquivalentSpec {
            tilde_sigma: parse("1 + 0.1*z^2", &["z"], &[]).unwrap(),
            tilde_tau: parse("0.2*z", &["z"], &[]).unwrap(),
        };
        let mid = equivalent_system(&base, &sp1).unwrap();
        let via_mid = equivalent_system(&mid, &sp2).unwrap();
        let direct = equivalent_system(&base, &sp2).unwrap();
        for i in 0..50 {
            let z = -4.0 + 8.0 * (i as f64 + 0.5) / 50.0;
            let y = base.y_value(z).unwrap();
            let bd = base.bindings_at(z, Some(y));
            let a = via_mid.profiles().rho().eval(&bd).unwrap();
            let c = direct.profiles().rho().eval(&bd).unwrap();
            assert!((a - c).abs() <= 1e-8 * (1.0 + c.abs()), "z={z}: {a} vs {c}");
        }
    }
}
