//! Catalog of built-in exactly solvable families.
//!
//! Each family fixes the reduced profiles and the closed-form similarity
//! profile up to a small parameter set:
//!
//! - `example1`: `sigma = 1`, `tau = alpha z`, gaussian profile
//!   `y = exp(-c z^2 / 2)` on the real line, `c > 0`.
//! - `example2`: `sigma = beta z`, `tau = (alpha - beta a) z + beta`,
//!   `y = z exp(-a z)` on the half line, `a > 0`.
//! - `example3`: `sigma = -(alpha+mu) z^2 / 2`, `tau = -mu z`,
//!   `y = exp(int g)` for a free decay-generating `g(z)`
//!   (default `g = -k z`, `k > 0`).
//! - `example4_nonlinear`: `sigma = 1`, constant `tau`, rational profile
//!   `y = 1 / (sqrt(lambda/2) z + C)` with a cubic reaction, on the half
//!   line. The boundary condition `Delta(alpha z y) = 0` forces
//!   `alpha = 0` for this profile.
//!
//! Instantiation certifies the reduced-equation residual at sampled interior
//! points; an uncertified system is never returned.

use crate::error::{CdrError, Result};
use crate::expr::{parse, Bindings, BinOp, Expr, Func};
use crate::real::Real;
use crate::scaling::{
    derive_exponents, CertificationConfig, DomainSpec, ProfileSet, SolvableSystem,
};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    Example1,
    Example2,
    Example3,
    Example4Nonlinear,
}

impl FamilyId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyId::Example1 => "example1",
            FamilyId::Example2 => "example2",
            FamilyId::Example3 => "example3",
            FamilyId::Example4Nonlinear => "example4_nonlinear",
        }
    }

    pub fn all() -> [FamilyId; 4] {
        [
            FamilyId::Example1,
            FamilyId::Example2,
            FamilyId::Example3,
            FamilyId::Example4Nonlinear,
        ]
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = CdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(FamilyId::Example1),
            "example2" => Ok(FamilyId::Example2),
            "example3" => Ok(FamilyId::Example3),
            "example4_nonlinear" => Ok(FamilyId::Example4Nonlinear),
            other => Err(CdrError::Domain {
                what: format!(
                    "unknown family `{other}` (expected one of: example1, example2, example3, example4_nonlinear)"
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    Positive,
    NonZero,
    Any,
}

impl Requirement {
    pub fn describe(&self) -> &'static str {
        match self {
            Requirement::Positive => "> 0",
            Requirement::NonZero => "!= 0",
            Requirement::Any => "any real",
        }
    }

    fn check<R: Real>(&self, v: R) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self {
            Requirement::Positive => v > R::zero(),
            Requirement::NonZero => v != R::zero(),
            Requirement::Any => true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub requirement: Requirement,
    pub description: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct FamilyDescriptor {
    pub id: FamilyId,
    pub domain: DomainSpec,
    /// Whether the family as cataloged fixes mu = -alpha. All four are
    /// presented with free mu; instances still conserve when mu = -alpha
    /// is chosen (not available for example4, which forces alpha = 0).
    pub conserving: bool,
    pub params: &'static [ParamSpec],
    pub notes: &'static str,
}

const EXAMPLE1_PARAMS: &[ParamSpec] = &[ParamSpec {
    name: "c",
    requirement: Requirement::Positive,
    description: "gaussian width of y = exp(-c z^2 / 2)",
}];

const EXAMPLE2_PARAMS: &[ParamSpec] = &[
    ParamSpec {
        name: "a",
        requirement: Requirement::Positive,
        description: "decay rate of y = z exp(-a z)",
    },
    ParamSpec {
        name: "beta",
        requirement: Requirement::NonZero,
        description: "diffusion slope, sigma = beta z",
    },
];

const EXAMPLE3_PARAMS: &[ParamSpec] = &[ParamSpec {
    name: "k",
    requirement: Requirement::Positive,
    description: "slope of the default g(z) = -k z",
}];

const EXAMPLE4_PARAMS: &[ParamSpec] = &[
    ParamSpec {
        name: "lambda",
        requirement: Requirement::Positive,
        description: "cubic reaction strength",
    },
    ParamSpec {
        name: "C",
        requirement: Requirement::Positive,
        description: "offset of y = 1 / (sqrt(lambda/2) z + C)",
    },
    ParamSpec {
        name: "tau",
        requirement: Requirement::Any,
        description: "constant convection profile",
    },
];

/// All four family descriptors, in stable order.
pub fn catalog() -> Vec<FamilyDescriptor> {
    vec![
        FamilyDescriptor {
            id: FamilyId::Example1,
            domain: DomainSpec::RealLine,
            conserving: false,
            params: EXAMPLE1_PARAMS,
            notes: "gaussian profile; linear reaction",
        },
        FamilyDescriptor {
            id: FamilyId::Example2,
            domain: DomainSpec::HalfLine,
            conserving: false,
            params: EXAMPLE2_PARAMS,
            notes: "linear-diffusion half-line family",
        },
        FamilyDescriptor {
            id: FamilyId::Example3,
            domain: DomainSpec::RealLine,
            conserving: false,
            params: EXAMPLE3_PARAMS,
            notes: "free g(z); requires alpha + mu != 0; custom g needs its antiderivative",
        },
        FamilyDescriptor {
            id: FamilyId::Example4Nonlinear,
            domain: DomainSpec::HalfLine,
            conserving: false,
            params: EXAMPLE4_PARAMS,
            notes: "nonlinear cubic reaction; alpha forced to 0",
        },
    ]
}

/// Non-numeric family inputs: a custom `g` for `example3` together with an
/// antiderivative `G` (checked against `g` numerically) so the profile
/// `y = exp(G)` stays symbolic.
#[derive(Debug, Clone)]
pub struct Customization<R> {
    pub g: Option<Expr<R>>,
    pub g_antiderivative: Option<Expr<R>>,
}

impl<R> Default for Customization<R> {
    fn default() -> Self {
        Customization {
            g: None,
            g_antiderivative: None,
        }
    }
}

pub fn instantiate<R: Real>(
    id: FamilyId,
    params: &Bindings<R>,
    alpha: R,
    mu: R,
) -> Result<SolvableSystem<R>> {
    instantiate_with(id, params, alpha, mu, &Customization::default())
}

pub fn instantiate_with<R: Real>(
    id: FamilyId,
    params: &Bindings<R>,
    alpha: R,
    mu: R,
    custom: &Customization<R>,
) -> Result<SolvableSystem<R>> {
    let descriptor = catalog()
        .into_iter()
        .find(|d| d.id == id)
        .expect("catalog covers all ids");
    let custom_g = id == FamilyId::Example3 && custom.g.is_some();
    check_params(&descriptor, params, custom_g)?;

    if !alpha.is_finite() || !mu.is_finite() {
        return Err(CdrError::NonFinite {
            what: format!("alpha = {alpha}, mu = {mu}"),
        });
    }

    let mut bound = params.clone();
    bound.set("alpha", alpha);
    bound.set("mu", mu);
    let param_names: Vec<&str> = bound.names().collect();

    let pz = |src: &str, names: &[&str]| -> Result<Expr<R>> {
        Ok(parse(src, &["z"], names)?)
    };
    let pzy = |src: &str, names: &[&str]| -> Result<Expr<R>> {
        Ok(parse(src, &["z", "y"], names)?)
    };

    let exponents = derive_exponents(alpha, mu)?;
    let cert = CertificationConfig::default();

    match id {
        FamilyId::Example1 => {
            let profiles = ProfileSet::new(
                pz("1", &param_names)?,
                pz("alpha*z", &param_names)?,
                pzy("(-c^2*z^2 + c + alpha + mu)*y", &param_names)?,
                DomainSpec::RealLine,
            );
            let y = pz("exp(-0.5*c*z^2)", &param_names)?;
            SolvableSystem::new("example1", exponents, profiles, y, bound, &cert)
        }
        FamilyId::Example2 => {
            let profiles = ProfileSet::new(
                pz("beta*z", &param_names)?,
                pz("(alpha - beta*a)*z + beta", &param_names)?,
                pzy("(alpha + mu)*z*exp(-a*z)", &param_names)?,
                DomainSpec::HalfLine,
            );
            let y = pz("z*exp(-a*z)", &param_names)?;
            SolvableSystem::new("example2", exponents, profiles, y, bound, &cert)
        }
        FamilyId::Example3 => {
            // sigma = -(alpha+mu) z^2 / 2 must not vanish identically
            if (alpha + mu).abs() <= R::of(1e-12) * (R::one() + alpha.abs() + mu.abs()) {
                return Err(CdrError::ParamOutOfRange {
                    name: "alpha+mu".into(),
                    requirement: "example3 needs alpha + mu != 0".into(),
                });
            }
            let (g, g_anti) = match (&custom.g, &custom.g_antiderivative) {
                (Some(g), Some(ga)) => (g.clone(), ga.clone()),
                (None, None) => (
                    pz("-k*z", &param_names)?,
                    pz("-0.5*k*z^2", &param_names)?,
                ),
                _ => {
                    return Err(CdrError::MissingProfile {
                        name: "g and g_antiderivative (both required together)",
                    })
                }
            };
            check_antiderivative(&g, &g_anti, &bound)?;
            // y = exp(G); rho = (alpha+mu)/2 z^2 (g^2 + g') y
            let y = Expr::Call(Func::Exp, Box::new(g_anti));
            let g_prime = g.differentiate("z");
            let rho = Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Bin(
                    BinOp::Mul,
                    Box::new(pz("0.5*(alpha + mu)*z^2", &param_names)?),
                    Box::new(Expr::Bin(
                        BinOp::Add,
                        Box::new(Expr::Bin(
                            BinOp::Pow,
                            Box::new(g.clone()),
                            Box::new(Expr::num(2.0)),
                        )),
                        Box::new(g_prime),
                    )),
                )),
                Box::new(Expr::var("y")),
            )
            .simplified();
            check_decay(&y, &bound, DomainSpec::RealLine)?;
            let profiles = ProfileSet::new(
                pz("-0.5*(alpha + mu)*z^2", &param_names)?,
                pz("-mu*z", &param_names)?,
                rho,
                DomainSpec::RealLine,
            )
            .with_g(g);
            SolvableSystem::new("example3", exponents, profiles, y, bound, &cert)
        }
        FamilyId::Example4Nonlinear => {
            if alpha != R::zero() {
                return Err(CdrError::ContinuityViolation {
                    reason: format!(
                        "example4_nonlinear requires alpha = 0 (got {alpha}): the boundary \
                         term alpha*z*y tends to alpha*sqrt(2/lambda) != 0 as z -> infinity"
                    ),
                });
            }
            let profiles = ProfileSet::new(
                pz("1", &param_names)?,
                pz("tau", &param_names)?,
                pzy(
                    "mu*y + (alpha*z - tau)*sqrt(lambda/2)*y^2 - lambda*y^3",
                    &param_names,
                )?,
                DomainSpec::HalfLine,
            );
            let y = pz("1/(sqrt(lambda/2)*z + C)", &param_names)?;
            SolvableSystem::new("example4_nonlinear", exponents, profiles, y, bound, &cert)
        }
    }
}

fn check_params<R: Real>(
    descriptor: &FamilyDescriptor,
    params: &Bindings<R>,
    custom_g: bool,
) -> Result<()> {
    for spec in descriptor.params {
        // the default-g slope is not consulted when a custom g is supplied
        if custom_g && spec.name == "k" {
            continue;
        }
        let v = params.get(spec.name).ok_or(CdrError::ParamOutOfRange {
            name: spec.name.into(),
            requirement: format!("{} ({}), missing", spec.requirement.describe(), spec.description),
        })?;
        if !spec.requirement.check(v) {
            return Err(CdrError::ParamOutOfRange {
                name: spec.name.into(),
                requirement: format!("{} (got {v})", spec.requirement.describe()),
            });
        }
    }
    if !custom_g {
        for name in params.names() {
            if name == "alpha" || name == "mu" {
                continue;
            }
            if !descriptor.params.iter().any(|p| p.name == name) {
                return Err(CdrError::ParamOutOfRange {
                    name: name.into(),
                    requirement: format!("not a parameter of {}", descriptor.id),
                });
            }
        }
    }
    Ok(())
}

/// Verify G' = g numerically at sampled points.
fn check_antiderivative<R: Real>(g: &Expr<R>, g_anti: &Expr<R>, params: &Bindings<R>) -> Result<()> {
    let ga_prime = g_anti.differentiate("z");
    let mut b = params.clone();
    for i in 0..33 {
        let z = R::of(-4.0) + R::of(8.0) * R::of(i as f64) / R::of(32.0);
        b.set("z", z);
        let lhs = ga_prime.eval(&b)?;
        let rhs = g.eval(&b)?;
        if (lhs - rhs).abs() > R::of(1e-9) * (R::one() + rhs.abs()) {
            return Err(CdrError::Domain {
                what: format!(
                    "g_antiderivative does not differentiate to g at z = {z}: {lhs} vs {rhs}"
                ),
            });
        }
    }
    Ok(())
}

/// The free-g profile must decay towards the window edges so boundary
/// terms vanish.
fn check_decay<R: Real>(y: &Expr<R>, params: &Bindings<R>, domain: DomainSpec) -> Result<()> {
    let (lo, hi) = domain.default_window::<R>();
    let mut b = params.clone();
    let mut value_at = |z: R| -> Result<R> {
        b.set("z", z);
        Ok(y.eval(&b)?.abs())
    };
    let threshold = R::of(1e-6);
    for edge in [lo, hi] {
        let at_edge = value_at(edge)?;
        let inward = value_at(edge * R::of(0.5))?;
        if !(at_edge <= threshold) || !(at_edge < inward) {
            return Err(CdrError::Domain {
                what: format!(
                    "profile does not decay at the window edge z = {edge} (|y| = {at_edge}); \
                     choose g with int g -> -infinity at the boundaries"
                ),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(pairs: &[(&str, f64)]) -> Bindings<f64> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn catalog_is_stable_and_unique() {
        let cat = catalog();
        assert_eq!(cat.len(), 4);
        let ids: Vec<_> = cat.iter().map(|d| d.id).collect();
        assert_eq!(
            ids,
            vec![
                FamilyId::Example1,
                FamilyId::Example2,
                FamilyId::Example3,
                FamilyId::Example4Nonlinear
            ]
        );
        let ex4 = &cat[3];
        assert!(!ex4.conserving);
        assert!(ex4.notes.contains("alpha forced to 0"));
    }

    #[test]
    fn example1_certifies() {
        let sys = instantiate(FamilyId::Example1, &b(&[("c", 1.0)]), 0.5, 1.0).unwrap();
        assert!(sys.certified_residual() <= 1e-8);
        assert!(!sys.is_conserving());
    }

    #[test]
    fn example2_figure_parameters() {
        let sys =
            instantiate(FamilyId::Example2, &b(&[("a", 2.0), ("beta", 0.3)]), 0.5, 1.0).unwrap();
        // W(1, 1) = e^{-2}
        let w = sys.reconstruct_w(1.0, 1.0).unwrap();
        assert!((w - (-2.0f64).exp()).abs() < 1e-15);
        // W(0, t) = 0 since y(0) = 0
        assert_eq!(sys.reconstruct_w(0.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn example2_fields_at_figure_point() {
        let sys =
            instantiate(FamilyId::Example2, &b(&[("a", 2.0), ("beta", 0.3)]), 0.5, 1.0).unwrap();
        let f = sys.physical_fields(1.0, 1.0).unwrap();
        assert!((f.convection - 0.2).abs() < 1e-15);
        assert!((f.diffusion - 0.3).abs() < 1e-15);
        assert!((f.reaction - 1.5 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn example3_default_g_certifies() {
        let sys = instantiate(FamilyId::Example3, &b(&[("k", 1.0)]), 0.5, 1.0).unwrap();
        assert!(sys.certified_residual() <= 1e-8);
        // y = exp(-z^2/2)
        let v = sys.y_value(1.0).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn example3_rejects_vanishing_alpha_plus_mu() {
        let err = instantiate(FamilyId::Example3, &b(&[("k", 1.0)]), 0.5, -0.5).unwrap_err();
        assert!(matches!(err, CdrError::ParamOutOfRange { .. }));
    }

    #[test]
    fn example3_custom_g() {
        // g = -z^3: y = exp(-z^4/4)
        let g = parse("-z^3", &["z"], &[]).unwrap();
        let ga = parse("-0.25*z^4", &["z"], &[]).unwrap();
        let custom = Customization {
            g: Some(g),
            g_antiderivative: Some(ga),
        };
        let sys =
            instantiate_with(FamilyId::Example3, &b(&[]), 0.5, 1.0, &custom).unwrap();
        let v = sys.y_value(1.0).unwrap();
        assert!((v - (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn example3_custom_g_requires_matching_antiderivative() {
        let g = parse("-z^3", &["z"], &[]).unwrap();
        let ga = parse("-0.3*z^4", &["z"], &[]).unwrap();
        let custom = Customization {
            g: Some(g),
            g_antiderivative: Some(ga),
        };
        assert!(instantiate_with(FamilyId::Example3, &b(&[]), 0.5, 1.0, &custom).is_err());
    }

    #[test]
    fn example4_figure_parameters() {
        let sys = instantiate(
            FamilyId::Example4Nonlinear,
            &b(&[("lambda", 2.0), ("C", 3.0), ("tau", 2.4)]),
            0.0,
            1.3,
        )
        .unwrap();
        let w = sys.reconstruct_w(0.0, 1.0).unwrap();
        assert_eq!(w, 1.0 / 3.0);
        // C = tau / t and D = 1 / t at t = 2
        let f = sys.physical_fields(5.0, 2.0).unwrap();
        assert!((f.convection - 1.2).abs() < 1e-15);
        assert!((f.diffusion - 0.5).abs() < 1e-15);
    }

    #[test]
    fn example4_rejects_nonzero_alpha() {
        let err = instantiate(
            FamilyId::Example4Nonlinear,
            &b(&[("lambda", 2.0), ("C", 3.0), ("tau", 2.4)]),
            0.5,
            1.3,
        )
        .unwrap_err();
        match err {
            CdrError::ContinuityViolation { reason } => {
                assert!(reason.contains("alpha = 0"));
            }
            other => panic!("expected continuity violation, got {other:?}"),
        }
    }

    #[test]
    fn parameter_ranges_enforced() {
        assert!(instantiate(FamilyId::Example1, &b(&[("c", -1.0)]), 0.5, 1.0).is_err());
        assert!(instantiate(FamilyId::Example2, &b(&[("a", 2.0), ("beta", 0.0)]), 0.5, 1.0)
            .is_err());
        assert!(instantiate(
            FamilyId::Example4Nonlinear,
            &b(&[("lambda", -2.0), ("C", 3.0), ("tau", 0.0)]),
            0.0,
            1.3
        )
        .is_err());
        // unknown parameter is a spec mistake
        assert!(instantiate(FamilyId::Example1, &b(&[("c", 1.0), ("zz", 1.0)]), 0.5, 1.0)
            .is_err());
    }

    #[test]
    fn tampered_reaction_fails_certification() {
        // hand-built example2 with the reaction coefficient nudged by +0.1
        let names = ["a", "beta", "alpha", "mu"];
        let sigma = parse("beta*z", &["z"], &names).unwrap();
        let tau = parse("(alpha - beta*a)*z + beta", &["z"], &names).unwrap();
        let rho = parse("(alpha + mu + 0.1)*z*exp(-a*z)", &["z", "y"], &names).unwrap();
        let y = parse("z*exp(-a*z)", &["z"], &names).unwrap();
        let profiles = ProfileSet::new(sigma, tau, rho, DomainSpec::HalfLine);
        let params = b(&[("a", 2.0), ("beta", 0.3), ("alpha", 0.5), ("mu", 1.0)]);
        let err = SolvableSystem::new(
            "tampered",
            derive_exponents(0.5, 1.0).unwrap(),
            profiles,
            y,
            params,
            &CertificationConfig::default(),
        )
        .unwrap_err();
        match err {
            CdrError::Certification { max_residual, .. } => {
                assert!(max_residual > 1e-3, "residual should be O(0.1), got {max_residual}");
            }
            other => panic!("expected certification failure, got {other:?}"),
        }
    }
}
