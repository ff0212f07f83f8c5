//! Scaling algebra: exponents, reduced profiles, and assembled systems.
//!
//! Two exponents are free: `alpha` (space/time) and `mu` (amplitude). The
//! convection, diffusion, and reaction time-exponents derive from them.
//! Physical-space fields reconstruct from the reduced profiles as
//! `W = t^mu y(z)`, `C = t^(alpha-1) tau(z)`, `D = t^(2 alpha-1) sigma(z)`,
//! `R = t^(mu-1) rho(z, y(z))` with `z = x / t^alpha`.

use crate::error::{CdrError, Result};
use crate::expr::{Bindings, Expr};
use crate::real::Real;
use crate::reduced_ode::{self, YTriple};

/// The two free scaling exponents plus the derived time-exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSet<R> {
    pub alpha: R,
    pub mu: R,
    /// Convection time-exponent, alpha - 1.
    pub gamma: R,
    /// Diffusion time-exponent, 2 alpha - 1.
    pub delta: R,
    /// Reaction time-exponent, mu - 1.
    pub rho_exp: R,
}

/// Derive the dependent exponents from the two free ones.
pub fn derive_exponents<R: Real>(alpha: R, mu: R) -> Result<ExponentSet<R>> {
    if !alpha.is_finite() || !mu.is_finite() {
        return Err(CdrError::NonFinite {
            what: format!("exponents alpha = {alpha}, mu = {mu}"),
        });
    }
    let one = R::one();
    let two = R::of(2.0);
    Ok(ExponentSet {
        alpha,
        mu,
        gamma: alpha - one,
        delta: two * alpha - one,
        rho_exp: mu - one,
    })
}

impl<R: Real> ExponentSet<R> {
    pub fn new(alpha: R, mu: R) -> Result<Self> {
        derive_exponents(alpha, mu)
    }

    /// Particle number is time-independent exactly when mu = -alpha.
    pub fn is_conserving(&self) -> bool {
        (self.alpha + self.mu).abs() <= R::of(1e-12) * (R::one() + self.alpha.abs() + self.mu.abs())
    }
}

/// Spatial domain of the independent variable (same shape in x and z).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainSpec {
    RealLine,
    /// [0, inf)
    HalfLine,
}

impl DomainSpec {
    pub fn contains<R: Real>(&self, x: R) -> bool {
        match self {
            DomainSpec::RealLine => true,
            DomainSpec::HalfLine => x >= R::zero(),
        }
    }

    /// Default certification/sampling window in z.
    pub fn default_window<R: Real>(&self) -> (R, R) {
        match self {
            DomainSpec::RealLine => (R::of(-6.0), R::of(6.0)),
            DomainSpec::HalfLine => (R::zero(), R::of(12.0)),
        }
    }

    /// `n` midpoint samples strictly inside `window`.
    pub fn interior_samples<R: Real>(&self, n: usize, window: (R, R)) -> Vec<R> {
        let (lo, hi) = window;
        let step = (hi - lo) / R::of(n as f64);
        (0..n)
            .map(|i| lo + step * (R::of(i as f64) + R::of(0.5)))
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainSpec::RealLine => "real_line",
            DomainSpec::HalfLine => "half_line",
        }
    }
}

/// Reduced z-profiles of a system: diffusion `sigma`, convection `tau`,
/// reaction `rho` (may reference `y`), plus the optional conserving-case
/// companions `rho_bar` (with `rho = -d rho_bar / dz` along the solution)
/// and `drift_beta` (with `rho_bar = beta y`), and the free function `g`.
#[derive(Debug, Clone)]
pub struct ProfileSet<R: Real> {
    sigma: Expr<R>,
    tau: Expr<R>,
    rho: Expr<R>,
    sigma_prime: Expr<R>,
    tau_prime: Expr<R>,
    rho_bar: Option<Expr<R>>,
    drift_beta: Option<Expr<R>>,
    g: Option<Expr<R>>,
    domain: DomainSpec,
}

impl<R: Real> ProfileSet<R> {
    pub fn new(sigma: Expr<R>, tau: Expr<R>, rho: Expr<R>, domain: DomainSpec) -> Self {
        let sigma_prime = sigma.differentiate("z");
        let tau_prime = tau.differentiate("z");
        ProfileSet {
            sigma,
            tau,
            rho,
            sigma_prime,
            tau_prime,
            rho_bar: None,
            drift_beta: None,
            g: None,
            domain,
        }
    }

    pub fn with_rho_bar(mut self, rho_bar: Expr<R>) -> Self {
        self.rho_bar = Some(rho_bar);
        self
    }

    pub fn with_drift_beta(mut self, beta: Expr<R>) -> Self {
        self.drift_beta = Some(beta);
        self
    }

    pub fn with_g(mut self, g: Expr<R>) -> Self {
        self.g = Some(g);
        self
    }

    pub fn sigma(&self) -> &Expr<R> {
        &self.sigma
    }

    pub fn tau(&self) -> &Expr<R> {
        &self.tau
    }

    pub fn rho(&self) -> &Expr<R> {
        &self.rho
    }

    pub fn sigma_prime(&self) -> &Expr<R> {
        &self.sigma_prime
    }

    pub fn tau_prime(&self) -> &Expr<R> {
        &self.tau_prime
    }

    pub fn rho_bar(&self) -> Option<&Expr<R>> {
        self.rho_bar.as_ref()
    }

    pub fn drift_beta(&self) -> Option<&Expr<R>> {
        self.drift_beta.as_ref()
    }

    pub fn g(&self) -> Option<&Expr<R>> {
        self.g.as_ref()
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }
}

/// Similarity variable `z = x / t^alpha`; requires `t > 0`.
pub fn similarity_variable<R: Real>(x: R, t: R, alpha: R) -> Result<R> {
    if !(t > R::zero()) {
        return Err(CdrError::Domain {
            what: format!("t must be positive, got {t}"),
        });
    }
    Ok(x / t.powf(alpha))
}

/// Physical-space coefficient values at one (x, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalFields<R> {
    pub convection: R,
    pub diffusion: R,
    pub reaction: R,
}

/// How the residual certification samples a candidate system.
#[derive(Debug, Clone)]
pub struct CertificationConfig<R> {
    pub n_points: usize,
    pub tol: R,
    /// Sampling window in z; `None` uses the domain default.
    pub window: Option<(R, R)>,
}

impl<R: Real> Default for CertificationConfig<R> {
    fn default() -> Self {
        CertificationConfig {
            n_points: 50,
            tol: R::of(1e-8),
            window: None,
        }
    }
}

/// Relative tolerance for the `rho = -d rho_bar / dz` consistency check.
const RHO_BAR_CONSISTENCY_RTOL: f64 = 1e-9;

/// An exactly solvable system: profiles, exponents, parameter values, and
/// the closed-form similarity profile `y(z)`. Construction certifies the
/// reduced-equation residual at sampled interior points; a value of this
/// type is always a certified system.
#[derive(Debug, Clone)]
pub struct SolvableSystem<R: Real> {
    name: String,
    exponents: ExponentSet<R>,
    profiles: ProfileSet<R>,
    y: Expr<R>,
    y_prime: Expr<R>,
    y_second: Expr<R>,
    params: Bindings<R>,
    certified_residual: R,
}

impl<R: Real> SolvableSystem<R> {
    pub fn new(
        name: impl Into<String>,
        exponents: ExponentSet<R>,
        profiles: ProfileSet<R>,
        y: Expr<R>,
        params: Bindings<R>,
        cfg: &CertificationConfig<R>,
    ) -> Result<Self> {
        let name = name.into();
        let y_prime = y.differentiate("z");
        let y_second = y_prime.differentiate("z");
        let sys = SolvableSystem {
            name,
            exponents,
            profiles,
            y,
            y_prime,
            y_second,
            params,
            certified_residual: R::zero(),
        };
        sys.certify(cfg)
    }

    fn certify(mut self, cfg: &CertificationConfig<R>) -> Result<Self> {
        let window = cfg
            .window
            .unwrap_or_else(|| self.profiles.domain.default_window());
        let samples = self.profiles.domain.interior_samples(cfg.n_points, window);
        let mut max_residual = R::zero();
        for &z in &samples {
            let yt = self.y_triple(z)?;
            let r = reduced_ode::residual(&self.profiles, &self.exponents, &self.params, &yt, z)?;
            if !r.is_finite() {
                return Err(CdrError::NonFinite {
                    what: format!("reduced residual at z = {z}"),
                });
            }
            max_residual = max_residual.max(r.abs());
        }
        if max_residual > cfg.tol {
            return Err(CdrError::Certification {
                name: self.name.clone(),
                max_residual: max_residual.as_f64(),
                tol: cfg.tol.as_f64(),
            });
        }
        if self.profiles.rho_bar.is_some() {
            self.check_rho_bar_consistency(&samples)?;
        }
        self.certified_residual = max_residual;
        Ok(self)
    }

    /// `rho` must equal the total derivative `-d/dz rho_bar(z, y(z))`
    /// along the closed-form profile.
    fn check_rho_bar_consistency(&self, samples: &[R]) -> Result<()> {
        let rho_bar = self.profiles.rho_bar.as_ref().unwrap();
        let rb_z = rho_bar.differentiate("z");
        let rb_y = rho_bar.differentiate("y");
        for &z in samples {
            let yt = self.y_triple(z)?;
            let b = self.bindings_at(z, Some(yt.y));
            let total = rb_z.eval(&b)? + rb_y.eval(&b)? * yt.y1;
            let rho = self.profiles.rho.eval(&b)?;
            let rtol = R::of(RHO_BAR_CONSISTENCY_RTOL);
            if (-total - rho).abs() > rtol * (R::one() + rho.abs()) {
                return Err(CdrError::ContinuityViolation {
                    reason: format!(
                        "rho_bar inconsistent with rho at z = {z}: -d(rho_bar)/dz = {}, rho = {rho}",
                        -total
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn exponents(&self) -> &ExponentSet<R> {
        &self.exponents
    }

    pub fn profiles(&self) -> &ProfileSet<R> {
        &self.profiles
    }

    pub fn y_expr(&self) -> &Expr<R> {
        &self.y
    }

    pub fn y_prime_expr(&self) -> &Expr<R> {
        &self.y_prime
    }

    pub fn params(&self) -> &Bindings<R> {
        &self.params
    }

    pub fn domain(&self) -> DomainSpec {
        self.profiles.domain
    }

    /// Max residual observed at certification time.
    pub fn certified_residual(&self) -> R {
        self.certified_residual
    }

    pub fn is_conserving(&self) -> bool {
        self.exponents.is_conserving()
    }

    /// Parameter bindings extended with `z` (and optionally `y`).
    pub fn bindings_at(&self, z: R, y: Option<R>) -> Bindings<R> {
        let mut b = self.params.clone();
        b.set("z", z);
        if let Some(yv) = y {
            b.set("y", yv);
        }
        b
    }

    pub fn y_value(&self, z: R) -> Result<R> {
        let b = self.bindings_at(z, None);
        Ok(self.y.eval(&b)?)
    }

    /// `(y, y', y'')` from the symbolic profile and its derivatives.
    pub fn y_triple(&self, z: R) -> Result<YTriple<R>> {
        let b = self.bindings_at(z, None);
        Ok(YTriple {
            y: self.y.eval(&b)?,
            y1: self.y_prime.eval(&b)?,
            y2: self.y_second.eval(&b)?,
        })
    }

    /// `W(x, t) = t^mu y(x / t^alpha)`.
    pub fn reconstruct_w(&self, x: R, t: R) -> Result<R> {
        if !self.profiles.domain.contains(x) {
            return Err(CdrError::Domain {
                what: format!("x = {x} outside the {} domain", self.profiles.domain.name()),
            });
        }
        let z = similarity_variable(x, t, self.exponents.alpha)?;
        Ok(t.powf(self.exponents.mu) * self.y_value(z)?)
    }

    /// `(C, D, R)(x, t)` from the reduced profiles; `rho` is evaluated with
    /// the closed-form `y(z)` bound.
    pub fn physical_fields(&self, x: R, t: R) -> Result<PhysicalFields<R>> {
        let z = similarity_variable(x, t, self.exponents.alpha)?;
        let yv = self.y_value(z)?;
        let b = self.bindings_at(z, Some(yv));
        Ok(PhysicalFields {
            convection: t.powf(self.exponents.gamma) * self.profiles.tau.eval(&b)?,
            diffusion: t.powf(self.exponents.delta) * self.profiles.sigma.eval(&b)?,
            reaction: t.powf(self.exponents.rho_exp) * self.profiles.rho.eval(&b)?,
        })
    }

    /// Verify the scale-transformation law on the given sample points:
    /// each field at `(eps^a x, eps^b t)` must equal the field at `(x, t)`
    /// times `eps` to its scaling exponent. Requires `a / b = alpha`.
    pub fn scaling_symmetry_check(
        &self,
        epsilon: R,
        a: R,
        b: R,
        samples: &[(R, R)],
    ) -> Result<SymmetryReport<R>> {
        if b == R::zero() {
            return Err(CdrError::Domain {
                what: "scaling exponent b must be nonzero".into(),
            });
        }
        if !(epsilon > R::zero()) {
            return Err(CdrError::Domain {
                what: format!("epsilon must be positive, got {epsilon}"),
            });
        }
        let alpha = self.exponents.alpha;
        if (a / b - alpha).abs() > R::of(1e-12) * (R::one() + alpha.abs()) {
            return Err(CdrError::Domain {
                what: format!("a/b = {} must equal alpha = {alpha}", a / b),
            });
        }
        let mu = self.exponents.mu;
        let one = R::one();
        let w_factor = epsilon.powf(mu * b);
        let c_factor = epsilon.powf(b * (alpha - one));
        let d_factor = epsilon.powf(b * (R::of(2.0) * alpha - one));
        let r_factor = epsilon.powf(b * (mu - one));

        let mut report = SymmetryReport {
            w: R::zero(),
            convection: R::zero(),
            diffusion: R::zero(),
            reaction: R::zero(),
        };
        for &(x, t) in samples {
            let xs = epsilon.powf(a) * x;
            let ts = epsilon.powf(b) * t;
            let w0 = self.reconstruct_w(x, t)?;
            let ws = self.reconstruct_w(xs, ts)?;
            let f0 = self.physical_fields(x, t)?;
            let fs = self.physical_fields(xs, ts)?;
            report.w = report.w.max(rel_dev(ws, w_factor * w0));
            report.convection = report
                .convection
                .max(rel_dev(fs.convection, c_factor * f0.convection));
            report.diffusion = report
                .diffusion
                .max(rel_dev(fs.diffusion, d_factor * f0.diffusion));
            report.reaction = report
                .reaction
                .max(rel_dev(fs.reaction, r_factor * f0.reaction));
        }
        Ok(report)
    }
}

fn rel_dev<R: Real>(actual: R, expected: R) -> R {
    let diff = (actual - expected).abs();
    if diff == R::zero() {
        return R::zero();
    }
    let scale = actual.abs().max(expected.abs());
    if scale > R::zero() {
        diff / scale
    } else {
        diff
    }
}

/// Max relative deviation of each field under the scale transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport<R> {
    pub w: R,
    pub convection: R,
    pub diffusion: R,
    pub reaction: R,
}

impl<R: Real> SymmetryReport<R> {
    pub fn max_deviation(&self) -> R {
        self.w
            .max(self.convection)
            .max(self.diffusion)
            .max(self.reaction)
    }
}
