//! Exactly solvable convection-diffusion-reaction (CDR) systems built from
//! similarity profiles.
//!
//! A CDR system
//!
//! ```text
//! dW/dt = d/dx ( D dW/dx ) - d/dx ( C W ) + R
//! ```
//!
//! with power-law scaling in time collapses onto the similarity variable
//! `z = x / t^alpha`. Writing `W = t^mu y(z)`, `C = t^(alpha-1) tau(z)`,
//! `D = t^(2 alpha-1) sigma(z)`, `R = t^(mu-1) rho(z)` reduces the PDE to
//! the ordinary differential equation
//!
//! ```text
//! sigma y'' + (sigma' + alpha z - tau) y' - (tau' + mu) y + rho = 0
//! ```
//!
//! This crate constructs systems of this form whose reduced equation is
//! solved exactly by a closed-form profile `y(z)`, and certifies them
//! independently: reduced-ODE residuals, continuity balances, quadrature
//! solution formulas, and a finite-difference integration of the full PDE.
//!
//! Modules:
//!
//! - [`expr`]: the expression mini-language for profile functions
//! - [`scaling`]: exponent algebra, profile sets, assembled systems
//! - [`reduced_ode`]: reduced-equation residuals and continuity diagnostics
//! - [`quadrature`]: adaptive Gauss-Kronrod kernel and profile constructors
//! - [`families`]: the catalog of built-in solvable families
//! - [`equivalence`]: systems sharing the same similarity profile
//! - [`verifier`]: full-PDE finite-difference certification
//!
//! All numerics are generic over the scalar type via [`real::Real`];
//! `f64`-concrete aliases (`Expr64`, `SolvableSystem64`, ...) live at the
//! crate root.

pub mod equivalence;
pub mod error;
pub mod expr;
pub mod families;
pub mod quadrature;
pub mod real;
pub mod reduced_ode;
pub mod scaling;
pub mod verifier;

mod stencil;

pub use error::{CdrError, Result};
pub use real::Real;

/// f64-concrete aliases for the common entry points.
pub type Expr64 = expr::Expr<f64>;
pub type Bindings64 = expr::Bindings<f64>;
pub type ExponentSet64 = scaling::ExponentSet<f64>;
pub type ProfileSet64 = scaling::ProfileSet<f64>;
pub type SolvableSystem64 = scaling::SolvableSystem<f64>;
pub type Grid1D64 = verifier::Grid1D<f64>;
