//! Crate-wide error type.

use crate::expr::{EvalError, ParseError};
use std::fmt;

pub type Result<T> = std::result::Result<T, CdrError>;

#[derive(Debug, Clone, PartialEq)]
pub enum CdrError {
    Parse(ParseError),
    Eval(EvalError),
    /// An input that must be finite was not.
    NonFinite { what: String },
    /// t <= 0, x outside the domain, and similar violations.
    Domain { what: String },
    /// Parameter outside its admissible range.
    ParamOutOfRange { name: String, requirement: String },
    /// Adaptive quadrature could not meet the tolerance.
    QuadratureNoConvergence { a: f64, b: f64, error_estimate: f64, tol: f64 },
    /// Integrand produced a non-finite sample.
    NonFiniteSample { z: f64 },
    /// The integral does not converge on the (truncated) domain.
    DivergentIntegral { what: String },
    /// Candidate system failed residual certification.
    Certification { name: String, max_residual: f64, tol: f64 },
    /// Continuity requirement violated at construction time.
    ContinuityViolation { reason: String },
    /// The diffusion profile vanishes at a sampled interior point.
    SigmaVanishes { z: f64 },
    /// Operation requires the conserving case mu = -alpha.
    NotConserving { alpha: f64, mu: f64 },
    /// A profile required by the operation is absent.
    MissingProfile { name: &'static str },
    /// Time integration produced a non-finite value.
    Diverged { step: usize },
    /// Grid has too few points for the stencils in use.
    GridTooCoarse { n: usize, min: usize },
    /// Query outside the tabulated window of a constructed profile.
    OutOfWindow { z: f64, lo: f64, hi: f64 },
}

impl fmt::Display for CdrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CdrError::Parse(e) => write!(f, "parse error: {e}"),
            CdrError::Eval(e) => write!(f, "evaluation error: {e}"),
            CdrError::NonFinite { what } => write!(f, "non-finite input: {what}"),
            CdrError::Domain { what } => write!(f, "domain violation: {what}"),
            CdrError::ParamOutOfRange { name, requirement } => {
                write!(f, "parameter `{name}` out of range: requires {requirement}")
            }
            CdrError::QuadratureNoConvergence { a, b, error_estimate, tol } => write!(
                f,
                "quadrature over [{a}, {b}] did not reach tolerance {tol} (error estimate {error_estimate})"
            ),
            CdrError::NonFiniteSample { z } => {
                write!(f, "integrand returned a non-finite value at z = {z}")
            }
            CdrError::DivergentIntegral { what } => write!(f, "divergent integral: {what}"),
            CdrError::Certification { name, max_residual, tol } => write!(
                f,
                "certification failed for `{name}`: max residual {max_residual} exceeds {tol}"
            ),
            CdrError::ContinuityViolation { reason } => {
                write!(f, "continuity violation: {reason}")
            }
            CdrError::SigmaVanishes { z } => {
                write!(f, "sigma vanishes at sampled interior point z = {z}")
            }
            CdrError::NotConserving { alpha, mu } => write!(
                f,
                "operation requires mu = -alpha, got alpha = {alpha}, mu = {mu}"
            ),
            CdrError::MissingProfile { name } => write!(f, "profile `{name}` is required"),
            CdrError::Diverged { step } => {
                write!(f, "integration diverged (non-finite value) at step {step}")
            }
            CdrError::GridTooCoarse { n, min } => {
                write!(f, "grid too coarse: {n} points, need at least {min}")
            }
            CdrError::OutOfWindow { z, lo, hi } => {
                write!(f, "z = {z} outside tabulated window [{lo}, {hi}]")
            }
        }
    }
}

impl std::error::Error for CdrError {}

impl From<ParseError> for CdrError {
    fn from(e: ParseError) -> Self {
        CdrError::Parse(e)
    }
}

impl From<EvalError> for CdrError {
    fn from(e: EvalError) -> Self {
        CdrError::Eval(e)
    }
}
