//! Error type shared by the library.

use thiserror::Error;

/// Errors produced by state construction, transforms and solvers.
///
/// Non-convergence of the amplifier map itself is *not* an error: it is
/// reported through [`crate::nla::NlaResult::converged`] so callers can
/// inspect the diagnostics. The [`NlaError::NonConvergent`] variant is used
/// by closed-form entry points that have no state to return.
#[derive(Debug, Error)]
pub enum NlaError {
    /// A parameter is outside its mathematical domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix or vector dimensions do not match.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A covariance matrix failed a physicality requirement.
    #[error("non-physical covariance matrix: smallest symplectic eigenvalue {lambda_min}")]
    NonPhysical { lambda_min: f64 },

    /// A closed form was evaluated past the amplifier's convergence bound.
    #[error("non-convergent gain regime: denominator {denominator} <= 0")]
    NonConvergent { denominator: f64 },

    /// A two-mode covariance matrix is not in standard form
    /// (diagonal blocks proportional to I, correlation block to sigma_z).
    #[error("covariance matrix not in two-mode standard form: {0}")]
    NotStandardForm(String),

    /// The equivalent-circuit decomposition is not unique at V = V_E.
    #[error("degenerate input: |V - V_E| = {0} is below the resolvable threshold")]
    DegenerateInput(f64),

    /// A closed-form solver produced no real solution.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// A Fock-space operation would overflow or underflow working precision.
    #[error("overflow guard: {0}")]
    Overflow(String),
}

/// Shorthand result alias used across the crate.
pub type Result<T> = std::result::Result<T, NlaError>;
