//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the physics and numerics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its domain; `field` names the offending input.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// Two objects that must share a Fock space do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The dense Liouvillian would exceed the configured memory budget.
    #[error("Liouvillian of dimension {dim} needs {bytes} bytes, above the budget of {budget} bytes")]
    DimensionTooLarge { dim: usize, bytes: usize, budget: usize },

    /// The generator has a kernel of dimension other than one.
    #[error("steady state is not unique: kernel dimension {nullity}")]
    NonUniqueSteadyState { nullity: usize },

    /// The bordered steady-state system could not be factorised.
    #[error("steady-state linear system is singular")]
    SingularSystem,

    /// The solution does not satisfy the generator to the required accuracy.
    #[error("steady-state residual {residual:e} exceeds bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    /// The Matsubara representation of the Lamb shift is not valid.
    #[error("Lamb-shift guard violated: beta*delta = {beta_delta} must stay below pi")]
    LambShiftGuard { beta_delta: f64 },

    /// A quantity that needs a finite band was requested for a wide-band lead.
    #[error("{what} is undefined for a wide-band lead")]
    WideBand { what: &'static str },

    /// The adaptive integrator could not keep the error below tolerance.
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    /// A finite difference needs more grid points than were supplied.
    #[error("grid too coarse: {reason}")]
    CoarseGrid { reason: String },

    /// The secular bound is undefined because both energy scales vanish.
    #[error("secular bound undefined: max(|mu_tilde|, omega) is zero")]
    UndefinedSecularBound,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { field, reason: reason.into() }
}
