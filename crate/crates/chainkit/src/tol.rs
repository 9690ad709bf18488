//! Centralized numeric tolerances.
//!
//! Every threshold used by validation and certification lives here so the
//! acceptance suite and the library agree on a single set of constants.

/// Absolute tolerance on `sum(w) - 1` accepted at measure construction.
/// Inputs inside this band are renormalized exactly.
pub const MEASURE_SUM_ABS: f64 = 1e-12;

/// Relative tolerance for the inverse round trip `phi(phi_inv(y)) = y`,
/// checked at construction on a sampling grid.
pub const INVERSE_ROUNDTRIP_REL: f64 = 1e-10;

/// Relative tolerance of the bisection fallback used to invert custom
/// functions without a closed-form inverse.
pub const BISECTION_REL: f64 = 1e-12;

/// Absolute violation threshold for grid-based growth/psi condition checks.
pub const GRID_CONDITION_ABS: f64 = 1e-9;

/// Baseline certificate slack tolerance. A certificate passes when
/// `rhs - lhs >= -CERT_SLACK_ABS * max(1, |rhs|)`; the relative switch keeps
/// the rule meaningful when both sides grow with the distance scale.
pub const CERT_SLACK_ABS: f64 = 1e-9;

/// Absolute tolerance for the 1-Lipschitz property of the radii.
pub const LIPSCHITZ_ABS: f64 = 1e-12;

/// Absolute tolerance on row sums of averaging operators.
pub const STOCHASTIC_ROW_ABS: f64 = 1e-12;

/// Absolute tolerance on the total mass of the chaining measure.
pub const NU_TOTAL_MASS_ABS: f64 = 1e-9;

/// Absolute tolerance for the membership criterion equality at the optimal
/// power-function parameters.
pub const MEMBERSHIP_EQUALITY_ABS: f64 = 1e-12;

/// Relative slack allowed when grid-searching for a chaining coefficient
/// below the closed-form optimum.
pub const MINIMALITY_REL: f64 = 1e-6;

/// Relative pivot threshold of the rank-revealing Cholesky factorization.
pub const PSD_PIVOT_REL: f64 = 1e-10;

/// Rounding guard for triangle-inequality validation. Distance matrices
/// assembled in floating point (collinear path/grid points in particular)
/// can land one ulp past exact equality; anything beyond this guard is a
/// genuine violation.
pub const TRIANGLE_GUARD_REL: f64 = 32.0 * f64::EPSILON;

/// Width of the statistical pass band for Monte Carlo certificates,
/// in standard errors. Three sigma keeps false failures well under 1%
/// per certificate at fleet scale.
pub const MC_SIGMA: f64 = 3.0;

/// Slack multiplier accepted on the analytic increment condition when a
/// model is scaled exactly to its admissible limit.
pub const INCREMENT_CONDITION_ABS: f64 = 1e-9;

/// Returns the slack floor for a certificate with the given right-hand side.
pub fn cert_slack_floor(rhs: f64) -> f64 {
    -CERT_SLACK_ABS * rhs.abs().max(1.0)
}
