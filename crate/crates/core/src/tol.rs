//! Numerical tolerances shared by every module.

/// Triangle-inequality and symmetry checks on distance matrices.
pub const METRIC: f64 = 1e-9;

/// Row feasibility of LP solutions and of configuration assignments.
pub const FEAS: f64 = 1e-7;

/// Minimum violation a Farkas certificate must show at the current point.
pub const CERT: f64 = 1e-9;

/// Client mass below which a client is dropped from a configuration system.
pub const ZERO_MASS: f64 = 1e-12;

/// Relative slack used when numerically re-checking the analysis inequalities.
pub const BOUND_REL: f64 = 1e-7;

/// Amount of demand treated as zero when opening facilities.
pub const DEMAND: f64 = 1e-9;

/// `lhs <= rhs` up to [`BOUND_REL`] relative to the magnitude of the sides.
pub fn leq_rel(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + BOUND_REL * lhs.abs().max(rhs.abs()).max(1.0)
}
