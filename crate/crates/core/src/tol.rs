//! Numerical tolerances shared across the crate.

/// Probability vectors (chance nodes, emission columns) must sum to one within this.
pub const PROB_SUM: f64 = 1e-9;

/// Utility comparisons (backward induction ties, security checks).
pub const UTILITY: f64 = 1e-9;

/// Residual allowed when solving `Lambda * Phi = D`.
pub const RESIDUAL: f64 = 1e-8;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_RELATIVE: f64 = 1e-10;

/// Column-sum tolerance for self-containment and zero inflation.
pub const COLUMN_SUM: f64 = 1e-9;

/// Tolerance for the zero-inflation precondition on `U - E`.
pub const ZERO_INFLATION_PRECONDITION: f64 = 1e-8;
