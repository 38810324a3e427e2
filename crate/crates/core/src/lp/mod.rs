//! Exact linear programming and the convex-geometry primitives built on it.

pub mod geometry;
pub mod simplex;

pub use geometry::{
    max_support_separator, zero_convex_combination, zero_in_relative_interior, RiCertificate, Separator,
};
pub use simplex::{lp_solve, verify_outcome, Constraint, LinearProgram, LpOutcome, LpStatus, Relation, Sense};
