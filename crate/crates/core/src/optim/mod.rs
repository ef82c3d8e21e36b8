//! Linear programming and the trust-region machinery of sequential convex
//! programming.

mod lp;
mod scp;

pub use lp::{
    solve_lp, Constraint, LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense, Variable,
};
pub use scp::{
    linearize_bilinear, scp_step, trust_region_constraints, Affine2, ScpConfig, StepOutcome,
    TrustBounds,
};
