//! Verification and robust policy synthesis for Markov models under partial
//! observability and interval uncertainty.
//!
//! The crate is organised in layers:
//!
//! * [`models`] — explicit-state models, policies, automata and the structural
//!   transformations between them;
//! * [`optim`] — a simplex LP solver and the trust-region machinery used by
//!   every sequential convex programming loop;
//! * [`checker`] — value iteration, primal/dual LPs, robust (interval) value
//!   iteration and controller evaluation;
//! * [`synth`] — parameter synthesis, robust FSC synthesis and scenario-based
//!   verification;
//! * [`planner`] — belief-driven task planning with active perception.

pub mod checker;
pub mod error;
pub mod models;
pub mod optim;
pub mod planner;
pub mod synth;

pub use error::{Error, Result};

/// Absolute tolerance used for probability comparisons.
pub const PROB_TOL: f64 = 1e-9;
