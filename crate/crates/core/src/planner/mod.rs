//! Task-oriented planning with uncertain semantic labels: Bayesian belief
//! maintenance, divergence-triggered replanning on the product with a task
//! automaton, sampled risk assessment and active perception.

mod active;
mod entropy;
mod episode;
mod grid;
mod perception;
mod product;
mod risk;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

pub use active::active_perception_strategy;
pub use entropy::{entropy_over_critical, EntropyReport};
pub use episode::{run_ensemble, run_episode, EnsembleSummary, EpisodeTrace, Outcome, PlanningProblem, StepRecord};
pub use grid::{reach_avoid_grid, GridInstance, MOVE_PROB};
pub use perception::{bayes_update, jsd, map_labeling, sense, Reading};
pub use product::{build_product, synthesize_task_policy, synthesize_task_policy_at, Product, ProductState, TaskPolicy};
pub use risk::{hoeffding_bound, policy_value, statistical_risk, RiskReport};

/// Which parts of the perception–planning loop run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plan once on the prior; no sensing.
    NoPerception,
    /// Sense, update and replan at every step.
    AlwaysReplan,
    /// Sense and update; replan when the divergence exceeds γ_d.
    Divergence,
    /// As `Divergence`, plus risk assessment and active perception.
    Active,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::NoPerception,
        Variant::AlwaysReplan,
        Variant::Divergence,
        Variant::Active,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::NoPerception => "no-perception",
            Variant::AlwaysReplan => "always-replan",
            Variant::Divergence => "divergence",
            Variant::Active => "active",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Divergence threshold γ_d in bits.
    pub gamma_d: f64,
    /// Risk threshold γ_r.
    pub gamma_r: f64,
    /// Labelings sampled per risk assessment.
    pub risk_samples: usize,
    /// Depth bound C_a of the perception tree.
    pub depth: usize,
    /// Weight β of safety against information.
    pub beta: f64,
    pub seed: u64,
    pub max_steps: usize,
    pub variant: Variant,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            gamma_d: 1.0,
            gamma_r: 0.2,
            risk_samples: 30,
            depth: 2,
            beta: 0.5,
            seed: 0,
            max_steps: 200,
            variant: Variant::Active,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_d >= 0.0) || !(self.gamma_r >= 0.0) {
            return Err(arg("thresholds must be non-negative"));
        }
        if self.depth < 1 {
            return Err(arg("perception depth must be at least 1"));
        }
        if self.risk_samples < 1 {
            return Err(arg("risk assessment needs at least one sample"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(arg(format!("β must lie in [0, 1], got {}", self.beta)));
        }
        Ok(())
    }
}
