//! Synthesis engines: parameter synthesis and robust controller synthesis by
//! sequential convex programming, and scenario-based verification.

mod param_scp;
mod parametric;
mod robust_fsc;
mod scenario;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::models::{Fsc, Model, Policy};

pub use param_scp::scp_param_synthesis;
pub use parametric::{Parameter, ParametricModel, Poly};
pub use robust_fsc::{robust_fsc_synthesis, robust_fsc_synthesis_from};
pub use scenario::{
    bisect_nu, confidence_bound, confidence_bound_raw, scenario_verify, Sampler, ScenarioConfig,
    ScenarioReport, ScenarioSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthStatus {
    /// The certified value satisfies the specification.
    Satisfied,
    /// The trust region shrank below ω without reaching the threshold.
    NoImprovement,
    /// `max_iters` iterations without reaching the threshold.
    IterationLimit,
}

/// One SCP iteration: the checked value of the candidate and the trust
/// radius after the accept/reject decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    pub iteration: usize,
    pub value: f64,
    pub best: f64,
    pub delta: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthReport {
    pub status: SynthStatus,
    /// Parameter values (parameter synthesis only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instantiation: Option<BTreeMap<String, f64>>,
    /// Controller (robust FSC synthesis only).
    #[serde(skip)]
    pub fsc: Option<Fsc>,
    /// Value certified by the model checker on the returned object.
    pub certified_value: f64,
    pub iterations: usize,
    pub log: Vec<StepLog>,
    pub final_delta: f64,
    pub wall_time_ms: f64,
}

impl SynthReport {
    pub fn accepted_values(&self) -> Vec<f64> {
        self.log.iter().filter(|l| l.accepted).map(|l| l.value).collect()
    }

    /// JSON report; the controller is written in the policy schema of `model`.
    pub fn to_json(&self, model: Option<&Model>) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serialization cannot fail");
        if let (Some(f), Some(m)) = (&self.fsc, model) {
            v["policy"] = Policy::Fsc(f.clone()).to_json(m);
        }
        v
    }

    /// `(iteration, value, δ, accepted)` trace as CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,value,best,delta,accepted\n");
        for l in &self.log {
            out.push_str(&format!("{},{},{},{},{}\n", l.iteration, l.value, l.best, l.delta, l.accepted));
        }
        out
    }
}
