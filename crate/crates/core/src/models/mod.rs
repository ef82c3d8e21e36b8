//! Markov models, policies, specifications, automata and beliefs.

mod belief;
mod dfa;
mod json;
mod model;
mod policy;
mod spec;
mod transform;

pub use belief::{BeliefLabeling, ConstantSensor, DistanceSensor, ObservationModel};
pub use dfa::{Dfa, DfaEdge};
pub use json::{model_to_json, parse_model};
pub(crate) use json::{parametric_to_json, parse_raw, ParamJson};
pub use model::{Choice, Model, ModelBuilder, ModelKind, ProbEntry, StateId};
pub use policy::{ActionDist, Fsc, MemorylessPolicy, Policy, PolicyScope};
pub(crate) use policy::obs_label;
pub use spec::{Direction, Objective, Optimize, Spec};
pub use transform::{
    expand_observations, fold_fsc, fsc_product, induced_mc, to_simple, Origin, SimpleModel, SimpleTree,
    TreeChild,
};
