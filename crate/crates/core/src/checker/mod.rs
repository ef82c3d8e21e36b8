//! Model checking for reachability and expected-cost objectives.

mod engine;
mod graph;
pub mod linear;
mod lp;
mod robust;

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Model, MemorylessPolicy, ProbEntry, Objective, Optimize, Policy, Spec, StateId};

use engine::{Goal, Problem};

pub use engine::greedy_distribution;
pub use graph::{
    can_reach, prob0_all, prob0_and_reach_sets, prob0_exists, prob1_all, prob1_exists, reachable,
    ReachSets,
};
pub use lp::{dual_lp_synthesize, expected_cost_primal_lp, reach_primal_lp, DualLpResult};
pub use robust::{
    adversary, evaluate_fsc, fsc_product_policy, lift_spec, robust_value, worst_case_expectation,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Stop value iteration once no value moves by more than this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vi,
    LpPrimal,
    LpDual,
    RobustVi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub values: Vec<f64>,
    pub initial_value: f64,
    /// Verdict against a specification threshold, when one was given.
    pub satisfied: Option<bool>,
    pub method: Method,
    pub iterations: usize,
    pub wall_time_ms: f64,
    /// Whether the values come from an exact linear solve of the optimal
    /// policy rather than from the value-iteration iterate alone.
    pub exact: bool,
    /// Optimal choice index per state, where a scheduler was extracted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<Vec<usize>>,
}

impl CheckResult {
    pub fn with_spec(mut self, spec: &Spec) -> Self {
        self.satisfied = Some(spec.satisfied_by(self.initial_value));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

pub(crate) fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn require_point(model: &Model) -> Result<()> {
    if model.is_uncertain() {
        return Err(Error::Unsupported(
            "model has interval entries; use robust_value".into(),
        ));
    }
    Ok(())
}

fn check_set(model: &Model, set: &BTreeSet<StateId>) -> Result<Vec<bool>> {
    if set.is_empty() {
        return Err(crate::error::arg("target set is empty"));
    }
    if let Some(&s) = set.iter().find(|&&s| s >= model.num_states()) {
        return Err(crate::error::arg(format!("state {s} out of range")));
    }
    Ok(graph::to_mask(model.num_states(), set))
}

fn all_choices(model: &Model) -> Vec<Vec<usize>> {
    model
        .choices
        .iter()
        .map(|cs| (0..cs.len()).collect())
        .collect()
}

/// Per-state `(choice index, weight)` lists of a memoryless policy. States the
/// policy leaves undefined must have a single action or be unreachable.
pub(crate) fn policy_weights(model: &Model, p: &MemorylessPolicy) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = model.num_states();
    let mut out = Vec::with_capacity(n);
    let mut undefined = Vec::new();
    for s in 0..n {
        match p.dist_at(model, s) {
            Some(d) => {
                let mut w = Vec::new();
                for &(a, pr) in d.iter().filter(|(_, pr)| *pr > 0.0) {
                    let c = model.choice_index(s, a).ok_or_else(|| {
                        Error::Invalid(format!(
                            "policy picks action `{}` not enabled at state {s}",
                            model.action_names[a]
                        ))
                    })?;
                    w.push((c, pr));
                }
                out.push(w);
            }
            None => {
                if model.choices[s].len() > 1 {
                    undefined.push(s);
                }
                out.push(vec![(0, 1.0)]);
            }
        }
    }
    if !undefined.is_empty() {
        // Only complain about states the policy can actually visit.
        let mut seen = vec![false; n];
        let mut stack: Vec<StateId> = model.initial.iter().map(|&(s, _)| s).collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            if undefined.contains(&s) {
                return Err(Error::UndefinedPolicy(s));
            }
            for &(c, _) in &out[s] {
                for t in model.choices[s][c].successors() {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// States that cannot reach `target` using only `allowed` choices, or (for a
/// minimising agent) from which some allowed behaviour avoids it surely.
fn pinned_zero(model: &Model, target: &[bool], allowed: &[Vec<usize>], agent_avoids: bool) -> Vec<bool> {
    let n = model.num_states();
    if agent_avoids {
        let mut avoid: Vec<bool> = (0..n).map(|s| !target[s]).collect();
        loop {
            let mut changed = false;
            for s in 0..n {
                if avoid[s]
                    && !allowed[s]
                        .iter()
                        .any(|&c| model.choices[s][c].successors().all(|t| avoid[t]))
                {
                    avoid[s] = false;
                    changed = true;
                }
            }
            if !changed {
                return avoid;
            }
        }
    }
    let mut reach = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !reach[s]
                && allowed[s]
                    .iter()
                    .any(|&c| model.choices[s][c].successors().any(|t| reach[t]))
            {
                reach[s] = true;
                changed = true;
            }
        }
        if !changed {
            return reach.into_iter().map(|r| !r).collect();
        }
    }
}

pub(crate) struct Setup {
    pub target: Vec<bool>,
    pub pinned: Vec<bool>,
    pub allowed: Vec<Vec<usize>>,
}

/// Qualitative preprocessing shared by value iteration and the LPs.
pub(crate) fn setup(
    model: &Model,
    objective: &Objective,
    agent: Optimize,
    policy: Option<&[Vec<(usize, f64)>]>,
) -> Result<Setup> {
    let target = check_set(model, objective.states())?;
    let n = model.num_states();
    let mut allowed = match policy {
        Some(p) => p.iter().map(|w| w.iter().map(|x| x.0).collect()).collect(),
        None => all_choices(model),
    };
    match objective {
        Objective::Reach(_) => {
            let pinned = pinned_zero(model, &target, &allowed, policy.is_none() && agent == Optimize::Min);
            Ok(Setup {
                target,
                pinned,
                allowed,
            })
        }
        Objective::ExpectedCost(_) => {
            let valid = match (policy.is_some(), agent) {
                // A fixed randomized policy induces a chain over the union
                // of its supported choices.
                (true, _) => prob1_all(&merge(model, &allowed), &target),
                (false, Optimize::Min) => prob1_exists(model, &target),
                // Every behaviour must reach the goal surely.
                (false, Optimize::Max) => prob1_all(model, &target),
            };
            let bad: Vec<StateId> = model
                .initial
                .iter()
                .map(|&(s, _)| s)
                .filter(|&s| !valid[s])
                .collect();
            if !bad.is_empty() {
                return Err(Error::DeadEnd(bad));
            }
            if policy.is_none() && agent == Optimize::Min {
                for s in 0..n {
                    allowed[s].retain(|&c| model.choices[s][c].successors().all(|t| valid[t]));
                }
            }
            Ok(Setup {
                pinned: valid.iter().map(|v| !v).collect(),
                target,
                allowed,
            })
        }
    }
}

/// Copy of `model` with the allowed choices of each state merged into one
/// choice over their joint support (graph queries only).
fn merge(model: &Model, allowed: &[Vec<usize>]) -> Model {
    let mut m = model.clone();
    for (s, cs) in m.choices.iter_mut().enumerate() {
        let Some(&first) = allowed[s].first() else {
            cs.clear();
            continue;
        };
        let support: BTreeSet<StateId> = allowed[s].iter().flat_map(|&c| cs[c].successors()).collect();
        let p = 1.0 / support.len().max(1) as f64;
        let mut c = cs[first].clone();
        c.transitions = support.into_iter().map(|t| (t, ProbEntry::Point(p))).collect();
        *cs = vec![c];
    }
    m
}

/// Optimal reachability probabilities of a point-probability model.
pub fn reach_probability(
    model: &Model,
    target: &BTreeSet<StateId>,
    optimize: Optimize,
    opts: &CheckOptions,
) -> Result<CheckResult> {
    require_point(model)?;
    let t0 = Instant::now();
    let obj = Objective::Reach(target.clone());
    let su = setup(model, &obj, optimize, None)?;
    let p = Problem {
        model,
        goal: Goal::Reach,
        target: su.target,
        pinned: su.pinned,
        agent: optimize,
        nature: Optimize::Min,
        allowed: su.allowed,
        policy: None,
    };
    let sol = p.solve(opts)?;
    Ok(CheckResult {
        initial_value: model.initial_value(&sol.values),
        values: sol.values,
        satisfied: None,
        method: Method::Vi,
        iterations: sol.iterations,
        wall_time_ms: elapsed_ms(t0),
        exact: sol.exact,
        scheduler: Some(sol.scheduler),
    })
}

/// Maximal reachability probabilities by value iteration.
pub fn max_reach_mdp(model: &Model, target: &BTreeSet<StateId>) -> Result<CheckResult> {
    reach_probability(model, target, Optimize::Max, &CheckOptions::default())
}

/// Optimal expected accumulated cost before reaching `goal`.
pub fn expected_cost_mdp(model: &Model, goal: &BTreeSet<StateId>, optimize: Optimize) -> Result<CheckResult> {
    expected_cost_with(model, goal, optimize, &CheckOptions::default())
}

pub fn expected_cost_with(
    model: &Model,
    goal: &BTreeSet<StateId>,
    optimize: Optimize,
    opts: &CheckOptions,
) -> Result<CheckResult> {
    require_point(model)?;
    let t0 = Instant::now();
    let obj = Objective::ExpectedCost(goal.clone());
    let su = setup(model, &obj, optimize, None)?;
    let p = Problem {
        model,
        goal: Goal::Cost,
        target: su.target,
        pinned: su.pinned,
        agent: optimize,
        nature: Optimize::Max,
        allowed: su.allowed,
        policy: None,
    };
    let sol = p.solve(opts)?;
    Ok(CheckResult {
        initial_value: model.initial_value(&sol.values),
        values: sol.values,
        satisfied: None,
        method: Method::Vi,
        iterations: sol.iterations,
        wall_time_ms: elapsed_ms(t0),
        exact: sol.exact,
        scheduler: Some(sol.scheduler),
    })
}

/// Check a specification, dispatching to robust value iteration when the
/// model has interval entries.
pub fn check(model: &Model, spec: &Spec, opts: &CheckOptions) -> Result<CheckResult> {
    spec.validate(model)?;
    let r = if model.is_uncertain() {
        robust_value(model, spec, None, opts)?
    } else {
        match &spec.objective {
            Objective::Reach(t) => reach_probability(model, t, spec.optimize, opts)?,
            Objective::ExpectedCost(g) => expected_cost_with(model, g, spec.optimize, opts)?,
        }
    };
    Ok(r.with_spec(spec))
}

/// Value of a policy on a (point or interval) model.
pub fn check_policy(model: &Model, spec: &Spec, policy: &Policy, opts: &CheckOptions) -> Result<CheckResult> {
    Ok(robust_value(model, spec, Some(policy), opts)?.with_spec(spec))
}
