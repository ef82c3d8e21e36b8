//! Robust (interval) values and controller evaluation.

use std::time::Instant;

use super::engine::{greedy_distribution, Goal, Problem};
use super::{elapsed_ms, policy_weights, setup, CheckOptions, CheckResult, Method};
use crate::error::Result;
use crate::models::{
    fsc_product, obs_label, Direction, Fsc, MemorylessPolicy, Model, Objective, Optimize, Policy,
    PolicyScope, ProbEntry, Spec, StateId,
};

/// Optimum of `Σ P(s')·values(s')` over all distributions within the
/// interval bounds of `entries`.
pub fn worst_case_expectation(entries: &[(StateId, ProbEntry)], values: &[f64], sense: Optimize) -> Result<f64> {
    let d = greedy_distribution(entries, values, sense)?;
    Ok(entries.iter().zip(&d).map(|(&(t, _), p)| p * values[t]).sum())
}

/// How nature resolves intervals against a specification: it minimises what
/// a `≥` bound asks for and maximises what a `≤` bound limits.
pub fn adversary(spec: &Spec) -> Optimize {
    match spec.direction {
        Direction::AtLeast => Optimize::Min,
        Direction::AtMost => Optimize::Max,
    }
}

/// Worst-case value over all instantiations of the intervals.
///
/// Without a policy the agent resolves nondeterminism per `spec.optimize`;
/// with a policy its choices are fixed and only the uncertainty remains.
/// Nature picks a distribution per state–action pair at every visit.
pub fn robust_value(model: &Model, spec: &Spec, policy: Option<&Policy>, opts: &CheckOptions) -> Result<CheckResult> {
    spec.validate(model)?;
    let weights = match policy {
        Some(Policy::Fsc(f)) => return evaluate_fsc(model, f, spec, opts),
        Some(Policy::Memoryless(p)) => Some(policy_weights(model, p)?),
        None => None,
    };
    let t0 = Instant::now();
    let su = setup(model, &spec.objective, spec.optimize, weights.as_deref())?;
    let p = Problem {
        model,
        goal: if spec.objective.is_reach() { Goal::Reach } else { Goal::Cost },
        target: su.target,
        pinned: su.pinned,
        agent: spec.optimize,
        nature: adversary(spec),
        allowed: su.allowed,
        policy: weights,
    };
    let sol = p.solve(opts)?;
    Ok(CheckResult {
        initial_value: model.initial_value(&sol.values),
        values: sol.values,
        satisfied: Some(false),
        method: Method::RobustVi,
        iterations: sol.iterations,
        wall_time_ms: elapsed_ms(t0),
        exact: sol.exact,
        scheduler: Some(sol.scheduler),
    }
    .with_spec(spec))
}

/// Specification over `fsc_product(model, k)` states.
pub fn lift_spec(spec: &Spec, k: usize) -> Spec {
    let lift = |set: &std::collections::BTreeSet<StateId>| -> std::collections::BTreeSet<StateId> {
        set.iter().flat_map(|&s| (0..k).map(move |n| s * k + n)).collect()
    };
    let objective = match &spec.objective {
        Objective::Reach(t) => Objective::Reach(lift(t)),
        Objective::ExpectedCost(g) => Objective::ExpectedCost(lift(g)),
    };
    Spec {
        objective,
        ..spec.clone()
    }
}

/// Memoryless policy on `fsc_product(model, fsc.nodes)` playing `fsc`:
/// action `a|n'` gets `action_map(n,z)(a) · memory_update(n,z,a)(n')`.
pub fn fsc_product_policy(model: &Model, fsc: &Fsc, product: &Model) -> Result<MemorylessPolicy> {
    let k = fsc.nodes;
    let mut table = vec![None; product.num_states()];
    for s in 0..model.num_states() {
        let z = obs_label(model, s)?;
        for n in 0..k {
            let mut dist = Vec::new();
            for (a, pa) in fsc.action_dist(model, n, s)? {
                let name = &model.action_names[a];
                for (m, pm) in fsc.update_dist(n, &z, name) {
                    dist.push((a * k + m, pa * pm));
                }
            }
            table[s * k + n] = Some(dist);
        }
    }
    Ok(MemorylessPolicy {
        scope: PolicyScope::State,
        table,
    })
}

/// Evaluate a finite-state controller on a (u)POMDP through the product
/// with its memory. Values are indexed by product state `s·k + n`.
pub fn evaluate_fsc(model: &Model, fsc: &Fsc, spec: &Spec, opts: &CheckOptions) -> Result<CheckResult> {
    spec.validate(model)?;
    fsc.validate(model)?;
    let k = fsc.nodes;
    let mut product = fsc_product(model, k)?;
    product.initial = model
        .initial
        .iter()
        .map(|&(s, p)| (s * k + fsc.initial_node, p))
        .collect();
    let policy = fsc_product_policy(model, fsc, &product)?;
    let lifted = lift_spec(spec, k);
    let mut r = robust_value(&product, &lifted, Some(&Policy::Memoryless(policy)), opts)?;
    if !model.is_uncertain() {
        r.method = Method::Vi;
    }
    Ok(r.with_spec(spec))
}
