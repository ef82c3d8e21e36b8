//! Graph-based preprocessing: qualitative reachability sets.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{arg, Result};
use crate::models::{Model, StateId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachSets {
    /// States that reach the target with probability zero under every
    /// resolution of nondeterminism and uncertainty.
    pub no_reach: BTreeSet<StateId>,
    pub target: BTreeSet<StateId>,
}

fn mask(n: usize, set: &BTreeSet<StateId>) -> Vec<bool> {
    let mut m = vec![false; n];
    for &s in set {
        m[s] = true;
    }
    m
}

fn predecessors(model: &Model) -> Vec<Vec<StateId>> {
    let mut pre = vec![Vec::new(); model.num_states()];
    for (s, cs) in model.choices.iter().enumerate() {
        for c in cs {
            for t in c.successors() {
                pre[t].push(s);
            }
        }
    }
    for p in &mut pre {
        p.sort_unstable();
        p.dedup();
    }
    pre
}

/// States that can reach `target` along some path.
pub fn can_reach(model: &Model, target: &[bool]) -> Vec<bool> {
    let pre = predecessors(model);
    let mut seen = target.to_vec();
    let mut stack: Vec<StateId> = (0..seen.len()).filter(|&s| seen[s]).collect();
    while let Some(t) = stack.pop() {
        for &s in &pre[t] {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

/// `no_reach` and `target` for reachability of `target`. The result depends on
/// the graph only, so it is shared by all graph-preserving instantiations.
pub fn prob0_and_reach_sets(model: &Model, target: &BTreeSet<StateId>) -> Result<ReachSets> {
    if target.is_empty() {
        return Err(arg("target set is empty"));
    }
    if let Some(&s) = target.iter().find(|&&s| s >= model.num_states()) {
        return Err(arg(format!("target state {s} out of range")));
    }
    let reach = can_reach(model, &mask(model.num_states(), target));
    Ok(ReachSets {
        no_reach: (0..model.num_states()).filter(|&s| !reach[s]).collect(),
        target: target.clone(),
    })
}

/// Mask version of the all-resolutions prob-0 set.
pub fn prob0_all(model: &Model, target: &[bool]) -> Vec<bool> {
    can_reach(model, target).into_iter().map(|r| !r).collect()
}

/// States from which some policy avoids `target` surely.
pub fn prob0_exists(model: &Model, target: &[bool]) -> Vec<bool> {
    let n = model.num_states();
    let mut avoid: Vec<bool> = (0..n).map(|s| !target[s]).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if avoid[s]
                && !model.choices[s]
                    .iter()
                    .any(|c| c.successors().all(|t| avoid[t]))
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

/// States from which some policy reaches `target` with probability one.
pub fn prob1_exists(model: &Model, target: &[bool]) -> Vec<bool> {
    let n = model.num_states();
    let mut u = vec![true; n];
    loop {
        // Least fixed point: states that can reach target while staying in u
        // using only actions whose successors all lie in u.
        let mut r = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if !r[s]
                    && u[s]
                    && model.choices[s].iter().any(|c| {
                        c.successors().all(|t| u[t]) && c.successors().any(|t| r[t])
                    })
                {
                    r[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if r == u {
            return u;
        }
        u = r;
    }
}

/// States from which every policy reaches `target` with probability one.
pub fn prob1_all(model: &Model, target: &[bool]) -> Vec<bool> {
    let n = model.num_states();
    let bad = prob0_exists(model, target);
    // States that can reach `bad` while avoiding the target.
    let mut reach_bad = bad.clone();
    let pre = predecessors(model);
    let mut stack: Vec<StateId> = (0..n).filter(|&s| bad[s]).collect();
    while let Some(t) = stack.pop() {
        for &s in &pre[t] {
            if !reach_bad[s] && !target[s] {
                reach_bad[s] = true;
                stack.push(s);
            }
        }
    }
    reach_bad.into_iter().map(|b| !b).collect()
}

/// States reachable from the initial distribution.
pub fn reachable(model: &Model) -> Vec<bool> {
    let mut seen = vec![false; model.num_states()];
    let mut stack: Vec<StateId> = model.initial.iter().map(|&(s, _)| s).collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(s) = stack.pop() {
        for c in &model.choices[s] {
            for t in c.successors() {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    seen
}

pub(crate) fn to_mask(n: usize, set: &BTreeSet<StateId>) -> Vec<bool> {
    mask(n, set)
}
