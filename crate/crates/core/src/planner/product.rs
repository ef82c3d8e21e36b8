use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::checker::max_reach_mdp;
use crate::error::{arg, Result};
use crate::models::{Choice, Dfa, MemorylessPolicy, Model, ModelKind, Policy, ProbEntry, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ProductState {
    pub mdp: StateId,
    pub dfa: usize,
    pub accepting: bool,
}

/// Reachable part of `M × D` under a labeling. State `(s, q)` means the
/// automaton is in `q` after reading the label of `s`; accepting states are
/// absorbing and labelled `"accept"`, states whose automaton state can no
/// longer accept are absorbing as well.
#[derive(Debug, Clone)]
pub struct Product {
    pub model: Model,
    pub states: Vec<ProductState>,
    index: BTreeMap<(StateId, usize), usize>,
}

impl Product {
    pub fn index_of(&self, s: StateId, q: usize) -> Option<usize> {
        self.index.get(&(s, q)).copied()
    }

    pub fn accepting(&self) -> BTreeSet<usize> {
        (0..self.states.len()).filter(|&i| self.states[i].accepting).collect()
    }
}

/// Build the product reachable from `roots` (`((s, q), weight)`, `q` already
/// updated with the label of `s`).
pub fn build_product(
    mdp: &Model,
    dfa: &Dfa,
    labels: &[BTreeSet<String>],
    roots: &[((StateId, usize), f64)],
) -> Result<Product> {
    if labels.len() != mdp.num_states() {
        return Err(arg(format!("{} labels for {} states", labels.len(), mdp.num_states())));
    }
    let mut index: BTreeMap<(StateId, usize), usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: (StateId, usize), states: &mut Vec<ProductState>, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            states.push(ProductState {
                mdp: key.0,
                dfa: key.1,
                accepting: dfa.is_accepting(key.1),
            });
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    let dead = dead_states(dfa);
    let mut initial = Vec::new();
    for &(key, w) in roots {
        if key.0 >= mdp.num_states() || key.1 >= dfa.num_states {
            return Err(arg(format!("product root {key:?} out of range")));
        }
        initial.push((intern(key, &mut states, &mut queue), w));
    }
    let mut choices: Vec<Vec<Choice>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let ProductState { mdp: s, dfa: q, accepting } = states[i];
        let mut row = Vec::new();
        if accepting || dead[q] {
            row.push(Choice {
                action: mdp.choices[s][0].action,
                transitions: vec![(i, ProbEntry::Point(1.0))],
                reward: 0.0,
            });
        } else {
            for c in &mdp.choices[s] {
                let mut merged: BTreeMap<usize, ProbEntry> = BTreeMap::new();
                for &(t, e) in &c.transitions {
                    let j = intern((t, dfa.step_labels(q, &labels[t])), &mut states, &mut queue);
                    merged
                        .entry(j)
                        .and_modify(|x| *x = add_entries(*x, e))
                        .or_insert(e);
                }
                row.push(Choice {
                    action: c.action,
                    transitions: merged.into_iter().collect(),
                    reward: c.reward,
                });
            }
        }
        if choices.len() <= i {
            choices.resize(i + 1, Vec::new());
        }
        choices[i] = row;
    }
    let model = Model {
        kind: ModelKind::Mdp,
        initial,
        action_names: mdp.action_names.clone(),
        labels: states
            .iter()
            .map(|p| if p.accepting { ["accept".to_string()].into() } else { BTreeSet::new() })
            .collect(),
        choices,
        obs_names: Vec::new(),
        observations: None,
    };
    model.validate()?;
    Ok(Product { model, states, index })
}

/// Automaton states from which no accepting state is reachable.
pub(crate) fn dead_states(dfa: &Dfa) -> Vec<bool> {
    let mut live: Vec<bool> = (0..dfa.num_states).map(|q| dfa.is_accepting(q)).collect();
    loop {
        let mut changed = false;
        for e in &dfa.edges {
            if live[e.to] && !live[e.from] {
                live[e.from] = true;
                changed = true;
            }
        }
        if !changed {
            return live.into_iter().map(|l| !l).collect();
        }
    }
}

fn add_entries(a: ProbEntry, b: ProbEntry) -> ProbEntry {
    match (a, b) {
        (ProbEntry::Point(x), ProbEntry::Point(y)) => ProbEntry::Point(x + y),
        (a, b) => ProbEntry::Interval {
            lo: a.lo() + b.lo(),
            hi: (a.hi() + b.hi()).min(1.0),
        },
    }
}

/// Deterministic memoryless product policy maximising the probability of
/// reaching an accepting state.
#[derive(Debug, Clone)]
pub struct TaskPolicy {
    pub product: Product,
    /// Choice index per product state.
    pub choice: Vec<usize>,
    /// Optimal probability from the product's initial distribution.
    pub value: f64,
    pub values: Vec<f64>,
}

impl TaskPolicy {
    /// Action id prescribed at `(s, q)`, if that product state was explored.
    pub fn action_at(&self, s: StateId, q: usize) -> Option<usize> {
        let i = self.product.index_of(s, q)?;
        Some(self.product.model.choices[i][self.choice[i]].action)
    }

    pub fn to_policy(&self) -> Policy {
        let actions: Vec<usize> = (0..self.choice.len())
            .map(|i| self.product.model.choices[i][self.choice[i]].action)
            .collect();
        Policy::Memoryless(MemorylessPolicy::deterministic(&actions))
    }
}

/// Optimal task policy from the initial distribution of `mdp`.
pub fn synthesize_task_policy(mdp: &Model, dfa: &Dfa, labels: &[BTreeSet<String>]) -> Result<TaskPolicy> {
    if labels.len() != mdp.num_states() {
        return Err(arg(format!("{} labels for {} states", labels.len(), mdp.num_states())));
    }
    let roots: Vec<_> = mdp
        .initial
        .iter()
        .map(|&(s, w)| ((s, dfa.step_labels(dfa.init, &labels[s])), w))
        .collect();
    solve(build_product(mdp, dfa, labels, &roots)?)
}

/// Optimal task policy from product state `(s, q)`.
pub fn synthesize_task_policy_at(
    mdp: &Model,
    dfa: &Dfa,
    labels: &[BTreeSet<String>],
    s: StateId,
    q: usize,
) -> Result<TaskPolicy> {
    solve(build_product(mdp, dfa, labels, &[((s, q), 1.0)])?)
}

fn solve(product: Product) -> Result<TaskPolicy> {
    let target = product.accepting();
    let n = product.states.len();
    if target.is_empty() {
        return Ok(TaskPolicy {
            choice: vec![0; n],
            value: 0.0,
            values: vec![0.0; n],
            product,
        });
    }
    let r = max_reach_mdp(&product.model, &target)?;
    Ok(TaskPolicy {
        choice: r.scheduler.unwrap_or_else(|| vec![0; product.states.len()]),
        value: r.initial_value,
        values: r.values,
        product,
    })
}
