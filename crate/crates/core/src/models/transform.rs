use std::collections::{BTreeMap, VecDeque};

use super::model::{Choice, Model, ModelKind, ProbEntry, StateId};
use super::policy::{obs_label, ActionDist, Fsc, MemorylessPolicy, Policy};
use crate::error::{arg, invalid, Error, Result};

fn mixed_row(model: &Model, s: StateId, dist: &ActionDist) -> Result<Choice> {
    let mut acc: BTreeMap<StateId, (f64, f64, bool)> = BTreeMap::new();
    let mut reward = 0.0;
    for &(a, w) in dist.iter().filter(|(_, w)| *w > 0.0) {
        let c = model
            .choice_index(s, a)
            .map(|i| &model.choices[s][i])
            .ok_or_else(|| invalid(format!("policy picks disabled action at state {s}")))?;
        reward += w * c.reward;
        for &(t, e) in &c.transitions {
            let slot = acc.entry(t).or_insert((0.0, 0.0, true));
            slot.0 += w * e.lo();
            slot.1 += w * e.hi();
            slot.2 &= e.point().is_some();
        }
    }
    let transitions = acc
        .into_iter()
        .map(|(t, (lo, hi, point))| {
            (
                t,
                if point {
                    ProbEntry::Point(lo)
                } else {
                    ProbEntry::Interval { lo, hi }
                },
            )
        })
        .collect();
    Ok(Choice {
        action: 0,
        transitions,
        reward,
    })
}

/// Markov chain induced by a memoryless policy.
///
/// Randomized policies mix rows; mixing interval rows yields the interval
/// hull of the mixture. Controllers with memory must go through
/// [`fsc_product`] first.
pub fn induced_mc(model: &Model, policy: &Policy) -> Result<Model> {
    if model.kind == ModelKind::Mc {
        return Ok(model.clone());
    }
    let p = match policy {
        Policy::Memoryless(p) => p,
        Policy::Fsc(_) => {
            return Err(Error::Unsupported(
                "controllers with memory need the product construction".into(),
            ))
        }
    };
    let n = model.num_states();
    let dist_of = |s: StateId| -> Option<ActionDist> {
        match p.dist_at(model, s) {
            Some(d) => Some(d.clone()),
            None => match model.choices[s].as_slice() {
                [c] => Some(vec![(c.action, 1.0)]),
                _ => None,
            },
        }
    };
    let mut rows: Vec<Option<Choice>> = vec![None; n];
    let mut queue: VecDeque<StateId> = model.initial.iter().map(|&(s, _)| s).collect();
    let mut seen = vec![false; n];
    for &s in &queue {
        seen[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        let d = dist_of(s).ok_or(Error::UndefinedPolicy(s))?;
        let row = mixed_row(model, s, &d)?;
        for t in row.successors() {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
        rows[s] = Some(row);
    }
    let choices = rows
        .into_iter()
        .enumerate()
        .map(|(s, r)| {
            let row = match r {
                Some(r) => r,
                None => {
                    let d = dist_of(s).unwrap_or_else(|| vec![(model.choices[s][0].action, 1.0)]);
                    mixed_row(model, s, &d)?
                }
            };
            Ok(vec![row])
        })
        .collect::<Result<Vec<_>>>()?;
    let mc = Model {
        kind: ModelKind::Mc,
        initial: model.initial.clone(),
        action_names: vec!["tau".into()],
        choices,
        obs_names: model.obs_names.clone(),
        observations: model.observations.clone(),
        labels: model.labels.clone(),
    };
    mc.validate()?;
    Ok(mc)
}

/// Make observations deterministic by splitting every state into one copy
/// per observation it may emit.
pub fn expand_observations(model: &Model) -> Result<Model> {
    let Some(obs) = &model.observations else {
        return Ok(model.clone());
    };
    if model.has_deterministic_obs() {
        return Ok(model.clone());
    }
    let mut index = Vec::with_capacity(model.num_states());
    let mut copies: Vec<(StateId, usize, f64)> = Vec::new();
    for (s, d) in obs.iter().enumerate() {
        index.push(copies.len());
        for &(z, p) in d {
            copies.push((s, z, p));
        }
    }
    let mut choices = Vec::with_capacity(copies.len());
    for &(s, _, _) in &copies {
        let mut row = Vec::new();
        for c in &model.choices[s] {
            let mut transitions = Vec::new();
            for &(t, e) in &c.transitions {
                let split = &obs[t];
                if split.len() > 1 && e.point().is_none() {
                    return Err(Error::Unsupported(format!(
                        "interval transition into state {t}, whose observation is stochastic"
                    )));
                }
                for (k, &(_, q)) in split.iter().enumerate() {
                    let e2 = match e {
                        ProbEntry::Point(p) => ProbEntry::Point(p * q),
                        ProbEntry::Interval { lo, hi } => ProbEntry::Interval { lo, hi },
                    };
                    transitions.push((index[t] + k, e2));
                }
            }
            row.push(Choice {
                action: c.action,
                transitions,
                reward: c.reward,
            });
        }
        choices.push(row);
    }
    let mut initial = Vec::new();
    for &(s, p) in &model.initial {
        for (k, &(_, q)) in obs[s].iter().enumerate() {
            initial.push((index[s] + k, p * q));
        }
    }
    let out = Model {
        kind: model.kind,
        initial,
        action_names: model.action_names.clone(),
        choices,
        obs_names: model.obs_names.clone(),
        observations: Some(copies.iter().map(|&(_, z, _)| vec![(z, 1.0)]).collect()),
        labels: copies.iter().map(|&(s, _, _)| model.labels[s].clone()).collect(),
    };
    out.validate()?;
    Ok(out)
}

/// Product of a POMDP with `k` memory nodes.
///
/// State `(s, n)` has index `s·k + n` and observation `"z@n"`; action
/// `"a|n'"` plays `a` and moves to node `n'`. Observation-based memoryless
/// policies on the product correspond one-to-one to `k`-node controllers,
/// see [`fold_fsc`].
pub fn fsc_product(model: &Model, k: usize) -> Result<Model> {
    if k == 0 {
        return Err(arg("memory size must be at least 1"));
    }
    let n = model.num_states();
    let labels_z: Vec<String> = (0..n)
        .map(|s| obs_label(model, s))
        .collect::<Result<_>>()?;
    let mut obs_names: Vec<String> = Vec::new();
    let mut obs_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut observations = Vec::with_capacity(n * k);
    let action_names: Vec<String> = model
        .action_names
        .iter()
        .flat_map(|a| (0..k).map(move |m| format!("{a}|{m}")))
        .collect();
    let mut choices = Vec::with_capacity(n * k);
    let mut labels = Vec::with_capacity(n * k);
    for s in 0..n {
        for node in 0..k {
            let name = format!("{}@{node}", labels_z[s]);
            let next = obs_index.len();
            let z = *obs_index.entry(name.clone()).or_insert_with(|| {
                obs_names.push(name);
                next
            });
            observations.push(vec![(z, 1.0)]);
            labels.push(model.labels[s].clone());
            let mut row = Vec::new();
            for c in &model.choices[s] {
                for m in 0..k {
                    row.push(Choice {
                        action: c.action * k + m,
                        transitions: c
                            .transitions
                            .iter()
                            .map(|&(t, e)| (t * k + m, e))
                            .collect(),
                        reward: c.reward,
                    });
                }
            }
            choices.push(row);
        }
    }
    let out = Model {
        kind: if model.is_uncertain() {
            ModelKind::Upomdp
        } else {
            ModelKind::Pomdp
        },
        initial: model.initial.iter().map(|&(s, p)| (s * k, p)).collect(),
        action_names,
        choices,
        obs_names,
        observations: Some(observations),
        labels,
    };
    out.validate()?;
    Ok(out)
}

/// Fold an observation-based memoryless policy on `fsc_product(model, k)`
/// back into a `k`-node controller for `model`.
pub fn fold_fsc(model: &Model, k: usize, product: &Model, policy: &MemorylessPolicy) -> Result<Fsc> {
    let mut fsc = Fsc::new(k);
    for s in 0..model.num_states() {
        let z = obs_label(model, s)?;
        for node in 0..k {
            if fsc.action_map.contains_key(&(node, z.clone())) {
                continue;
            }
            let ps = s * k + node;
            let dist = match policy.dist_at(product, ps) {
                Some(d) => d.clone(),
                None => match product.choices[ps].as_slice() {
                    [c] => vec![(c.action, 1.0)],
                    _ => return Err(Error::UndefinedPolicy(ps)),
                },
            };
            let mut amap: BTreeMap<String, f64> = BTreeMap::new();
            let mut upd: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
            for &(pa, w) in &dist {
                let (a, m) = (pa / k, pa % k);
                let name = model.action_names[a].clone();
                *amap.entry(name.clone()).or_default() += w;
                *upd.entry(name).or_default().entry(m).or_default() += w;
            }
            for c in &model.choices[s] {
                let name = &model.action_names[c.action];
                let mass = amap.get(name).copied().unwrap_or(0.0);
                let u = upd.remove(name).unwrap_or_default();
                if mass > 0.0 {
                    let d: BTreeMap<usize, f64> = u
                        .into_iter()
                        .filter(|(_, w)| *w > 0.0)
                        .map(|(m, w)| (m, w / mass))
                        .collect();
                    if !(d.len() == 1 && d.contains_key(&node)) {
                        fsc.memory_update.insert((node, z.clone(), name.clone()), d);
                    }
                }
            }
            amap.retain(|_, w| *w > 0.0);
            fsc.action_map.insert((node, z.clone()), amap);
        }
    }
    Ok(fsc)
}

/// Where a state of a simple model comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// An original state (same index as in the input).
    State(StateId),
    /// Internal node of the binary action tree of an original state.
    Choice { state: StateId, node: usize },
    /// Uncertain-outcome state of an original (state, action).
    Outcome { state: StateId, action: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeChild {
    /// Leaf carrying an original action id.
    Leaf(usize),
    /// Another internal node of the same tree.
    Node(usize),
}

/// Binary decision tree replacing the action choice of one original state.
/// Node 0 is the original state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleTree {
    /// `(simple state, [(simple action id, child); 2])` per node.
    pub nodes: Vec<(StateId, [(usize, TreeChild); 2])>,
}

impl SimpleTree {
    /// Probability of every original action given, per tree node, the
    /// probability of taking its first branch.
    pub fn leaf_probs(&self, first_branch: impl Fn(usize) -> f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 1.0)];
        while let Some((node, w)) = stack.pop() {
            let q = first_branch(node);
            for (i, (_, child)) in self.nodes[node].1.iter().enumerate() {
                let wi = w * if i == 0 { q } else { 1.0 - q };
                match *child {
                    TreeChild::Leaf(a) => out.push((a, wi)),
                    TreeChild::Node(m) => stack.push((m, wi)),
                }
            }
        }
        out.sort_by_key(|x| x.0);
        out
    }
}

/// Simple/binary normal form together with the bookkeeping to map policies
/// back to the input model.
#[derive(Debug, Clone)]
pub struct SimpleModel {
    pub model: Model,
    pub origin: Vec<Origin>,
    /// Action tree of each original state with at least two actions.
    pub trees: Vec<Option<SimpleTree>>,
}

impl SimpleModel {
    /// States with a genuine binary action choice.
    pub fn is_choice_state(&self, s: StateId) -> bool {
        self.model.choices[s].len() == 2
    }
}

fn is_deterministic(c: &Choice) -> bool {
    matches!(c.transitions.as_slice(), [(_, e)] if e.point().is_some())
}

/// Transform into simple/binary form: every state has at most two actions,
/// two-action states have deterministic outcomes, and uncertain outcomes
/// live in dedicated single-action states.
///
/// A state with `m > 2` actions (or with two actions of which one is
/// stochastic) becomes a binary tree rooted at the state itself with `m − 1`
/// internal nodes; each stochastic action gets its own outcome state.
/// Auxiliary states observe `"z#i"` (tree node `i`) or `"z#a"` (outcome of
/// action `a`), where `z` is the parent's observation.
pub fn to_simple(model: &Model) -> Result<SimpleModel> {
    let n = model.num_states();
    let has_obs = model.observations.is_some();
    let zlabel: Vec<Option<String>> = (0..n)
        .map(|s| if has_obs { obs_label(model, s).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;

    let mut b = SimpleBuilder {
        action_names: model.action_names.clone(),
        obs_names: model.obs_names.clone(),
        choices: vec![Vec::new(); n],
        observations: model
            .observations
            .clone()
            .unwrap_or_default(),
        labels: model.labels.clone(),
        origin: (0..n).map(Origin::State).collect(),
    };
    let mut trees = vec![None; n];

    for s in 0..n {
        let mut cs: Vec<&Choice> = model.choices[s].iter().collect();
        cs.sort_by_key(|c| c.action);
        let convert = cs.len() > 2 || (cs.len() == 2 && !cs.iter().all(|c| is_deterministic(c)));
        if !convert {
            b.choices[s] = cs.into_iter().cloned().collect();
            if b.choices[s].len() == 2 {
                trees[s] = Some(SimpleTree {
                    nodes: vec![(
                        s,
                        [
                            (b.choices[s][0].action, TreeChild::Leaf(b.choices[s][0].action)),
                            (b.choices[s][1].action, TreeChild::Leaf(b.choices[s][1].action)),
                        ],
                    )],
                });
            }
            continue;
        }
        let mut tree = SimpleTree { nodes: Vec::new() };
        b.build_node(model, s, &zlabel[s], &cs, s, &mut tree);
        trees[s] = Some(tree);
    }

    let out = Model {
        kind: model.kind,
        initial: model.initial.clone(),
        action_names: b.action_names,
        choices: b.choices,
        obs_names: b.obs_names,
        observations: if has_obs { Some(b.observations) } else { None },
        labels: b.labels,
    };
    out.validate()?;
    Ok(SimpleModel {
        model: out,
        origin: b.origin,
        trees,
    })
}

struct SimpleBuilder {
    action_names: Vec<String>,
    obs_names: Vec<String>,
    choices: Vec<Vec<Choice>>,
    observations: Vec<Vec<(usize, f64)>>,
    labels: Vec<std::collections::BTreeSet<String>>,
    origin: Vec<Origin>,
}

impl SimpleBuilder {
    fn action(&mut self, name: String) -> usize {
        match self.action_names.iter().position(|a| *a == name) {
            Some(i) => i,
            None => {
                self.action_names.push(name);
                self.action_names.len() - 1
            }
        }
    }

    fn new_state(&mut self, origin: Origin, obs: Option<String>) -> StateId {
        let id = self.choices.len();
        self.choices.push(Vec::new());
        self.labels.push(Default::default());
        self.origin.push(origin);
        if let Some(name) = obs {
            let z = match self.obs_names.iter().position(|o| *o == name) {
                Some(z) => z,
                None => {
                    self.obs_names.push(name);
                    self.obs_names.len() - 1
                }
            };
            self.observations.push(vec![(z, 1.0)]);
        }
        id
    }

    /// Build the subtree for `cs` rooted at simple state `at`; returns the
    /// node index inside `tree`.
    fn build_node(
        &mut self,
        model: &Model,
        root: StateId,
        z: &Option<String>,
        cs: &[&Choice],
        at: StateId,
        tree: &mut SimpleTree,
    ) -> usize {
        let idx = tree.nodes.len();
        tree.nodes.push((at, [(0, TreeChild::Leaf(0)); 2]));
        let mid = cs.len().div_ceil(2);
        let halves = [&cs[..mid], &cs[mid..]];
        let mut children = [(0, TreeChild::Leaf(0)); 2];
        for (i, half) in halves.iter().enumerate() {
            if let [c] = half {
                let aname = model.action_names[c.action].clone();
                let (target, reward) = if is_deterministic(c) {
                    (c.transitions[0].0, c.reward)
                } else {
                    let u = self.new_state(
                        Origin::Outcome {
                            state: root,
                            action: c.action,
                        },
                        z.as_ref().map(|z| format!("{z}#{aname}")),
                    );
                    self.choices[u].push(Choice {
                        action: c.action,
                        transitions: c.transitions.clone(),
                        reward: 0.0,
                    });
                    (u, c.reward)
                };
                self.choices[at].push(Choice {
                    action: c.action,
                    transitions: vec![(target, ProbEntry::Point(1.0))],
                    reward,
                });
                children[i] = (c.action, TreeChild::Leaf(c.action));
            } else {
                let name: Vec<&str> = half
                    .iter()
                    .map(|c| model.action_names[c.action].as_str())
                    .collect();
                let a = self.action(name.join("+"));
                let node_no = tree.nodes.len();
                let child = self.new_state(
                    Origin::Choice {
                        state: root,
                        node: node_no,
                    },
                    z.as_ref().map(|z| format!("{z}#{node_no}")),
                );
                self.choices[at].push(Choice {
                    action: a,
                    transitions: vec![(child, ProbEntry::Point(1.0))],
                    reward: 0.0,
                });
                let m = self.build_node(model, root, z, half, child, tree);
                children[i] = (a, TreeChild::Node(m));
            }
        }
        tree.nodes[idx].1 = children;
        idx
    }
}
