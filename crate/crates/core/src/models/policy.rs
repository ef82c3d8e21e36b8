use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::model::{Model, StateId};
use crate::error::{invalid, Error, Result};
use crate::PROB_TOL;

/// Distribution over action ids.
pub type ActionDist = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyScope {
    State,
    Observation,
}

/// Memoryless policy, either per state or per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorylessPolicy {
    pub scope: PolicyScope,
    pub table: Vec<Option<ActionDist>>,
}

impl MemorylessPolicy {
    /// Deterministic per-state policy from action ids.
    pub fn deterministic(actions: &[usize]) -> Self {
        Self {
            scope: PolicyScope::State,
            table: actions.iter().map(|&a| Some(vec![(a, 1.0)])).collect(),
        }
    }

    /// Deterministic per-state policy selecting actions by name. States not
    /// listed must have a single enabled action.
    pub fn from_names(model: &Model, choice: &[(StateId, &str)]) -> Result<Self> {
        let mut table: Vec<Option<ActionDist>> = (0..model.num_states())
            .map(|s| match model.choices[s].as_slice() {
                [c] => Some(vec![(c.action, 1.0)]),
                _ => None,
            })
            .collect();
        for &(s, name) in choice {
            let a = model
                .action_id(name)
                .filter(|&a| model.choice_index(s, a).is_some())
                .ok_or_else(|| invalid(format!("state {s} has no action `{name}`")))?;
            table[s] = Some(vec![(a, 1.0)]);
        }
        Ok(Self {
            scope: PolicyScope::State,
            table,
        })
    }

    /// Uniform observation-based (or state-based without observations) policy.
    pub fn uniform(model: &Model) -> Result<Self> {
        let obs = model.obs_vector()?;
        let scope = if model.has_observations() {
            PolicyScope::Observation
        } else {
            PolicyScope::State
        };
        let size = match scope {
            PolicyScope::State => model.num_states(),
            PolicyScope::Observation => model.obs_names.len(),
        };
        let mut table = vec![None; size];
        for s in 0..model.num_states() {
            let k = match scope {
                PolicyScope::State => s,
                PolicyScope::Observation => obs[s],
            };
            if table[k].is_none() {
                let acts = model.actions_at(s);
                let p = 1.0 / acts.len() as f64;
                table[k] = Some(acts.into_iter().map(|a| (a, p)).collect());
            }
        }
        Ok(Self { scope, table })
    }

    pub fn dist_at(&self, model: &Model, s: StateId) -> Option<&ActionDist> {
        let k = match self.scope {
            PolicyScope::State => s,
            PolicyScope::Observation => model.obs(s)?,
        };
        self.table.get(k)?.as_ref()
    }

    pub fn is_deterministic(&self) -> bool {
        self.table
            .iter()
            .flatten()
            .all(|d| d.iter().filter(|(_, p)| *p > 0.0).count() == 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Memoryless(MemorylessPolicy),
    Fsc(Fsc),
}

impl Policy {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Policy::Memoryless(p) if p.is_deterministic() => "deterministic-memoryless",
            Policy::Memoryless(_) => "randomized-memoryless",
            Policy::Fsc(_) => "fsc",
        }
    }

    pub fn to_json(&self, model: &Model) -> Value {
        match self {
            Policy::Fsc(f) => {
                let mut v = serde_json::to_value(f.to_raw()).expect("fsc serialization");
                v["kind"] = json!("fsc");
                v
            }
            Policy::Memoryless(p) => {
                let key = |k: usize| match p.scope {
                    PolicyScope::State => k.to_string(),
                    PolicyScope::Observation => model.obs_names[k].clone(),
                };
                let table: BTreeMap<String, BTreeMap<String, f64>> = p
                    .table
                    .iter()
                    .enumerate()
                    .filter_map(|(k, d)| {
                        d.as_ref().map(|d| {
                            (
                                key(k),
                                d.iter()
                                    .map(|&(a, pr)| (model.action_names[a].clone(), pr))
                                    .collect(),
                            )
                        })
                    })
                    .collect();
                json!({
                    "kind": self.kind_name(),
                    "scope": match p.scope { PolicyScope::State => "state", PolicyScope::Observation => "observation" },
                    "table": table,
                })
            }
        }
    }

    pub fn from_json(v: &Value, model: &Model) -> Result<Self> {
        let kind = v.get("kind").and_then(Value::as_str).unwrap_or("");
        if kind == "fsc" {
            let raw: FscJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse {
                path: "fsc".into(),
                msg: e.to_string(),
            })?;
            let fsc = Fsc::from_raw(raw)?;
            fsc.validate(model)?;
            return Ok(Policy::Fsc(fsc));
        }
        let scope = match v.get("scope").and_then(Value::as_str) {
            Some("observation") => PolicyScope::Observation,
            Some("state") | None => PolicyScope::State,
            Some(other) => return Err(invalid(format!("unknown policy scope `{other}`"))),
        };
        let table: BTreeMap<String, BTreeMap<String, f64>> =
            serde_json::from_value(v.get("table").cloned().unwrap_or(Value::Null)).map_err(
                |e| Error::Parse {
                    path: "table".into(),
                    msg: e.to_string(),
                },
            )?;
        let size = match scope {
            PolicyScope::State => model.num_states(),
            PolicyScope::Observation => model.obs_names.len(),
        };
        let mut out = vec![None; size];
        for (k, dist) in table {
            let idx = match scope {
                PolicyScope::State => k.parse::<usize>().ok().filter(|&s| s < size),
                PolicyScope::Observation => model.obs_id(&k),
            }
            .ok_or_else(|| invalid(format!("policy key `{k}` does not name a state/observation")))?;
            let d = dist
                .iter()
                .map(|(a, &p)| {
                    model
                        .action_id(a)
                        .map(|a| (a, p))
                        .ok_or_else(|| invalid(format!("unknown action `{a}` in policy")))
                })
                .collect::<Result<ActionDist>>()?;
            check_dist(d.iter().map(|x| x.1), &format!("policy entry `{k}`"))?;
            out[idx] = Some(d);
        }
        Ok(Policy::Memoryless(MemorylessPolicy { scope, table: out }))
    }
}

pub(crate) fn check_dist(ps: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for p in ps {
        if !(p >= 0.0 && p <= 1.0 + PROB_TOL) {
            return Err(invalid(format!("{what}: probability {p} outside [0,1]")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(invalid(format!("{what}: distribution sums to {sum}")));
    }
    Ok(())
}

/// Finite-state controller keyed by observation and action *names*, so a
/// controller stays meaningful across models that share a vocabulary.
///
/// A missing `memory_update` entry keeps the current node. A missing
/// `action_map` entry is only allowed for observations with one enabled
/// action.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fsc {
    pub nodes: usize,
    pub initial_node: usize,
    pub action_map: BTreeMap<(usize, String), BTreeMap<String, f64>>,
    pub memory_update: BTreeMap<(usize, String, String), BTreeMap<usize, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FscJson {
    nodes: usize,
    #[serde(default)]
    initial_node: usize,
    action_map: Vec<ActionMapJson>,
    #[serde(default)]
    memory_update: Vec<MemoryUpdateJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActionMapJson {
    node: usize,
    obs: String,
    dist: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MemoryUpdateJson {
    node: usize,
    obs: String,
    action: String,
    dist: BTreeMap<String, f64>,
}

/// Name under which a state's observation is known to controllers.
pub(crate) fn obs_label(model: &Model, s: StateId) -> Result<String> {
    match &model.observations {
        None => Ok(s.to_string()),
        Some(_) => model
            .obs(s)
            .map(|z| model.obs_names[z].clone())
            .ok_or_else(|| {
                Error::Unsupported(format!("state {s} has a stochastic observation"))
            }),
    }
}

impl Fsc {
    pub fn new(nodes: usize) -> Self {
        Self {
            nodes,
            ..Default::default()
        }
    }

    pub fn set_action(&mut self, node: usize, obs: &str, dist: &[(&str, f64)]) -> &mut Self {
        self.action_map.insert(
            (node, obs.to_string()),
            dist.iter().map(|&(a, p)| (a.to_string(), p)).collect(),
        );
        self
    }

    pub fn set_update(
        &mut self,
        node: usize,
        obs: &str,
        action: &str,
        dist: &[(usize, f64)],
    ) -> &mut Self {
        self.memory_update.insert(
            (node, obs.to_string(), action.to_string()),
            dist.iter().copied().collect(),
        );
        self
    }

    /// Action distribution (by action id) of `node` at state `s`.
    pub fn action_dist(&self, model: &Model, node: usize, s: StateId) -> Result<ActionDist> {
        let z = obs_label(model, s)?;
        match self.action_map.get(&(node, z.clone())) {
            Some(d) => d
                .iter()
                .filter(|(_, &p)| p > 0.0)
                .map(|(a, &p)| {
                    model
                        .action_id(a)
                        .filter(|&id| model.choice_index(s, id).is_some())
                        .map(|id| (id, p))
                        .ok_or_else(|| {
                            Error::ObservationMismatch(format!(
                                "action `{a}` is not enabled under observation `{z}`"
                            ))
                        })
                })
                .collect(),
            None => match model.choices[s].as_slice() {
                [c] => Ok(vec![(c.action, 1.0)]),
                _ => Err(Error::ObservationMismatch(format!(
                    "controller node {node} has no action for observation `{z}`"
                ))),
            },
        }
    }

    /// Successor-node distribution after taking `action` in `node` under `obs`.
    pub fn update_dist(&self, node: usize, obs: &str, action: &str) -> Vec<(usize, f64)> {
        match self
            .memory_update
            .get(&(node, obs.to_string(), action.to_string()))
        {
            Some(d) => d.iter().filter(|(_, &p)| p > 0.0).map(|(&n, &p)| (n, p)).collect(),
            None => vec![(node, 1.0)],
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if self.nodes == 0 {
            return Err(invalid("controller without memory nodes"));
        }
        if self.initial_node >= self.nodes {
            return Err(invalid("initial node out of range"));
        }
        for ((n, z), d) in &self.action_map {
            if *n >= self.nodes {
                return Err(invalid(format!("action map refers to node {n}")));
            }
            check_dist(d.values().copied(), &format!("action map ({n}, {z})"))?;
        }
        for ((n, z, a), d) in &self.memory_update {
            if *n >= self.nodes || d.keys().any(|&m| m >= self.nodes) {
                return Err(invalid(format!("memory update ({n}, {z}, {a}) refers to unknown node")));
            }
            check_dist(d.values().copied(), &format!("memory update ({n}, {z}, {a})"))?;
        }
        for s in 0..model.num_states() {
            for n in 0..self.nodes {
                self.action_dist(model, n, s)?;
            }
        }
        Ok(())
    }

    fn to_raw(&self) -> FscJson {
        FscJson {
            nodes: self.nodes,
            initial_node: self.initial_node,
            action_map: self
                .action_map
                .iter()
                .map(|((node, obs), dist)| ActionMapJson {
                    node: *node,
                    obs: obs.clone(),
                    dist: dist.clone(),
                })
                .collect(),
            memory_update: self
                .memory_update
                .iter()
                .map(|((node, obs, action), dist)| MemoryUpdateJson {
                    node: *node,
                    obs: obs.clone(),
                    action: action.clone(),
                    dist: dist.iter().map(|(n, p)| (n.to_string(), *p)).collect(),
                })
                .collect(),
        }
    }

    fn from_raw(raw: FscJson) -> Result<Self> {
        let mut f = Fsc::new(raw.nodes);
        f.initial_node = raw.initial_node;
        for e in raw.action_map {
            f.action_map.insert((e.node, e.obs), e.dist);
        }
        for e in raw.memory_update {
            let dist = e
                .dist
                .iter()
                .map(|(k, &p)| {
                    k.parse::<usize>()
                        .map(|n| (n, p))
                        .map_err(|_| invalid(format!("memory update target `{k}` is not a node")))
                })
                .collect::<Result<_>>()?;
            f.memory_update.insert((e.node, e.obs, e.action), dist);
        }
        Ok(f)
    }
}
