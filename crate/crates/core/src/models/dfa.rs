use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Guarded edge: `guard[i] = Some(b)` requires proposition `i` to equal `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DfaEdge {
    pub from: usize,
    pub guard: Vec<Option<bool>>,
    pub to: usize,
}

impl DfaEdge {
    fn matches(&self, val: &[bool]) -> bool {
        self.guard
            .iter()
            .zip(val)
            .all(|(g, v)| g.map_or(true, |g| g == *v))
    }

    fn is_default(&self) -> bool {
        self.guard.iter().all(Option::is_none)
    }
}

/// Deterministic finite automaton over valuations of `props`, with
/// first-match edge semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dfa {
    pub props: Vec<String>,
    pub num_states: usize,
    pub init: usize,
    pub accepting: BTreeSet<usize>,
    pub edges: Vec<DfaEdge>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DfaJson {
    props: Vec<String>,
    states: usize,
    init: usize,
    accepting: Vec<usize>,
    edges: Vec<EdgeJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    from: usize,
    #[serde(default)]
    guard: BTreeMap<String, serde_json::Value>,
    to: usize,
}

impl Dfa {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: DfaJson = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        let mut edges = Vec::with_capacity(raw.edges.len());
        for (i, e) in raw.edges.iter().enumerate() {
            let mut guard = vec![None; raw.props.len()];
            for (p, v) in &e.guard {
                let idx = raw
                    .props
                    .iter()
                    .position(|q| q == p)
                    .ok_or_else(|| invalid(format!("edges[{i}]: unknown proposition `{p}`")))?;
                guard[idx] = match v {
                    serde_json::Value::Bool(b) => Some(*b),
                    serde_json::Value::String(s) if s == "*" => None,
                    other => {
                        return Err(invalid(format!("edges[{i}]: guard value {other} for `{p}`")))
                    }
                };
            }
            edges.push(DfaEdge {
                from: e.from,
                guard,
                to: e.to,
            });
        }
        let dfa = Dfa {
            props: raw.props,
            num_states: raw.states,
            init: raw.init,
            accepting: raw.accepting.into_iter().collect(),
            edges,
        };
        dfa.validate()?;
        Ok(dfa)
    }

    pub fn to_json(&self) -> String {
        let raw = DfaJson {
            props: self.props.clone(),
            states: self.num_states,
            init: self.init,
            accepting: self.accepting.iter().copied().collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    from: e.from,
                    guard: e
                        .guard
                        .iter()
                        .enumerate()
                        .filter_map(|(i, g)| g.map(|b| (self.props[i].clone(), b.into())))
                        .collect(),
                    to: e.to,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("dfa serialization cannot fail")
    }

    /// Totality: every state must end its edge list with a default edge.
    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.init >= self.num_states {
            return Err(invalid("DFA initial state out of range"));
        }
        if let Some(q) = self.accepting.iter().find(|&&q| q >= self.num_states) {
            return Err(invalid(format!("accepting state {q} out of range")));
        }
        for e in &self.edges {
            if e.from >= self.num_states || e.to >= self.num_states {
                return Err(invalid(format!("edge {} -> {} out of range", e.from, e.to)));
            }
            if e.guard.len() != self.props.len() {
                return Err(invalid("guard arity differs from the proposition count"));
            }
        }
        for q in 0..self.num_states {
            if !self.edges.iter().any(|e| e.from == q && e.is_default()) {
                return Err(invalid(format!("DFA state {q} has no default edge")));
            }
        }
        Ok(())
    }

    /// Successor under a valuation (indexed like `props`).
    pub fn step(&self, q: usize, val: &[bool]) -> usize {
        self.edges
            .iter()
            .find(|e| e.from == q && e.matches(val))
            .map_or(q, |e| e.to)
    }

    /// Successor under the set of propositions that hold.
    pub fn step_labels(&self, q: usize, labels: &BTreeSet<String>) -> usize {
        let val: Vec<bool> = self.props.iter().map(|p| labels.contains(p)).collect();
        self.step(q, &val)
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting.contains(&q)
    }

    /// Propositions constrained by guards of edges leaving `q` towards a
    /// different state.
    pub fn relevant_props(&self, q: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|e| e.from == q && e.to != q)
            .flat_map(|e| {
                e.guard
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.is_some())
                    .map(|(i, _)| i)
            })
            .collect()
    }

    /// Reach-avoid task: reach `goal` while never visiting `avoid`.
    /// States: 0 = running, 1 = accepted, 2 = failed.
    pub fn reach_avoid(goal: &str, avoid: &str) -> Self {
        let props = vec![goal.to_string(), avoid.to_string()];
        let e = |from, guard: [Option<bool>; 2], to| DfaEdge {
            from,
            guard: guard.to_vec(),
            to,
        };
        Dfa {
            props,
            num_states: 3,
            init: 0,
            accepting: [1].into_iter().collect(),
            edges: vec![
                e(0, [None, Some(true)], 2),
                e(0, [Some(true), None], 1),
                e(0, [None, None], 0),
                e(1, [None, None], 1),
                e(2, [None, None], 2),
            ],
        }
    }
}
