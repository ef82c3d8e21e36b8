use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::model::{Model, StateId};
use crate::error::{arg, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "states")]
pub enum Objective {
    /// Probability of eventually reaching the target set.
    Reach(BTreeSet<StateId>),
    /// Expected accumulated reward/cost before reaching the goal set.
    ExpectedCost(BTreeSet<StateId>),
}

impl Objective {
    pub fn states(&self) -> &BTreeSet<StateId> {
        match self {
            Objective::Reach(t) | Objective::ExpectedCost(t) => t,
        }
    }

    pub fn is_reach(&self) -> bool {
        matches!(self, Objective::Reach(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimize {
    Max,
    Min,
}

impl Optimize {
    pub fn flip(self) -> Self {
        match self {
            Optimize::Max => Optimize::Min,
            Optimize::Min => Optimize::Max,
        }
    }
}

/// Threshold specification `P ⋈ λ (◇T)` or `E ⋈ κ (◇G)`.
///
/// `optimize` selects how nondeterminism is resolved when checking: the
/// value reported is the max (or min) over policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spec {
    pub objective: Objective,
    pub direction: Direction,
    pub threshold: f64,
    pub optimize: Optimize,
}

impl Spec {
    pub fn reach(target: impl IntoIterator<Item = StateId>, direction: Direction, threshold: f64) -> Self {
        Self {
            objective: Objective::Reach(target.into_iter().collect()),
            direction,
            threshold,
            optimize: Optimize::Max,
        }
    }

    pub fn cost(goal: impl IntoIterator<Item = StateId>, direction: Direction, threshold: f64) -> Self {
        Self {
            objective: Objective::ExpectedCost(goal.into_iter().collect()),
            direction,
            threshold,
            optimize: Optimize::Min,
        }
    }

    pub fn with_optimize(mut self, optimize: Optimize) -> Self {
        self.optimize = optimize;
        self
    }

    pub fn satisfied_by(&self, value: f64) -> bool {
        match self.direction {
            Direction::AtLeast => value >= self.threshold - crate::PROB_TOL,
            Direction::AtMost => value <= self.threshold + crate::PROB_TOL,
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        let set = self.objective.states();
        if set.is_empty() {
            return Err(arg("target/goal set is empty"));
        }
        if let Some(&s) = set.iter().find(|&&s| s >= model.num_states()) {
            return Err(arg(format!("target state {s} out of range")));
        }
        if self.objective.is_reach() && !(0.0..=1.0).contains(&self.threshold) {
            return Err(arg(format!("probability threshold {} outside [0,1]", self.threshold)));
        }
        if !self.threshold.is_finite() {
            return Err(arg("threshold must be finite"));
        }
        Ok(())
    }

    /// Parse `reach >= 0.85 {s6}` / `cost <= 4 {goal} min`.
    ///
    /// Set members are state indices (`6` or `s6`) or label names. Without a
    /// set, states labelled `target` (reach) or `goal` (cost) are used. The
    /// optional trailing `max`/`min` overrides the default (max for reach,
    /// min for cost).
    pub fn parse(text: &str, model: &Model) -> Result<Self> {
        let (head, set, tail) = match (text.find('{'), text.find('}')) {
            (Some(a), Some(b)) if a < b => (&text[..a], Some(&text[a + 1..b]), &text[b + 1..]),
            (None, None) => (text, None, ""),
            _ => return Err(arg(format!("unbalanced braces in `{text}`"))),
        };
        let head = head.replace('≥', ">=").replace('≤', "<=");
        let mut toks: Vec<String> = head.split_whitespace().map(str::to_string).collect();
        toks.extend(tail.split_whitespace().map(str::to_string));
        if toks.len() < 3 {
            return Err(arg(format!("expected `reach|cost <=|>= value {{set}}`, got `{text}`")));
        }
        let is_reach = match toks[0].as_str() {
            "reach" | "P" | "prob" => true,
            "cost" | "reward" | "E" => false,
            other => return Err(arg(format!("unknown objective `{other}`"))),
        };
        let direction = match toks[1].as_str() {
            ">=" => Direction::AtLeast,
            "<=" => Direction::AtMost,
            other => return Err(arg(format!("unknown comparison `{other}`"))),
        };
        let threshold: f64 = toks[2]
            .parse()
            .map_err(|_| arg(format!("threshold `{}` is not a number", toks[2])))?;
        let optimize = match toks.get(3).map(String::as_str) {
            None => None,
            Some("max") => Some(Optimize::Max),
            Some("min") => Some(Optimize::Min),
            Some(other) => return Err(arg(format!("unexpected token `{other}`"))),
        };
        let states = match set {
            Some(body) => {
                let mut out = BTreeSet::new();
                for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let idx = item
                        .strip_prefix('s')
                        .unwrap_or(item)
                        .parse::<usize>()
                        .ok()
                        .filter(|&s| s < model.num_states());
                    match idx {
                        Some(s) => {
                            out.insert(s);
                        }
                        None => {
                            let l = model.states_with_label(item);
                            if l.is_empty() {
                                return Err(arg(format!("`{item}` is neither a state nor a label")));
                            }
                            out.extend(l);
                        }
                    }
                }
                out
            }
            None => model.states_with_label(if is_reach { "target" } else { "goal" }),
        };
        let mut spec = if is_reach {
            Spec::reach(states, direction, threshold)
        } else {
            Spec::cost(states, direction, threshold)
        };
        if let Some(o) = optimize {
            spec.optimize = o;
        }
        spec.validate(model)?;
        Ok(spec)
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, set) = match &self.objective {
            Objective::Reach(t) => ("reach", t),
            Objective::ExpectedCost(g) => ("cost", g),
        };
        let op = match self.direction {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
        };
        let set: Vec<String> = set.iter().map(|s| format!("s{s}")).collect();
        let opt = match self.optimize {
            Optimize::Max => "max",
            Optimize::Min => "min",
        };
        write!(f, "{name} {op} {} {{{}}} {opt}", self.threshold, set.join(","))
    }
}
