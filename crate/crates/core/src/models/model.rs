use std::collections::{BTreeMap, BTreeSet};

use crate::error::{invalid, Error, Result};
use crate::PROB_TOL;

pub type StateId = usize;

/// A transition probability: either a point value or an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbEntry {
    Point(f64),
    Interval { lo: f64, hi: f64 },
}

impl ProbEntry {
    pub fn lo(&self) -> f64 {
        match *self {
            ProbEntry::Point(p) => p,
            ProbEntry::Interval { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            ProbEntry::Point(p) => p,
            ProbEntry::Interval { hi, .. } => hi,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, ProbEntry::Point(_))
    }

    /// Point value, or `None` for a proper interval.
    pub fn point(&self) -> Option<f64> {
        match *self {
            ProbEntry::Point(p) => Some(p),
            ProbEntry::Interval { lo, hi } if lo == hi => Some(lo),
            ProbEntry::Interval { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Mc,
    Mdp,
    Pomdp,
    Upomdp,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Mc => "mc",
            ModelKind::Mdp => "mdp",
            ModelKind::Pomdp => "pomdp",
            ModelKind::Upomdp => "upomdp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "mc" => ModelKind::Mc,
            "mdp" => ModelKind::Mdp,
            "pomdp" => ModelKind::Pomdp,
            "upomdp" => ModelKind::Upomdp,
            _ => return None,
        })
    }

    pub fn partially_observable(&self) -> bool {
        matches!(self, ModelKind::Pomdp | ModelKind::Upomdp)
    }
}

/// One enabled action of a state together with its successor distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: usize,
    pub transitions: Vec<(StateId, ProbEntry)>,
    pub reward: f64,
}

impl Choice {
    pub fn is_point(&self) -> bool {
        self.transitions.iter().all(|(_, e)| e.point().is_some())
    }

    /// Nominal successor probabilities; intervals are not allowed here.
    pub fn point_transitions(&self) -> Option<Vec<(StateId, f64)>> {
        self.transitions
            .iter()
            .map(|&(t, e)| e.point().map(|p| (t, p)))
            .collect()
    }

    pub fn successors(&self) -> impl Iterator<Item = StateId> + '_ {
        self.transitions.iter().map(|(t, _)| *t)
    }
}

/// Explicit-state Markov model covering MCs, MDPs, POMDPs and their
/// interval-uncertain variants.
///
/// Observations are stored as per-state distributions over observation ids;
/// most algorithms require them to be deterministic (see
/// [`expand_observations`](crate::models::expand_observations)).
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub initial: Vec<(StateId, f64)>,
    pub action_names: Vec<String>,
    pub choices: Vec<Vec<Choice>>,
    pub obs_names: Vec<String>,
    pub observations: Option<Vec<Vec<(usize, f64)>>>,
    pub labels: Vec<BTreeSet<String>>,
}

impl Model {
    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|a| a == name)
    }

    pub fn obs_id(&self, name: &str) -> Option<usize> {
        self.obs_names.iter().position(|a| a == name)
    }

    pub fn action_name(&self, s: StateId, c: usize) -> &str {
        &self.action_names[self.choices[s][c].action]
    }

    /// Index of the choice at `s` labelled with action id `a`.
    pub fn choice_index(&self, s: StateId, a: usize) -> Option<usize> {
        self.choices[s].iter().position(|c| c.action == a)
    }

    pub fn actions_at(&self, s: StateId) -> Vec<usize> {
        self.choices[s].iter().map(|c| c.action).collect()
    }

    pub fn states_with_label(&self, prop: &str) -> BTreeSet<StateId> {
        (0..self.num_states())
            .filter(|&s| self.labels[s].contains(prop))
            .collect()
    }

    pub fn is_uncertain(&self) -> bool {
        self.choices
            .iter()
            .flatten()
            .any(|c| !c.is_point())
    }

    pub fn has_observations(&self) -> bool {
        self.observations.is_some()
    }

    /// Deterministic observation of `s`, if the model has deterministic
    /// observations.
    pub fn obs(&self, s: StateId) -> Option<usize> {
        let o = self.observations.as_ref()?;
        match o[s].as_slice() {
            [(z, _)] => Some(*z),
            _ => None,
        }
    }

    pub fn has_deterministic_obs(&self) -> bool {
        self.observations
            .as_ref()
            .is_some_and(|o| o.iter().all(|d| d.len() == 1))
    }

    /// Observation ids of all states; states without observations get their
    /// own index so that a fully observable model behaves as a POMDP with
    /// unique observations.
    pub fn obs_vector(&self) -> Result<Vec<usize>> {
        match &self.observations {
            None => Ok((0..self.num_states()).collect()),
            Some(_) => (0..self.num_states())
                .map(|s| {
                    self.obs(s).ok_or_else(|| {
                        Error::Unsupported(format!(
                            "state {s} has a stochastic observation; expand observations first"
                        ))
                    })
                })
                .collect(),
        }
    }

    /// Σ_s init(s)·values(s).
    pub fn initial_value(&self, values: &[f64]) -> f64 {
        self.initial.iter().map(|&(s, p)| p * values[s]).sum()
    }

    /// Single initial state, if the initial distribution is a Dirac.
    pub fn initial_state(&self) -> Option<StateId> {
        match self.initial.as_slice() {
            [(s, _)] => Some(*s),
            _ => None,
        }
    }

    pub fn has_rewards(&self) -> bool {
        self.choices.iter().flatten().any(|c| c.reward != 0.0)
    }

    /// Check every structural invariant of the model.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if n == 0 {
            return Err(invalid("model has no states"));
        }
        if self.labels.len() != n {
            return Err(invalid("label table size differs from the state count"));
        }
        if self.initial.is_empty() {
            return Err(invalid("empty initial distribution"));
        }
        let mut init_sum = 0.0;
        for &(s, p) in &self.initial {
            if s >= n {
                return Err(invalid(format!("initial state {s} out of range")));
            }
            if !(p > 0.0 && p <= 1.0 + PROB_TOL) {
                return Err(invalid(format!("initial probability {p} of state {s}")));
            }
            init_sum += p;
        }
        if (init_sum - 1.0).abs() > PROB_TOL {
            return Err(invalid(format!("initial distribution sums to {init_sum}")));
        }

        for (s, cs) in self.choices.iter().enumerate() {
            if cs.is_empty() {
                return Err(invalid(format!("state {s} has no enabled action")));
            }
            if self.kind == ModelKind::Mc && cs.len() != 1 {
                return Err(invalid(format!(
                    "state {s} of a Markov chain has {} actions",
                    cs.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for c in cs {
                let aname = self
                    .action_names
                    .get(c.action)
                    .ok_or_else(|| invalid(format!("state {s}: unknown action id {}", c.action)))?;
                if !seen.insert(c.action) {
                    return Err(invalid(format!("state {s}: action `{aname}` listed twice")));
                }
                self.validate_row(s, aname, c)?;
            }
        }

        if self.kind.partially_observable() && self.observations.is_none() {
            return Err(invalid(format!(
                "{} model without observations",
                self.kind.as_str()
            )));
        }
        if let Some(obs) = &self.observations {
            self.validate_observations(obs)?;
        }
        Ok(())
    }

    fn validate_row(&self, s: StateId, aname: &str, c: &Choice) -> Result<()> {
        let n = self.num_states();
        let row = |msg: String| invalid(format!("state {s}, action `{aname}`: {msg}"));
        if c.transitions.is_empty() {
            return Err(row("empty successor list".into()));
        }
        if !(c.reward.is_finite() && c.reward >= 0.0) {
            return Err(row(format!("reward {} must be finite and non-negative", c.reward)));
        }
        let mut succ = BTreeSet::new();
        let (mut lo_sum, mut hi_sum) = (0.0, 0.0);
        for &(t, e) in &c.transitions {
            if t >= n {
                return Err(row(format!("successor {t} out of range")));
            }
            if !succ.insert(t) {
                return Err(row(format!("successor {t} listed twice")));
            }
            match e {
                ProbEntry::Point(p) => {
                    if !(p.is_finite() && p > 0.0 && p <= 1.0 + PROB_TOL) {
                        return Err(row(format!("probability {p} to {t} outside (0,1]")));
                    }
                }
                ProbEntry::Interval { lo, hi } => {
                    if lo == 0.0 {
                        return Err(Error::ZeroLowerBound {
                            state: s,
                            action: aname.to_string(),
                            succ: t,
                        });
                    }
                    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi && hi <= 1.0 + PROB_TOL)
                    {
                        return Err(row(format!("interval [{lo}, {hi}] to {t} is malformed")));
                    }
                }
            }
            lo_sum += e.lo();
            hi_sum += e.hi();
        }
        if lo_sum > 1.0 + PROB_TOL || hi_sum < 1.0 - PROB_TOL {
            return Err(row(if c.is_point() {
                format!("probabilities sum to {lo_sum}")
            } else {
                format!("interval bounds admit no distribution (Σlo = {lo_sum}, Σhi = {hi_sum})")
            }));
        }
        Ok(())
    }

    fn validate_observations(&self, obs: &[Vec<(usize, f64)>]) -> Result<()> {
        if obs.len() != self.num_states() {
            return Err(invalid("observation table size differs from the state count"));
        }
        let mut actions_by_obs: BTreeMap<usize, (StateId, BTreeSet<usize>)> = BTreeMap::new();
        for (s, dist) in obs.iter().enumerate() {
            if dist.is_empty() {
                return Err(invalid(format!("state {s} has no observation")));
            }
            let mut sum = 0.0;
            for &(z, p) in dist {
                if z >= self.obs_names.len() {
                    return Err(invalid(format!("state {s}: unknown observation id {z}")));
                }
                if !(p > 0.0 && p <= 1.0 + PROB_TOL) {
                    return Err(invalid(format!("state {s}: observation probability {p}")));
                }
                sum += p;
                let acts: BTreeSet<usize> = self.actions_at(s).into_iter().collect();
                match actions_by_obs.get(&z) {
                    Some((s0, a0)) if *a0 != acts => {
                        return Err(invalid(format!(
                            "states {s0} and {s} share observation `{}` but enable different actions",
                            self.obs_names[z]
                        )));
                    }
                    Some(_) => {}
                    None => {
                        actions_by_obs.insert(z, (s, acts));
                    }
                }
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(invalid(format!("state {s}: observation distribution sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Incremental construction of a [`Model`] by names.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    kind: ModelKind,
    initial: Vec<(StateId, f64)>,
    action_names: Vec<String>,
    choices: Vec<Vec<Choice>>,
    obs_names: Vec<String>,
    observations: Vec<Option<Vec<(usize, f64)>>>,
    labels: Vec<BTreeSet<String>>,
}

impl ModelBuilder {
    pub fn new(kind: ModelKind, num_states: usize) -> Self {
        Self {
            kind,
            initial: vec![(0, 1.0)],
            action_names: Vec::new(),
            choices: vec![Vec::new(); num_states],
            obs_names: Vec::new(),
            observations: vec![None; num_states],
            labels: vec![BTreeSet::new(); num_states],
        }
    }

    pub fn initial(&mut self, s: StateId) -> &mut Self {
        self.initial = vec![(s, 1.0)];
        self
    }

    pub fn initial_dist(&mut self, dist: Vec<(StateId, f64)>) -> &mut Self {
        self.initial = dist;
        self
    }

    pub fn action(&mut self, name: &str) -> usize {
        match self.action_names.iter().position(|a| a == name) {
            Some(i) => i,
            None => {
                self.action_names.push(name.to_string());
                self.action_names.len() - 1
            }
        }
    }

    /// Add a point-probability choice.
    pub fn choice(&mut self, s: StateId, action: &str, to: &[(StateId, f64)]) -> &mut Self {
        let entries = to.iter().map(|&(t, p)| (t, ProbEntry::Point(p))).collect();
        self.choice_entries(s, action, entries, 0.0)
    }

    pub fn choice_entries(
        &mut self,
        s: StateId,
        action: &str,
        transitions: Vec<(StateId, ProbEntry)>,
        reward: f64,
    ) -> &mut Self {
        let action = self.action(action);
        self.choices[s].push(Choice {
            action,
            transitions,
            reward,
        });
        self
    }

    pub fn reward(&mut self, s: StateId, action: &str, r: f64) -> &mut Self {
        let a = self.action(action);
        if let Some(c) = self.choices[s].iter_mut().find(|c| c.action == a) {
            c.reward = r;
        }
        self
    }

    pub fn observe(&mut self, s: StateId, obs: &str) -> &mut Self {
        let z = self.obs(obs);
        self.observations[s] = Some(vec![(z, 1.0)]);
        self
    }

    pub fn observe_dist(&mut self, s: StateId, dist: &[(&str, f64)]) -> &mut Self {
        let d = dist.iter().map(|&(z, p)| (self.obs(z), p)).collect();
        self.observations[s] = Some(d);
        self
    }

    fn obs(&mut self, name: &str) -> usize {
        match self.obs_names.iter().position(|a| a == name) {
            Some(i) => i,
            None => {
                self.obs_names.push(name.to_string());
                self.obs_names.len() - 1
            }
        }
    }

    pub fn label(&mut self, s: StateId, prop: &str) -> &mut Self {
        self.labels[s].insert(prop.to_string());
        self
    }

    pub fn build(&self) -> Result<Model> {
        let observations = if self.observations.iter().any(Option::is_some) {
            Some(
                self.observations
                    .iter()
                    .enumerate()
                    .map(|(s, o)| {
                        o.clone()
                            .ok_or_else(|| invalid(format!("state {s} has no observation")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let m = Model {
            kind: self.kind,
            initial: self.initial.clone(),
            action_names: self.action_names.clone(),
            choices: self.choices.clone(),
            obs_names: self.obs_names.clone(),
            observations,
            labels: self.labels.clone(),
        };
        m.validate()?;
        Ok(m)
    }
}
