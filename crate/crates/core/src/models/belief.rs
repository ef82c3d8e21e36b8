use serde::{Deserialize, Serialize};

use super::model::StateId;
use crate::error::{invalid, Result};

/// Independent Bernoulli beliefs over the truth value of every
/// (state, proposition) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefLabeling {
    pub props: Vec<String>,
    /// `p[s][i]` = probability that proposition `props[i]` holds at `s`.
    pub p: Vec<Vec<f64>>,
}

impl BeliefLabeling {
    pub fn uniform(props: Vec<String>, num_states: usize, value: f64) -> Self {
        let k = props.len();
        Self {
            props,
            p: vec![vec![value; k]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.p.len()
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    pub fn validate(&self) -> Result<()> {
        for (s, row) in self.p.iter().enumerate() {
            if row.len() != self.props.len() {
                return Err(invalid(format!("belief row {s} has {} entries", row.len())));
            }
            if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(invalid(format!("belief {x} at state {s} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// Probability that exactly the propositions in `holds` (indexed like
    /// `props`) take the given truth values at `s`.
    pub fn joint(&self, s: StateId, holds: &[bool]) -> f64 {
        self.p[s]
            .iter()
            .zip(holds)
            .map(|(&p, &h)| if h { p } else { 1.0 - p })
            .product()
    }
}

/// Sensor model: probability that sensing from `from` reports `true` for
/// proposition `prop` at `at`, given its actual truth value.
pub trait ObservationModel: Sync {
    fn prob_true(&self, from: StateId, at: StateId, prop: usize, truth: bool) -> f64;

    /// Whether `at` can be sensed from `from` at all.
    fn visible(&self, _from: StateId, _at: StateId) -> bool {
        true
    }
}

/// Position-independent sensor with fixed true/false positive rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSensor {
    pub tpr: f64,
    pub fpr: f64,
}

impl ObservationModel for ConstantSensor {
    fn prob_true(&self, _from: StateId, _at: StateId, _prop: usize, truth: bool) -> f64 {
        if truth {
            self.tpr
        } else {
            self.fpr
        }
    }
}

/// Sensor whose accuracy decays with Manhattan distance on a grid:
/// `tpr = 0.5 + (near − 0.5)·decay^d`, `fpr = 1 − tpr`. Cells beyond
/// `radius` are not sensed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSensor {
    pub coords: Vec<(i64, i64)>,
    pub near: f64,
    pub decay: f64,
    #[serde(default)]
    pub radius: Option<u64>,
}

impl DistanceSensor {
    fn dist(&self, a: StateId, b: StateId) -> u64 {
        let (p, q) = (self.coords[a], self.coords[b]);
        p.0.abs_diff(q.0) + p.1.abs_diff(q.1)
    }
}

impl ObservationModel for DistanceSensor {
    fn prob_true(&self, from: StateId, at: StateId, _prop: usize, truth: bool) -> f64 {
        let d = self.dist(from, at) as i32;
        let tpr = 0.5 + (self.near - 0.5) * self.decay.powi(d);
        if truth {
            tpr
        } else {
            1.0 - tpr
        }
    }

    fn visible(&self, from: StateId, at: StateId) -> bool {
        self.radius.map_or(true, |r| self.dist(from, at) <= r)
    }
}
