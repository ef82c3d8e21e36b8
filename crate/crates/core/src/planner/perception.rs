use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::{BeliefLabeling, ObservationModel, StateId};

/// Sensor reading: proposition `prop` reported `value` at `state`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reading {
    pub state: StateId,
    pub prop: usize,
    pub value: bool,
}

/// Draw one reading per visible (state, proposition) pair from `from`,
/// given the true labels.
pub fn sense<R: Rng>(
    belief: &BeliefLabeling,
    obs: &dyn ObservationModel,
    from: StateId,
    truth: &[BTreeSet<String>],
    rng: &mut R,
) -> Vec<Reading> {
    let mut out = Vec::new();
    for (at, labels) in truth.iter().enumerate() {
        if !obs.visible(from, at) {
            continue;
        }
        for (prop, name) in belief.props.iter().enumerate() {
            let p = obs.prob_true(from, at, prop, labels.contains(name));
            out.push(Reading {
                state: at,
                prop,
                value: rng.gen::<f64>() < p,
            });
        }
    }
    out
}

/// Posterior beliefs after `readings` taken from `agent`, one Bayes step
/// per reading. A reading the prior deems impossible leaves the entry
/// unchanged.
pub fn bayes_update(
    belief: &BeliefLabeling,
    obs: &dyn ObservationModel,
    agent: StateId,
    readings: &[Reading],
) -> Result<BeliefLabeling> {
    let mut out = belief.clone();
    for r in readings {
        let p = out
            .p
            .get_mut(r.state)
            .and_then(|row| row.get_mut(r.prop))
            .ok_or_else(|| invalid(format!("reading for unknown entry ({}, {})", r.state, r.prop)))?;
        let t = obs.prob_true(agent, r.state, r.prop, true);
        let f = obs.prob_true(agent, r.state, r.prop, false);
        let (lt, lf) = if r.value { (t, f) } else { (1.0 - t, 1.0 - f) };
        let den = *p * lt + (1.0 - *p) * lf;
        if den > 0.0 {
            *p = (*p * lt / den).clamp(0.0, 1.0);
        } else {
            log::warn!("impossible reading at state {}, proposition {}; belief kept", r.state, r.prop);
        }
    }
    Ok(out)
}

fn xlog2(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / q).log2()
    }
}

/// Jensen–Shannon divergence of two Bernoulli parameters, in bits.
fn jsd_bernoulli(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let kl = |p: f64| xlog2(p, m) + xlog2(1.0 - p, 1.0 - m);
    (0.5 * kl(a) + 0.5 * kl(b)).max(0.0)
}

/// Cumulative Jensen–Shannon divergence (bits) over all (state,
/// proposition) Bernoullis.
pub fn jsd(prior: &BeliefLabeling, posterior: &BeliefLabeling) -> Result<f64> {
    if prior.props != posterior.props || prior.num_states() != posterior.num_states() {
        return Err(invalid("beliefs range over different entries"));
    }
    Ok(prior
        .p
        .iter()
        .zip(&posterior.p)
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(&a, &b)| jsd_bernoulli(a, b))
        .sum())
}

/// Most probable labeling: `p ∈ L̂(s)` iff `belief(s, p) ≥ 0.5`.
pub fn map_labeling(belief: &BeliefLabeling) -> Vec<BTreeSet<String>> {
    belief
        .p
        .iter()
        .map(|row| {
            row.iter()
                .zip(&belief.props)
                .filter(|(&x, _)| x >= 0.5)
                .map(|(_, n)| n.clone())
                .collect()
        })
        .collect()
}
