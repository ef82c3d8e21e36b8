use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::product::{build_product, TaskPolicy};
use crate::checker::linear::solve_chain;
use crate::error::{arg, Error, Result};
use crate::models::{BeliefLabeling, Dfa, Model};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    /// `|Pr(MAP) − mean_i f(L_i)|`.
    pub risk: f64,
    pub empirical_mean: f64,
    /// Value of the policy under the labeling it was planned for.
    pub map_value: f64,
    pub samples: usize,
    /// Per-sample satisfaction probabilities `f(L_i)`.
    pub values: Vec<f64>,
}

impl RiskReport {
    /// Probability bound that the empirical mean is off by more than `eps`.
    pub fn hoeffding(&self, eps: f64) -> f64 {
        hoeffding_bound(self.samples, eps)
    }
}

/// `2·exp(−2Nε²)`.
pub fn hoeffding_bound(n: usize, eps: f64) -> f64 {
    (2.0 * (-2.0 * n as f64 * eps * eps).exp()).min(1.0)
}

/// Draw a labeling with independent Bernoulli entries.
pub(crate) fn sample_labeling<R: Rng>(belief: &BeliefLabeling, rng: &mut R) -> Vec<BTreeSet<String>> {
    belief
        .p
        .iter()
        .map(|row| {
            row.iter()
                .zip(&belief.props)
                .filter(|(&p, _)| rng.gen::<f64>() < p)
                .map(|(_, n)| n.clone())
                .collect()
        })
        .collect()
}

/// Probability that following `policy` satisfies the task when the true
/// labels are `labels`. Product states the policy never planned for play
/// their first action.
pub fn policy_value(mdp: &Model, dfa: &Dfa, policy: &TaskPolicy, labels: &[BTreeSet<String>]) -> Result<f64> {
    let pm = &policy.product;
    let roots: Vec<_> = pm
        .model
        .initial
        .iter()
        .map(|&(i, w)| ((pm.states[i].mdp, pm.states[i].dfa), w))
        .collect();
    let prod = build_product(mdp, dfa, labels, &roots)?;
    let n = prod.states.len();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let st = prod.states[i];
            let cs = &prod.model.choices[i];
            let c = policy
                .action_at(st.mdp, st.dfa)
                .and_then(|a| cs.iter().position(|c| c.action == a))
                .unwrap_or(0);
            cs[c].transitions.iter().map(|&(t, e)| (t, e.lo())).collect()
        })
        .collect();
    // Only the part of the chain the policy can reach matters.
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = prod.model.initial.iter().map(|&(i, _)| i).collect();
    while let Some(i) = stack.pop() {
        if !std::mem::replace(&mut reach[i], true) {
            stack.extend(rows[i].iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t));
        }
    }
    // Reached states that cannot reach acceptance are pinned to 0.
    let mut good: Vec<bool> = prod.states.iter().map(|s| s.accepting).collect();
    loop {
        let mut changed = false;
        for i in (0..n).filter(|&i| reach[i]) {
            if !good[i] && rows[i].iter().any(|&(t, p)| p > 0.0 && good[t]) {
                good[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let fixed: Vec<Option<f64>> = (0..n)
        .map(|i| {
            if prod.states[i].accepting {
                Some(1.0)
            } else if !reach[i] || !good[i] {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    let x = solve_chain(&rows, &vec![0.0; n], &fixed)
        .ok_or_else(|| Error::Internal("singular product chain".into()))?;
    Ok(prod.model.initial.iter().map(|&(i, w)| w * x[i]).sum())
}

/// Risk of `policy` under the label uncertainty of `belief`: sample `n`
/// labelings, evaluate the policy exactly on each and compare the mean with
/// the planned value. Sample `i` uses ChaCha8 stream `i` under `seed`.
pub fn statistical_risk(
    mdp: &Model,
    dfa: &Dfa,
    policy: &TaskPolicy,
    belief: &BeliefLabeling,
    n: usize,
    seed: u64,
) -> Result<RiskReport> {
    if n < 1 {
        return Err(arg("risk assessment needs at least one sample"));
    }
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let labels = sample_labeling(belief, &mut rng);
            policy_value(mdp, dfa, policy, &labels)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(RiskReport {
        risk: (policy.value - mean).abs(),
        empirical_mean: mean,
        map_value: policy.value,
        samples: n,
        values,
    })
}
