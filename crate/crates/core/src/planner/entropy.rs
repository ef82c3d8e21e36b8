use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::checker::{evaluate_fsc, fsc_product_policy, CheckOptions};
use crate::error::Result;
use crate::models::{fsc_product, Fsc, Model, Spec, StateId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    /// Critical `(node, state)` pairs.
    pub crit: BTreeSet<(usize, StateId)>,
    /// Mean normalised action entropy over `crit`; `None` when empty.
    pub h: Option<f64>,
    /// Value of the controller from the initial distribution.
    pub value: f64,
}

/// Mean normalised action entropy of `fsc` over its critical pairs: the
/// `(node, state)` pairs reachable under the controller, with at least two
/// enabled actions, whose value breaches the threshold of `spec`.
///
/// A high value points at an undecided controller (retrain), a low value at
/// a confident but wrong one (add memory).
pub fn entropy_over_critical(model: &Model, fsc: &Fsc, spec: &Spec) -> Result<EntropyReport> {
    let r = evaluate_fsc(model, fsc, spec, &CheckOptions::default())?;
    let value = r.initial_value;
    if spec.satisfied_by(value) {
        return Ok(EntropyReport {
            crit: BTreeSet::new(),
            h: None,
            value,
        });
    }
    let k = fsc.nodes;
    let product = fsc_product(model, k)?;
    let policy = fsc_product_policy(model, fsc, &product)?;

    // Product states reachable under the controller.
    let mut seen = vec![false; product.num_states()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &(s, p) in &model.initial {
        let i = s * k + fsc.initial_node;
        if p > 0.0 && !seen[i] {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let Some(dist) = &policy.table[i] else { continue };
        for &(a, pa) in dist {
            if pa <= 0.0 {
                continue;
            }
            let Some(c) = product.choice_index(i, a) else { continue };
            for &(j, e) in &product.choices[i][c].transitions {
                if e.hi() > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }

    let mut crit = BTreeSet::new();
    let mut total = 0.0;
    for i in (0..product.num_states()).filter(|&i| seen[i]) {
        let (s, n) = (i / k, i % k);
        let acts = model.choices[s].len();
        if acts < 2 || spec.satisfied_by(r.values[i]) {
            continue;
        }
        let h: f64 = fsc
            .action_dist(model, n, s)?
            .iter()
            .filter(|&&(_, p)| p > 0.0)
            .map(|&(_, p)| -p * p.log2())
            .sum();
        total += h / (acts as f64).log2();
        crit.insert((n, s));
    }
    let h = (!crit.is_empty()).then(|| total / crit.len() as f64);
    Ok(EntropyReport { crit, h, value })
}
