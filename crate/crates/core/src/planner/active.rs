use std::collections::{BTreeMap, HashMap};

use super::product::ProductState;
use super::PlannerConfig;
use crate::error::Result;
use crate::models::{BeliefLabeling, Dfa, Model, ObservationModel, StateId};

const MASS_EPS: f64 = 1e-12;
const SCORE_TOL: f64 = 1e-12;

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Expected entropy reduction (bits) of one reading of a Bernoulli belief `b`
/// from a sensor with true/false positive rates `t`/`f`.
fn info_gain(b: f64, t: f64, f: f64) -> f64 {
    let py = b * t + (1.0 - b) * f;
    let mut post = 0.0;
    if py > 0.0 {
        post += py * h2(b * t / py);
    }
    if py < 1.0 {
        post += (1.0 - py) * h2(b * (1.0 - t) / (1.0 - py));
    }
    (h2(b) - post).max(0.0)
}

struct Node {
    seq: Vec<usize>,
    safety: f64,
    info: f64,
}

/// Choose an action sequence of length at most `cfg.depth` that gathers
/// information on the task-relevant propositions while keeping the task
/// state and the way back to the current state.
///
/// Every sequence is scored `β·safety + (1 − β)·info/max_info` with
/// `safety = Pr(automaton state unchanged)·Pr(back at the start within the
/// remaining budget)` and `info` the expected entropy reduction of the
/// readings taken along the way, each against the current belief. Ties go
/// to the shorter, then lexicographically smaller sequence; the empty
/// sequence means "no perception detour".
pub fn active_perception_strategy(
    mdp: &Model,
    dfa: &Dfa,
    current: ProductState,
    belief: &BeliefLabeling,
    obs: &dyn ObservationModel,
    cfg: &PlannerConfig,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    belief.validate()?;
    let n = mdp.num_states();
    let (root, q0) = (current.mdp, current.dfa);
    let depth = cfg.depth;

    // Expected information per sensing position.
    let relevant: Vec<usize> = dfa
        .relevant_props(q0)
        .into_iter()
        .filter_map(|j| belief.prop_index(&dfa.props[j]))
        .collect();
    let gain: Vec<f64> = (0..n)
        .map(|x| {
            let mut g = 0.0;
            for c in 0..belief.num_states() {
                if !obs.visible(x, c) {
                    continue;
                }
                for &p in &relevant {
                    let (t, f) = (obs.prob_true(x, c, p, true), obs.prob_true(x, c, p, false));
                    g += info_gain(belief.p[c][p], t, f);
                }
            }
            g
        })
        .collect();

    // ret[h][s]: best probability to be back at the root within h steps.
    let mut ret = vec![(0..n).map(|s| if s == root { 1.0 } else { 0.0 }).collect::<Vec<f64>>()];
    for h in 1..=depth {
        let prev = &ret[h - 1];
        let next = (0..n)
            .map(|s| {
                if s == root {
                    return 1.0;
                }
                mdp.choices[s]
                    .iter()
                    .map(|c| c.transitions.iter().map(|&(t, e)| e.lo() * prev[t]).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .collect();
        ret.push(next);
    }

    // Automaton successor distribution when entering `s` in state `q`.
    let bidx: Vec<Option<usize>> = dfa.props.iter().map(|p| belief.prop_index(p)).collect();
    let mut dfa_cache: HashMap<(StateId, usize), Vec<(usize, f64)>> = HashMap::new();
    let mut dfa_dist = |s: StateId, q: usize| -> Vec<(usize, f64)> {
        dfa_cache
            .entry((s, q))
            .or_insert_with(|| {
                let k = dfa.props.len();
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for mask in 0..(1usize << k) {
                    let val: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
                    let pr: f64 = (0..k)
                        .map(|j| {
                            let b = bidx[j].map_or(0.0, |i| belief.p[s][i]);
                            if val[j] {
                                b
                            } else {
                                1.0 - b
                            }
                        })
                        .product();
                    if pr > 0.0 {
                        *acc.entry(dfa.step(q, &val)).or_default() += pr;
                    }
                }
                acc.into_iter().collect()
            })
            .clone()
    };

    let mut nodes = vec![Node {
        seq: Vec::new(),
        safety: ret[depth][root],
        info: 0.0,
    }];
    let mut frontier: Vec<(Vec<usize>, BTreeMap<(StateId, usize), f64>, f64)> =
        vec![(Vec::new(), [((root, q0), 1.0)].into(), 0.0)];
    let mut actions: Vec<usize> = (0..mdp.action_names.len()).collect();
    actions.sort();
    for d in 1..=depth {
        let mut next_frontier = Vec::new();
        for (seq, mu, info) in &frontier {
            'act: for &a in &actions {
                let mut nu: BTreeMap<(StateId, usize), f64> = BTreeMap::new();
                for (&(s, q), &w) in mu {
                    let Some(c) = mdp.choice_index(s, a) else { continue 'act };
                    for &(t, e) in &mdp.choices[s][c].transitions {
                        let pt = w * e.lo();
                        if pt <= MASS_EPS {
                            continue;
                        }
                        for (q2, pq) in dfa_dist(t, q) {
                            *nu.entry((t, q2)).or_default() += pt * pq;
                        }
                    }
                }
                nu.retain(|_, w| *w > MASS_EPS);
                let mut marg = vec![0.0; n];
                let mut same = 0.0;
                for (&(s, q), &w) in &nu {
                    marg[s] += w;
                    if q == q0 {
                        same += w;
                    }
                }
                let back: f64 = (0..n).map(|s| marg[s] * ret[depth - d][s]).sum();
                let info2 = info + (0..n).map(|s| marg[s] * gain[s]).sum::<f64>();
                let mut seq2 = seq.clone();
                seq2.push(a);
                nodes.push(Node {
                    seq: seq2.clone(),
                    safety: same * back,
                    info: info2,
                });
                next_frontier.push((seq2, nu, info2));
            }
        }
        frontier = next_frontier;
    }

    let max_info = nodes.iter().map(|n| n.info).fold(0.0, f64::max);
    let score = |n: &Node| {
        let info = if max_info > 0.0 { n.info / max_info } else { 0.0 };
        cfg.beta * n.safety + (1.0 - cfg.beta) * info
    };
    let mut best = &nodes[0];
    let mut best_score = score(best);
    for node in &nodes[1..] {
        let sc = score(node);
        let wins = sc > best_score + SCORE_TOL
            || (sc >= best_score - SCORE_TOL
                && (node.seq.len(), &node.seq) < (best.seq.len(), &best.seq));
        if wins {
            best = node;
            best_score = sc;
        }
    }
    Ok(best.seq.clone())
}
