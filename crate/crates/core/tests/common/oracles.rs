//! Independent reference computations shared by the test targets.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use verisynth::models::{BeliefLabeling, Dfa, Fsc, Model, ModelBuilder, ModelKind, ProbEntry, StateId};
use verisynth::planner::{map_labeling, reach_avoid_grid, synthesize_task_policy, Product, TaskPolicy};

use super::rng;

/// Value of every state of the chain `rows` for reaching `target`: graph
/// pre-pass, then Gaussian elimination with partial pivoting.
pub fn exact_reach(rows: &[Vec<(usize, f64)>], target: &[bool]) -> Vec<f64> {
    let n = rows.len();
    let mut can = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && rows[s].iter().any(|&(t, p)| p > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&s| can[s] && !target[s]).collect();
    let pos: BTreeMap<usize, usize> = free.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let m = free.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for (i, &s) in free.iter().enumerate() {
        a[i][i] += 1.0;
        for &(t, p) in &rows[s] {
            if target[t] {
                a[i][m] += p;
            } else if let Some(&j) = pos.get(&t) {
                a[i][j] -= p;
            }
        }
    }
    for c in 0..m {
        let piv = (c..m).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..m {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=m {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n)
        .map(|s| {
            if target[s] {
                1.0
            } else {
                pos.get(&s).map_or(0.0, |&i| a[i][m] / a[i][i])
            }
        })
        .collect()
}

/// Best value over all deterministic memoryless schedulers of `product`,
/// enumerated one at a time.
pub fn brute_force(product: &Product) -> f64 {
    let model = &product.model;
    let n = model.num_states();
    let target: Vec<bool> = product.states.iter().map(|s| s.accepting).collect();
    let mut sched = vec![0usize; n];
    let mut best: f64 = 0.0;
    loop {
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| model.choices[i][sched[i]].transitions.iter().map(|&(t, e)| (t, e.lo())).collect())
            .collect();
        let v = exact_reach(&rows, &target);
        best = best.max(model.initial.iter().map(|&(i, w)| w * v[i]).sum::<f64>());
        // Next scheduler in odometer order.
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            sched[i] += 1;
            if sched[i] < model.choices[i].len() {
                break;
            }
            sched[i] = 0;
            i += 1;
        }
    }
}

pub fn random_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<BTreeSet<String>> {
    (0..n)
        .map(|_| {
            let mut l = BTreeSet::new();
            if rng.gen_bool(0.25) {
                l.insert("goal".to_string());
            }
            if rng.gen_bool(0.2) {
                l.insert("obstacle".to_string());
            }
            l
        })
        .collect()
}

/// Value of `policy` under `labels`, walking the product by hand.
pub fn induced_value(mdp: &Model, dfa: &Dfa, policy: &TaskPolicy, labels: &[BTreeSet<String>], s0: StateId) -> f64 {
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut states = vec![];
    let q0 = dfa.step_labels(dfa.init, &labels[s0]);
    index.insert((s0, q0), 0);
    states.push((s0, q0));
    let mut rows: Vec<Vec<(usize, f64)>> = vec![];
    let mut i = 0;
    while i < states.len() {
        let (s, q) = states[i];
        let mut row = vec![];
        if dfa.is_accepting(q) {
            row.push((i, 1.0));
        } else {
            let a = policy.action_at(s, q).unwrap_or(mdp.choices[s][0].action);
            let c = mdp.choice_index(s, a).unwrap();
            for &(t, e) in &mdp.choices[s][c].transitions {
                let key = (t, dfa.step_labels(q, &labels[t]));
                let j = *index.entry(key).or_insert_with(|| {
                    states.push(key);
                    states.len() - 1
                });
                row.push((j, e.lo()));
            }
        }
        rows.push(row);
        i += 1;
    }
    let target: Vec<bool> = states.iter().map(|&(_, q)| dfa.is_accepting(q)).collect();
    exact_reach(&rows, &target)[0]
}

/// Random controller on `model` covering every (node, observation) pair.
pub fn random_fsc<R: Rng>(rng: &mut R, model: &Model, nodes: usize) -> Fsc {
    let mut f = Fsc::new(nodes);
    for s in 0..model.num_states() {
        let z = &model.obs_names[model.obs(s).unwrap()];
        let acts: Vec<&str> = model.choices[s].iter().map(|c| model.action_names[c.action].as_str()).collect();
        for n in 0..nodes {
            if f.action_map.contains_key(&(n, z.clone())) {
                continue;
            }
            let mut w: Vec<f64> = acts.iter().map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() }).collect();
            if w.iter().all(|&x| x == 0.0) {
                w[0] = 1.0;
            }
            let tot: f64 = w.iter().sum();
            let dist: Vec<(&str, f64)> = acts.iter().zip(&w).map(|(&a, &x)| (a, x / tot)).collect();
            f.set_action(n, z, &dist);
            for a in &acts {
                let m = rng.gen_range(0..nodes);
                f.set_update(n, z, a, &[(m, 1.0)]);
            }
        }
    }
    f
}

/// Rebuild `model` with action `a{i}` renamed `r{perm[i]}` and every
/// state's choices in reverse order, so action ids change too.
pub fn relabel(model: &Model, perm: &[usize]) -> Model {
    let rename = |name: &str| format!("r{}", perm[name[1..].parse::<usize>().unwrap()]);
    let mut mb = ModelBuilder::new(model.kind, model.num_states());
    mb.initial_dist(model.initial.clone());
    for s in 0..model.num_states() {
        for c in model.choices[s].iter().rev() {
            mb.choice_entries(s, &rename(&model.action_names[c.action]), c.transitions.clone(), c.reward);
        }
        mb.observe(s, &model.obs_names[model.obs(s).unwrap()]);
        for l in &model.labels[s] {
            mb.label(s, l);
        }
    }
    mb.build().unwrap()
}

pub fn relabel_fsc(f: &Fsc, perm: &[usize]) -> Fsc {
    let rename = |name: &str| format!("r{}", perm[name[1..].parse::<usize>().unwrap()]);
    Fsc {
        nodes: f.nodes,
        initial_node: f.initial_node,
        action_map: f
            .action_map
            .iter()
            .map(|(k, d)| (k.clone(), d.iter().map(|(a, &p)| (rename(a), p)).collect()))
            .collect(),
        memory_update: f
            .memory_update
            .iter()
            .map(|((n, z, a), d)| ((*n, z.clone(), rename(a)), d.clone()))
            .collect(),
    }
}

/// `(L+1)·Σ_{i≤L+1} C(K,i)(1−ν)^{K−i}ν^i` in exact rational arithmetic.
pub fn alpha_exact(k: usize, l: usize, nu: &BigRational) -> f64 {
    alpha_rational(k, l, nu).to_f64().unwrap()
}

pub fn alpha_rational(k: usize, l: usize, nu: &BigRational) -> BigRational {
    let one = BigRational::one();
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for i in 0..=(l + 1).min(k) {
        if i > 0 {
            binom = binom * BigInt::from(k - i + 1) / BigInt::from(i);
        }
        let term = BigRational::from_integer(binom.clone())
            * num_traits::pow(one.clone() - nu, k - i)
            * num_traits::pow(nu.clone(), i);
        sum += term;
    }
    sum * BigRational::from_integer(BigInt::from(l + 1))
}


/// Six-cell reach-avoid model whose five non-start cells carry two uncertain
/// propositions each (ten uncertain bits), its MAP task policy, and the
/// policy's exact expected value over all 2^10 labelings.
pub fn hoeffding_fixture() -> (Model, Dfa, BeliefLabeling, TaskPolicy, f64) {
    // 2×3 grid; the five cells other than the start carry two uncertain
    // propositions each: ten uncertain bits.
    let g = reach_avoid_grid(3, 0, 0).unwrap();
    let keep: Vec<usize> = vec![0, 1, 2, 3, 4, 5];
    let mut mb = ModelBuilder::new(ModelKind::Mdp, 6);
    for &s in &keep {
        for c in &g.mdp.choices[s] {
            let tr: Vec<(usize, f64)> = c
                .transitions
                .iter()
                .map(|&(t, e)| (if t < 6 { t } else { s }, e.lo()))
                .collect();
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for (t, p) in tr {
                *merged.entry(t).or_default() += p;
            }
            mb.choice(s, &g.mdp.action_names[c.action], &merged.into_iter().collect::<Vec<_>>());
        }
    }
    let mdp = mb.build().unwrap();
    let dfa = g.dfa.clone();
    let mut r = rng(5);
    let mut p = vec![vec![0.0, 0.0]];
    for _ in 1..6 {
        p.push(vec![r.gen_range(0.1..0.9), r.gen_range(0.05..0.5)]);
    }
    let b = BeliefLabeling {
        props: vec!["goal".into(), "obstacle".into()],
        p,
    };
    let tp = synthesize_task_policy(&mdp, &dfa, &map_labeling(&b)).unwrap();

    // Exact expectation over all 2^10 labelings.
    let mut exact = 0.0;
    for mask in 0u32..1 << 10 {
        let mut l = vec![BTreeSet::new(); 6];
        let mut w = 1.0;
        for s in 1..6 {
            for (k, name) in ["goal", "obstacle"].iter().enumerate() {
                let on = mask >> (2 * (s - 1) + k) & 1 == 1;
                let pr = b.p[s][k];
                w *= if on { pr } else { 1.0 - pr };
                if on {
                    l[s].insert(name.to_string());
                }
            }
        }
        exact += w * induced_value(&mdp, &dfa, &tp, &l, 0);
    }
    (mdp, dfa, b, tp, exact)
}

/// Optimum of `Σ p_i v_i` over `{lo ≤ p ≤ hi, Σ p = 1}` by enumerating the
/// vertices: all coordinates but one at a bound.
pub fn interval_vertex_optimum(entries: &[(usize, ProbEntry)], values: &[f64], minimize: bool) -> f64 {
    let k = entries.len();
    let mut best: Option<f64> = None;
    for free in 0..k {
        for mask in 0u32..1 << (k - 1) {
            let mut p = vec![0.0; k];
            let mut rest = 1.0;
            let mut bit = 0;
            for i in (0..k).filter(|&i| i != free) {
                let (_, e) = entries[i];
                p[i] = if mask >> bit & 1 == 1 { e.hi() } else { e.lo() };
                rest -= p[i];
                bit += 1;
            }
            let (_, e) = entries[free];
            if rest < e.lo() - 1e-12 || rest > e.hi() + 1e-12 {
                continue;
            }
            p[free] = rest;
            let v: f64 = entries.iter().zip(&p).map(|(&(s, _), &pi)| pi * values[s]).sum();
            best = Some(match best {
                None => v,
                Some(b) if minimize => b.min(v),
                Some(b) => b.max(v),
            });
        }
    }
    best.expect("feasible interval row")
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) / std::f64::consts::LN_2
    }
}
