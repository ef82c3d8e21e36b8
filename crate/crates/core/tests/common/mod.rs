#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use verisynth::models::{Model, ModelBuilder, ModelKind, ProbEntry};

mod oracles;
#[allow(unused_imports)]
pub use oracles::*;

/// Eight-state MDP with target s6: s3, s4 and s5 offer actions `a`/`b`.
pub fn running_mdp() -> Model {
    let mut b = ModelBuilder::new(ModelKind::Mdp, 8);
    b.choice(0, "a", &[(1, 0.7), (2, 0.3)])
        .choice(1, "a", &[(3, 0.5), (4, 0.5)])
        .choice(2, "a", &[(5, 0.5), (4, 0.5)])
        .choice(3, "a", &[(3, 1.0)])
        .choice(3, "b", &[(6, 1.0)])
        .choice(4, "a", &[(6, 1.0)])
        .choice(4, "b", &[(4, 1.0)])
        .choice(5, "a", &[(6, 0.3), (7, 0.7)])
        .choice(5, "b", &[(7, 1.0)])
        .choice(6, "a", &[(6, 1.0)])
        .choice(7, "a", &[(7, 1.0)])
        .label(6, "target");
    b.build().unwrap()
}

/// Five-state POMDP: s0, s1, s2 look alike ("blue"); from s0 going up and
/// then down reaches the target s3, anything else can end in the sink s4.
pub fn motivating_pomdp(uniform_initial: bool) -> Model {
    let mut b = ModelBuilder::new(ModelKind::Pomdp, 5);
    b.choice(0, "up", &[(1, 1.0)])
        .choice(0, "down", &[(2, 1.0)])
        .choice(1, "up", &[(4, 1.0)])
        .choice(1, "down", &[(3, 1.0)])
        .choice(2, "up", &[(3, 1.0)])
        .choice(2, "down", &[(4, 1.0)])
        .choice(3, "stay", &[(3, 1.0)])
        .choice(4, "stay", &[(4, 1.0)]);
    for s in 0..3 {
        b.observe(s, "blue");
    }
    b.observe(3, "goal").observe(4, "sink").label(3, "target");
    if uniform_initial {
        b.initial_dist(vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]);
    }
    b.build().unwrap()
}

/// Random point-probability MDP. The last two states are an absorbing
/// target and an absorbing sink.
pub fn random_mdp(rng: &mut ChaCha8Rng, n: usize, max_actions: usize) -> Model {
    assert!(n >= 3);
    let mut b = ModelBuilder::new(ModelKind::Mdp, n);
    for s in 0..n - 2 {
        let k = rng.gen_range(1..=max_actions);
        for a in 0..k {
            let succ = rng.gen_range(1..=3.min(n));
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            targets.truncate(succ);
            let w: Vec<f64> = (0..succ).map(|_| rng.gen_range(0.05..1.0)).collect();
            let tot: f64 = w.iter().sum();
            let mut row: Vec<(usize, f64)> = targets.iter().zip(&w).map(|(&t, &x)| (t, x / tot)).collect();
            // Make rows sum to one exactly in floating point.
            let rest: f64 = row[1..].iter().map(|x| x.1).sum();
            row[0].1 = 1.0 - rest;
            b.choice(s, &format!("a{a}"), &row);
            b.reward(s, &format!("a{a}"), rng.gen_range(0.0..3.0));
        }
    }
    b.choice(n - 2, "a0", &[(n - 2, 1.0)]);
    b.choice(n - 1, "a0", &[(n - 1, 1.0)]);
    b.label(n - 2, "target");
    b.build().unwrap()
}

/// Random interval row over `k` successors around a random nominal.
pub fn random_interval_row(rng: &mut ChaCha8Rng, k: usize) -> (Vec<(usize, ProbEntry)>, Vec<f64>) {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let tot: f64 = w.iter().sum();
    let entries = w
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let p = x / tot;
            let lo = (p - rng.gen_range(0.0..0.2)).max(0.01);
            let hi = (p + rng.gen_range(0.0..0.2)).min(1.0);
            (i, ProbEntry::Interval { lo, hi })
        })
        .collect();
    let values = (0..k).map(|_| rng.gen_range(-1.0..2.0)).collect();
    (entries, values)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All deterministic memoryless schedulers as choice-index vectors.
pub fn all_schedulers(model: &Model) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for cs in &model.choices {
        let mut next = Vec::new();
        for prefix in &out {
            for c in 0..cs.len() {
                let mut p = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Reachability probabilities of the chain fixed by `sched`, by plain
/// Jacobi iteration run to convergence (independent of the library solver).
pub fn chain_reach(model: &Model, sched: &[usize], target: &[bool]) -> Vec<f64> {
    let n = model.num_states();
    let mut v: Vec<f64> = (0..n).map(|s| if target[s] { 1.0 } else { 0.0 }).collect();
    for _ in 0..200_000 {
        let mut next = v.clone();
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if target[s] {
                continue;
            }
            let c = &model.choices[s][sched[s]];
            next[s] = c.transitions.iter().map(|&(t, e)| e.lo() * v[t]).sum();
            delta = delta.max((next[s] - v[s]).abs());
        }
        v = next;
        if delta < 1e-15 {
            break;
        }
    }
    v
}

/// Random POMDP: states `0..n-2` carry one of `num_obs` observations (states
/// sharing an observation share their action set); the last two states are an
/// absorbing target ("goal") and sink ("sink").
pub fn random_pomdp(rng: &mut ChaCha8Rng, n: usize, num_obs: usize, max_actions: usize) -> Model {
    assert!(n >= 3 && num_obs >= 1);
    let obs_actions: Vec<usize> = (0..num_obs).map(|_| rng.gen_range(1..=max_actions)).collect();
    let mut b = ModelBuilder::new(ModelKind::Pomdp, n);
    for s in 0..n - 2 {
        let z = if s < num_obs { s } else { rng.gen_range(0..num_obs) };
        b.observe(s, &format!("z{z}"));
        for a in 0..obs_actions[z] {
            let succ = rng.gen_range(1..=2usize);
            let mut targets: Vec<usize> = (0..n).collect();
            targets.shuffle(rng);
            targets.truncate(succ);
            let row: Vec<(usize, f64)> = if succ == 1 {
                vec![(targets[0], 1.0)]
            } else {
                let p = rng.gen_range(0.1..0.9);
                vec![(targets[0], p), (targets[1], 1.0 - p)]
            };
            b.choice(s, &format!("a{a}"), &row);
            b.reward(s, &format!("a{a}"), rng.gen_range(0.5..2.0));
        }
    }
    b.choice(n - 2, "a0", &[(n - 2, 1.0)]).observe(n - 2, "goal").label(n - 2, "target");
    b.choice(n - 1, "a0", &[(n - 1, 1.0)]).observe(n - 1, "sink");
    b.build().unwrap()
}

/// Chain pMC `s0 →v→ s1 →(1−v)→ s2 →v→ s3`, all other mass to the sink s4.
/// Reaching s3 has probability v²(1 − v).
pub fn chain_pmc(lo: f64, hi: f64) -> verisynth::synth::ParametricModel {
    use verisynth::synth::{Parameter, ParametricModel, Poly};
    let mut b = ModelBuilder::new(ModelKind::Mdp, 5);
    b.choice(0, "a", &[(1, 0.5), (4, 0.5)])
        .choice(1, "a", &[(2, 0.5), (4, 0.5)])
        .choice(2, "a", &[(3, 0.5), (4, 0.5)])
        .choice(3, "a", &[(3, 1.0)])
        .choice(4, "a", &[(4, 1.0)])
        .label(3, "target");
    let v = Poly::affine(0.0, &[1.0]);
    let one_minus_v = Poly::affine(1.0, &[-1.0]);
    let polys = vec![
        ((0, 0, 0), v.clone()),
        ((0, 0, 1), one_minus_v.clone()),
        ((1, 0, 0), one_minus_v.clone()),
        ((1, 0, 1), v.clone()),
        ((2, 0, 0), v),
        ((2, 0, 1), one_minus_v),
    ];
    let params = vec![Parameter { name: "v".into(), lo, hi }];
    ParametricModel::new(b.build().unwrap(), params, polys).unwrap()
}

/// One-step pMC reaching s1 with probability 0.5 + (v−0.13)(v−0.525)(v−0.89)
/// for v ∈ [0, 1]; `reach ≥ 0.5` holds on [0.13, 0.525] ∪ [0.89, 1].
pub fn region_pmc() -> verisynth::synth::ParametricModel {
    use std::collections::BTreeMap;
    use verisynth::synth::{Parameter, ParametricModel, Poly};
    let (a, b_, c) = (0.13, 0.525, 0.89);
    let cubic = [
        ("1", -a * b_ * c),
        ("v", a * b_ + a * c + b_ * c),
        ("v^2", -(a + b_ + c)),
        ("v^3", 1.0),
    ];
    let names = vec!["v".to_string()];
    let up: BTreeMap<String, f64> = cubic
        .iter()
        .map(|&(k, x)| (k.to_string(), if k == "1" { 0.5 + x } else { x }))
        .collect();
    let down: BTreeMap<String, f64> = cubic
        .iter()
        .map(|&(k, x)| (k.to_string(), if k == "1" { 0.5 - x } else { -x }))
        .collect();
    let mut b = ModelBuilder::new(ModelKind::Mdp, 3);
    b.choice(0, "a", &[(1, 0.5), (2, 0.5)])
        .choice(1, "a", &[(1, 1.0)])
        .choice(2, "a", &[(2, 1.0)])
        .label(1, "target");
    let polys = vec![
        ((0, 0, 0), Poly::from_monomials(&up, &names).unwrap()),
        ((0, 0, 1), Poly::from_monomials(&down, &names).unwrap()),
    ];
    let params = vec![Parameter { name: "v".into(), lo: 0.0, hi: 1.0 }];
    ParametricModel::new(b.build().unwrap(), params, polys).unwrap()
}

/// s0 → goal s1 with probability in [0.5, 0.95] under `a`; with `with_b`,
/// action `b` reaches the goal with probability exactly 0.6.
pub fn interval_toy(with_b: bool) -> Model {
    let mut b = ModelBuilder::new(ModelKind::Mdp, 3);
    b.choice_entries(
        0,
        "a",
        vec![
            (1, ProbEntry::Interval { lo: 0.5, hi: 0.95 }),
            (2, ProbEntry::Interval { lo: 0.05, hi: 0.5 }),
        ],
        0.0,
    );
    if with_b {
        b.choice(0, "b", &[(1, 0.6), (2, 0.4)]);
    }
    b.choice(1, "a", &[(1, 1.0)]).choice(2, "a", &[(2, 1.0)]).label(1, "target");
    b.build().unwrap()
}

/// Replace every two-successor point row by symmetric intervals of half
/// width up to `w`; midpoints equal the original probabilities.
pub fn widen(model: &Model, w: f64) -> Model {
    let mut m = model.clone();
    for cs in &mut m.choices {
        for c in cs.iter_mut() {
            if c.transitions.len() < 2 {
                continue;
            }
            for (_, e) in c.transitions.iter_mut() {
                let p = e.lo();
                let h = w.min(p - 0.01).min(0.99 - p).max(0.0);
                *e = ProbEntry::Interval { lo: p - h, hi: p + h };
            }
        }
    }
    if m.kind == ModelKind::Pomdp {
        m.kind = ModelKind::Upomdp;
    }
    m.validate().unwrap();
    m
}
