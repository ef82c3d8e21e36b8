//! Robust finite-state controller synthesis for uncertain POMDPs by
//! sequential convex programming on the simple form of the memory product.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{StepLog, SynthReport, SynthStatus};
use crate::checker::{
    adversary, evaluate_fsc, fsc_product_policy, greedy_distribution, lift_spec, robust_value, CheckOptions,
    CheckResult,
};
use crate::error::{arg, Error, Result};
use crate::models::{
    fold_fsc, fsc_product, to_simple, Direction, Fsc, MemorylessPolicy, Model, Policy, PolicyScope, SimpleModel,
    SimpleTree, Spec, StateId, TreeChild,
};
use crate::optim::{
    linearize_bilinear, scp_step, solve_lp, trust_region_constraints, LinearProgram, LpStatus, Relation, ScpConfig,
    Sense,
};

/// Perturbed restarts after the uniform start.
const RESTARTS: u64 = 4;

/// Synthesise a `k`-node controller maximising (for `≥`) or minimising (for
/// `≤`) the worst-case value over all interval instantiations.
///
/// The first run starts from the controller playing every (action, next
/// node) pair uniformly. That point is symmetric in the memory nodes and
/// often stationary, so a few runs from seeded perturbations follow; the
/// best certified run is returned.
pub fn robust_fsc_synthesis(model: &Model, k: usize, spec: &Spec, cfg: &ScpConfig) -> Result<SynthReport> {
    let t0 = Instant::now();
    let setup = Setup::new(model, k, spec)?;
    let uniform = setup.uniform_q();
    let maximize = spec.direction == Direction::AtLeast;
    let mut best = setup.run(uniform.clone(), cfg)?;
    for seed in 0..RESTARTS {
        if best.status == SynthStatus::Satisfied || uniform.is_empty() {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q0 = uniform
            .iter()
            .map(|&x| (x + rng.gen_range(-0.3..0.3)).clamp(0.05, 0.95))
            .collect();
        let r = setup.run(q0, cfg)?;
        let better = if maximize {
            r.certified_value > best.certified_value
        } else {
            r.certified_value < best.certified_value
        };
        if better {
            best = r;
        }
    }
    best.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(best)
}

/// As [`robust_fsc_synthesis`] but starting from `init` (clamped into the
/// strictly positive policy region).
pub fn robust_fsc_synthesis_from(model: &Model, init: &Fsc, spec: &Spec, cfg: &ScpConfig) -> Result<SynthReport> {
    let setup = Setup::new(model, init.nodes, spec)?;
    init.validate(model)?;
    let pol = fsc_product_policy(model, init, &setup.product)?;
    let mut q = vec![f64::NAN; setup.qkeys.len()];
    for (ps, tree) in setup.sm.trees.iter().enumerate() {
        let Some(tree) = tree else { continue };
        let dist = pol.table[ps].clone().unwrap_or_default();
        let mass = |acts: &[usize]| -> f64 { dist.iter().filter(|(a, _)| acts.contains(a)).map(|(_, w)| w).sum() };
        for (node, (_, children)) in tree.nodes.iter().enumerate() {
            let j = setup.qvar_of_node(ps, node);
            if !q[j].is_nan() {
                continue;
            }
            let first = mass(&subtree_leaves(tree, children[0].1));
            let second = mass(&subtree_leaves(tree, children[1].1));
            q[j] = if first + second > 0.0 { first / (first + second) } else { 0.5 };
        }
    }
    let q = q
        .into_iter()
        .map(|x| if x.is_nan() { 0.5 } else { x.clamp(cfg.eps_pol, 1.0 - cfg.eps_pol) })
        .collect();
    setup.run(q, cfg)
}

/// Leaves (original action ids) below `child`.
fn subtree_leaves(tree: &SimpleTree, child: TreeChild) -> Vec<usize> {
    match child {
        TreeChild::Leaf(a) => vec![a],
        TreeChild::Node(m) => tree.nodes[m].1.iter().flat_map(|&(_, c)| subtree_leaves(tree, c)).collect(),
    }
}

struct Setup<'a> {
    model: &'a Model,
    k: usize,
    spec: &'a Spec,
    product: Model,
    sm: SimpleModel,
    lifted: Spec,
    /// `(product observation, tree node)` per policy variable.
    qkeys: Vec<(usize, usize)>,
    /// Policy variable of every simple state with a binary choice.
    qvar: Vec<Option<usize>>,
    opts: CheckOptions,
}

impl<'a> Setup<'a> {
    fn new(model: &'a Model, k: usize, spec: &'a Spec) -> Result<Self> {
        if k < 1 {
            return Err(arg("memory size must be at least 1"));
        }
        model.validate()?;
        spec.validate(model)?;
        let product = fsc_product(model, k)?;
        let sm = to_simple(&product)?;
        let lifted = lift_spec(spec, k);
        let pobs = product.obs_vector()?;
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut qkeys = Vec::new();
        let mut qvar = vec![None; sm.model.num_states()];
        for (ps, tree) in sm.trees.iter().enumerate() {
            let Some(tree) = tree else { continue };
            for (node, &(at, _)) in tree.nodes.iter().enumerate() {
                let key = (pobs[ps], node);
                let j = *index.entry(key).or_insert_with(|| {
                    qkeys.push(key);
                    qkeys.len() - 1
                });
                qvar[at] = Some(j);
            }
        }
        for (s, cs) in sm.model.choices.iter().enumerate() {
            let ok = match cs.len() {
                1 => true,
                2 => qvar[s].is_some() && cs.iter().all(|c| c.point_transitions().is_some_and(|t| t.len() == 1)),
                _ => false,
            };
            if !ok {
                return Err(Error::Internal(format!("state {s} is not in simple form")));
            }
        }
        Ok(Self {
            model,
            k,
            spec,
            product,
            sm,
            lifted,
            qkeys,
            qvar,
            opts: CheckOptions::default(),
        })
    }

    fn qvar_of_node(&self, ps: StateId, node: usize) -> usize {
        let tree = self.sm.trees[ps].as_ref().expect("state has a tree");
        self.qvar[tree.nodes[node].0].expect("tree nodes carry a variable")
    }

    /// First-branch probabilities giving every product action equal weight.
    fn uniform_q(&self) -> Vec<f64> {
        let mut q = vec![0.5; self.qkeys.len()];
        for tree in self.sm.trees.iter().flatten() {
            for &(at, children) in &tree.nodes {
                let a = subtree_leaves(tree, children[0].1).len() as f64;
                let b = subtree_leaves(tree, children[1].1).len() as f64;
                q[self.qvar[at].unwrap()] = a / (a + b);
            }
        }
        q
    }

    fn simple_policy(&self, q: &[f64]) -> Policy {
        let table = (0..self.sm.model.num_states())
            .map(|s| {
                self.qvar[s].map(|j| {
                    let cs = &self.sm.model.choices[s];
                    [(cs[0].action, q[j]), (cs[1].action, 1.0 - q[j])]
                        .into_iter()
                        .filter(|(_, w)| *w > 0.0)
                        .collect()
                })
            })
            .collect();
        Policy::Memoryless(MemorylessPolicy {
            scope: PolicyScope::State,
            table,
        })
    }

    fn certify(&self, q: &[f64]) -> Result<CheckResult> {
        robust_value(&self.sm.model, &self.lifted, Some(&self.simple_policy(q)), &self.opts)
    }

    fn to_fsc(&self, q: &[f64]) -> Result<Fsc> {
        let table = (0..self.product.num_states())
            .map(|ps| {
                self.sm.trees[ps].as_ref().map(|tree| {
                    tree.leaf_probs(|node| q[self.qvar[tree.nodes[node].0].unwrap()])
                        .into_iter()
                        .filter(|(_, w)| *w > 0.0)
                        .collect()
                })
            })
            .collect();
        let pol = MemorylessPolicy {
            scope: PolicyScope::State,
            table,
        };
        fold_fsc(self.model, self.k, &self.product, &pol)
    }

    fn run(&self, q0: Vec<f64>, cfg: &ScpConfig) -> Result<SynthReport> {
        let t0 = Instant::now();
        cfg.validate()?;
        let maximize = self.spec.direction == Direction::AtLeast;
        let mut q_hat = q0;
        let mut current = self.certify(&q_hat)?;
        let mut delta = cfg.delta0;
        let mut log = Vec::new();
        let mut iterations = 0;
        let mut status = SynthStatus::IterationLimit;

        if current.satisfied == Some(true) {
            status = SynthStatus::Satisfied;
        } else if self.qkeys.is_empty() {
            status = SynthStatus::NoImprovement;
        } else {
            for it in 1..=cfg.max_iters {
                iterations = it;
                // A numerically failed LP counts as a rejected step.
                let checked = match self.solve_linearized(cfg, &q_hat, &current, delta, maximize) {
                    Ok(cand) => Some((self.certify(&cand)?, cand)),
                    Err(Error::Lp(e)) => {
                        log::warn!("robust scp iteration {it}: {e}");
                        None
                    }
                    Err(e) => return Err(e),
                };
                let worst = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
                let value = checked.as_ref().map_or(worst, |c| c.0.initial_value);
                let step = scp_step(value, current.initial_value, delta, cfg.gamma, maximize);
                delta = step.delta;
                if step.accept {
                    (current, q_hat) = checked.expect("accepted candidates were certified");
                }
                log.push(StepLog {
                    iteration: it,
                    value,
                    best: current.initial_value,
                    delta,
                    accepted: step.accept,
                });
                log::debug!("robust scp iteration {it}: value {value}, best {}, delta {delta}", current.initial_value);
                if current.satisfied == Some(true) {
                    status = SynthStatus::Satisfied;
                    break;
                }
                if delta < cfg.omega {
                    status = SynthStatus::NoImprovement;
                    break;
                }
            }
        }

        // The region σ ≥ ε_pol excludes deterministic controllers; try the
        // nearest one and keep it when it certifies strictly better.
        let rounded: Vec<f64> = q_hat.iter().map(|&x| if x >= 0.5 { 1.0 } else { 0.0 }).collect();
        if rounded != q_hat {
            let r = self.certify(&rounded)?;
            if scp_step(r.initial_value, current.initial_value, delta, cfg.gamma, maximize).accept {
                q_hat = rounded;
                current = r;
            }
        }
        if current.satisfied == Some(true) {
            status = SynthStatus::Satisfied;
        }

        let fsc = self.to_fsc(&q_hat)?;
        let certified = evaluate_fsc(self.model, &fsc, self.spec, &self.opts)?;
        Ok(SynthReport {
            status,
            instantiation: None,
            fsc: Some(fsc),
            certified_value: certified.initial_value,
            iterations,
            log,
            final_delta: delta,
            wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
        })
    }

    fn solve_linearized(
        &self,
        cfg: &ScpConfig,
        q_hat: &[f64],
        current: &CheckResult,
        delta: f64,
        maximize: bool,
    ) -> Result<Vec<f64>> {
        let m = &self.sm.model;
        let n = m.num_states();
        let reach = self.lifted.objective.is_reach();
        let targets = self.lifted.objective.states();
        let r_hat = &current.values;
        let dp = delta + 1.0;
        let nature = adversary(self.spec);

        let mut lp = LinearProgram::new(if maximize { Sense::Maximize } else { Sense::Minimize });
        let qv: Vec<usize> = (0..self.qkeys.len())
            .map(|j| lp.add_var(format!("q{j}"), 0.0, 1.0, 0.0))
            .collect();
        let center: Vec<(usize, f64, bool)> = qv.iter().zip(q_hat).map(|(&v, &x)| (v, x, true)).collect();
        for b in trust_region_constraints(&center, delta, cfg.eps_pol)? {
            lp.vars[b.var].lo = b.lo;
            lp.vars[b.var].hi = b.hi;
        }

        let mut alpha = vec![0.0; n];
        for &(s, w) in &m.initial {
            alpha[s] += w;
        }
        let mut rv: Vec<Option<usize>> = vec![None; n];
        for s in 0..n {
            let x = r_hat[s];
            if targets.contains(&s) || (reach && x == 0.0) || !x.is_finite() {
                continue;
            }
            let (lo, hi) = if x > 0.0 { (x / dp, x * dp) } else { (0.0, f64::INFINITY) };
            let (lo, hi) = if reach { (lo.max(0.0), hi.min(1.0)) } else { (lo, hi) };
            rv[s] = Some(lp.add_var(format!("r{s}"), lo, hi, alpha[s]));
        }
        // `r_t` as a linear term: (variable, coefficient) or a constant.
        let term = |t: StateId, coeff: f64, row: &mut Vec<(usize, f64)>, konst: &mut f64| match rv[t] {
            Some(v) => row.push((v, coeff)),
            None => *konst += coeff * r_hat[t],
        };

        for s in 0..n {
            let Some(rs) = rv[s] else { continue };
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut konst = 0.0;
            let cs = &m.choices[s];
            if let Some(j) = self.qvar[s] {
                // q·(c1 + r1) + (1 − q)·(c2 + r2)
                let (t1, t2) = (cs[0].transitions[0].0, cs[1].transitions[0].0);
                let (c1, c2) = if reach { (0.0, 0.0) } else { (cs[0].reward, cs[1].reward) };
                konst += c2;
                row.push((qv[j], c1 - c2));
                term(t2, 1.0, &mut row, &mut konst);
                for (t, sign) in [(t1, 1.0), (t2, -1.0)] {
                    match rv[t] {
                        Some(v) => {
                            let a = linearize_bilinear(0.5, 0.0, q_hat[j], r_hat[t]);
                            konst += sign * a.k;
                            row.push((qv[j], sign * a.cy));
                            row.push((v, sign * a.cz));
                        }
                        None => row.push((qv[j], sign * r_hat[t])),
                    }
                }
            } else {
                let c = &cs[0];
                if !reach {
                    konst += c.reward;
                }
                let d = match c.point_transitions() {
                    Some(pt) => pt.into_iter().map(|(_, p)| p).collect(),
                    None => greedy_distribution(&c.transitions, r_hat, nature)?,
                };
                for (&(t, _), p) in c.transitions.iter().zip(d) {
                    term(t, p, &mut row, &mut konst);
                }
            }
            // maximize: r_s − k_s ≤ expr;  minimize: r_s + k_s ≥ expr.
            let ks = lp.add_var(format!("k{s}"), 0.0, f64::INFINITY, if maximize { -cfg.tau } else { cfg.tau });
            let mut full = vec![(rs, 1.0), (ks, if maximize { -1.0 } else { 1.0 })];
            full.extend(row.into_iter().map(|(v, c)| (v, -c)));
            lp.add_constraint(full, if maximize { Relation::Le } else { Relation::Ge }, konst);
        }

        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Internal(format!("linearised program is {:?}", sol.status)));
        }
        Ok(qv.iter().map(|&v| sol.values[v].clamp(cfg.eps_pol, 1.0 - cfg.eps_pol)).collect())
    }
}
