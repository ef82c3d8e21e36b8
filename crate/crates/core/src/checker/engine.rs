//! Shared Bellman engine for nominal and robust value iteration.
//!
//! Values are computed by Gauss–Seidel iteration from below. At desk scale the
//! iterate is then polished: the greedy policy (and nature's greedy
//! resolution of intervals) is evaluated exactly by a linear solve and kept
//! when it is a fixed point of the Bellman operator.

use crate::error::{Error, Result};
use crate::models::{Choice, Model, Optimize, ProbEntry};

use super::linear::solve_chain;
use super::CheckOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Goal {
    Reach,
    Cost,
}

pub(crate) struct Problem<'a> {
    pub model: &'a Model,
    pub goal: Goal,
    /// Target (reach) or goal (cost) states.
    pub target: Vec<bool>,
    /// States whose value is known to be zero (reach) or that are excluded
    /// with infinite value (cost).
    pub pinned: Vec<bool>,
    pub agent: Optimize,
    pub nature: Optimize,
    /// Choice indices available per state.
    pub allowed: Vec<Vec<usize>>,
    /// Randomized policy as `(choice index, weight)` per state.
    pub policy: Option<Vec<Vec<(usize, f64)>>>,
}

pub(crate) struct Solution {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Greedy choice per state (first allowed choice where irrelevant).
    pub scheduler: Vec<usize>,
    pub exact: bool,
}

const POLISH_MAX_STATES: usize = 600;

/// Interval resolution minimising (or maximising) `Σ P·v`: start from the
/// lower bounds and hand the remaining mass to the best successors first.
/// Probabilities are returned in row order.
pub fn greedy_distribution(
    entries: &[(usize, ProbEntry)],
    values: &[f64],
    sense: Optimize,
) -> Result<Vec<f64>> {
    let lo: f64 = entries.iter().map(|(_, e)| e.lo()).sum();
    let hi: f64 = entries.iter().map(|(_, e)| e.hi()).sum();
    if lo > 1.0 + crate::PROB_TOL || hi < 1.0 - crate::PROB_TOL {
        return Err(Error::Infeasible(format!(
            "interval budget admits no distribution (Σlo = {lo}, Σhi = {hi})"
        )));
    }
    let mut p: Vec<f64> = entries.iter().map(|(_, e)| e.lo()).collect();
    let mut budget = 1.0 - lo;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (values[entries[i].0], values[entries[j].0]);
        let o = match sense {
            Optimize::Min => a.total_cmp(&b),
            Optimize::Max => b.total_cmp(&a),
        };
        o.then(i.cmp(&j))
    });
    for i in order {
        if budget <= 0.0 {
            break;
        }
        let add = (entries[i].1.hi() - entries[i].1.lo()).min(budget);
        p[i] += add;
        budget -= add;
    }
    Ok(p)
}

fn row_distribution(c: &Choice, v: &[f64], nature: Optimize) -> Result<Vec<f64>> {
    match c.point_transitions() {
        Some(pt) => Ok(pt.into_iter().map(|(_, p)| p).collect()),
        None => greedy_distribution(&c.transitions, v, nature),
    }
}

fn row_value(c: &Choice, v: &[f64], nature: Optimize) -> Result<f64> {
    if c.is_point() {
        return Ok(c
            .transitions
            .iter()
            .map(|&(t, e)| e.lo() * v[t])
            .sum());
    }
    let d = greedy_distribution(&c.transitions, v, nature)?;
    Ok(c.transitions.iter().zip(&d).map(|(&(t, _), p)| p * v[t]).sum())
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.model.num_states()
    }

    /// Value fixed by the problem structure, if any.
    fn fixed_value(&self, s: usize) -> Option<f64> {
        match self.goal {
            Goal::Reach if self.target[s] => Some(1.0),
            Goal::Reach if self.pinned[s] => Some(0.0),
            Goal::Cost if self.target[s] => Some(0.0),
            Goal::Cost if self.pinned[s] => Some(f64::INFINITY),
            _ => None,
        }
    }

    fn q(&self, s: usize, c: usize, v: &[f64]) -> Result<f64> {
        let ch = &self.model.choices[s][c];
        let base = row_value(ch, v, self.nature)?;
        Ok(match self.goal {
            Goal::Reach => base,
            Goal::Cost => ch.reward + base,
        })
    }

    fn better(&self, a: f64, b: f64) -> bool {
        match self.agent {
            Optimize::Max => a > b,
            Optimize::Min => a < b,
        }
    }

    fn bellman(&self, s: usize, v: &[f64]) -> Result<(f64, usize)> {
        if let Some(x) = self.fixed_value(s) {
            return Ok((x, self.allowed[s].first().copied().unwrap_or(0)));
        }
        if let Some(pol) = &self.policy {
            let mut acc = 0.0;
            for &(c, w) in &pol[s] {
                acc += w * self.q(s, c, v)?;
            }
            return Ok((acc, pol[s].first().map_or(0, |x| x.0)));
        }
        let mut best: Option<(f64, usize)> = None;
        for &c in &self.allowed[s] {
            let q = self.q(s, c, v)?;
            if best.map_or(true, |(b, _)| self.better(q, b)) {
                best = Some((q, c));
            }
        }
        best.ok_or_else(|| Error::Internal(format!("state {s} has no usable action")))
    }

    fn initial_values(&self) -> Vec<f64> {
        (0..self.n())
            .map(|s| self.fixed_value(s).unwrap_or(0.0))
            .collect()
    }

    /// Scheduler making progress towards the target among optimal actions
    /// (maximal reachability), or the plain greedy choice otherwise.
    fn extract(&self, v: &[f64]) -> Result<Vec<usize>> {
        let n = self.n();
        let mut sched = vec![usize::MAX; n];
        let mut best = vec![0.0; n];
        for s in 0..n {
            let (b, c) = self.bellman(s, v)?;
            best[s] = b;
            sched[s] = c;
        }
        if self.goal != Goal::Reach || self.agent != Optimize::Max || self.policy.is_some() {
            return Ok(sched);
        }
        let mut attr = self.target.clone();
        let tol = 1e-8;
        loop {
            let mut changed = false;
            for s in 0..n {
                if attr[s] || self.pinned[s] {
                    continue;
                }
                for &c in &self.allowed[s] {
                    let ch = &self.model.choices[s][c];
                    if self.q(s, c, v)? >= best[s] - tol && ch.successors().any(|t| attr[t]) {
                        sched[s] = c;
                        attr[s] = true;
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                return Ok(sched);
            }
        }
    }

    /// Exact values of a fixed agent scheduler and nature resolution at `v`.
    fn evaluate(&self, sched: &[usize], v: &[f64]) -> Result<Option<Vec<f64>>> {
        let n = self.n();
        let mut rows = vec![Vec::new(); n];
        let mut rewards = vec![0.0; n];
        let mut fixed = vec![None; n];
        for s in 0..n {
            if let Some(x) = self.fixed_value(s) {
                fixed[s] = Some(x);
                continue;
            }
            let mix: Vec<(usize, f64)> = match &self.policy {
                Some(p) => p[s].clone(),
                None => vec![(sched[s], 1.0)],
            };
            for (c, w) in mix {
                let ch = &self.model.choices[s][c];
                let d = row_distribution(ch, v, self.nature)?;
                for (&(t, _), p) in ch.transitions.iter().zip(d) {
                    rows[s].push((t, w * p));
                }
                if self.goal == Goal::Cost {
                    rewards[s] += w * ch.reward;
                }
            }
        }
        if fixed.iter().any(|f| f.is_some_and(|x: f64| x.is_infinite())) {
            // Excluded states are never entered by allowed actions.
            for f in fixed.iter_mut() {
                if f.is_some_and(|x: f64| x.is_infinite()) {
                    *f = Some(0.0);
                }
            }
            let mut out = solve_chain(&rows, &rewards, &fixed);
            if let Some(o) = out.as_mut() {
                for s in 0..n {
                    if self.pinned[s] && !self.target[s] {
                        o[s] = f64::INFINITY;
                    }
                }
            }
            return Ok(out);
        }
        Ok(solve_chain(&rows, &rewards, &fixed))
    }

    fn residual(&self, v: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in 0..self.n() {
            if self.fixed_value(s).is_some() {
                continue;
            }
            let (b, _) = self.bellman(s, v)?;
            worst = worst.max((b - v[s]).abs() / v[s].abs().max(1.0));
        }
        Ok(worst)
    }

    fn polish(&self, v: &[f64]) -> Result<Option<(Vec<f64>, Vec<usize>)>> {
        if self.n() > POLISH_MAX_STATES {
            return Ok(None);
        }
        let mut sched = self.extract(v)?;
        let mut cur = v.to_vec();
        for _ in 0..30 {
            let Some(w) = self.evaluate(&sched, &cur)? else {
                return Ok(None);
            };
            if self.residual(&w)? <= 1e-11 {
                return Ok(Some((w, sched)));
            }
            // Improve the agent only where strictly better.
            let mut changed = false;
            if self.policy.is_none() {
                for s in 0..self.n() {
                    if self.fixed_value(s).is_some() {
                        continue;
                    }
                    let cur_q = self.q(s, sched[s], &w)?;
                    let (b, c) = self.bellman(s, &w)?;
                    if self.better(b, cur_q) && (b - cur_q).abs() > 1e-12 * b.abs().max(1.0) {
                        sched[s] = c;
                        changed = true;
                    }
                }
            }
            let moved = w
                .iter()
                .zip(&cur)
                .any(|(a, b)| (a - b).abs() > 1e-14 * a.abs().max(1.0));
            if !changed && !moved {
                return Ok(None);
            }
            cur = w;
        }
        Ok(None)
    }

    pub fn solve(&self, opts: &CheckOptions) -> Result<Solution> {
        let n = self.n();
        let mut v = self.initial_values();
        let mut iterations = 0;
        let mut polished = None;
        loop {
            if iterations >= opts.max_iters {
                match self.polish(&v)? {
                    Some(p) => {
                        polished = Some(p);
                        break;
                    }
                    None => return Err(Error::NonConvergence(iterations)),
                }
            }
            iterations += 1;
            let mut delta: f64 = 0.0;
            for s in 0..n {
                if self.fixed_value(s).is_some() {
                    continue;
                }
                let (x, _) = self.bellman(s, &v)?;
                delta = delta.max((x - v[s]).abs());
                v[s] = x;
            }
            if delta < opts.tolerance {
                break;
            }
            // Slowly mixing chains (near-deterministic policies): try to jump
            // to the exact fixed point now and then.
            if iterations >= 1024 && iterations.is_power_of_two() {
                if let Some(p) = self.polish(&v)? {
                    polished = Some(p);
                    break;
                }
            }
        }
        let polished = match polished {
            Some(p) => Some(p),
            None => self.polish(&v)?,
        };
        let (values, scheduler, exact) = match polished {
            Some((w, sched)) => (w, sched, true),
            None => {
                let sched = self.extract(&v)?;
                (v, sched, false)
            }
        };
        let values = match self.goal {
            Goal::Reach => values.into_iter().map(|x| x.clamp(0.0, 1.0)).collect(),
            Goal::Cost => values.into_iter().map(|x| if x.is_finite() { x.max(0.0) } else { x }).collect(),
        };
        Ok(Solution {
            values,
            iterations,
            scheduler,
            exact,
        })
    }
}
