//! Linear-programming characterisations of reachability and expected cost.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use super::{elapsed_ms, require_point, setup, CheckResult, Method};
use crate::error::{Error, Result};
use crate::models::{MemorylessPolicy, Model, Objective, Optimize, Policy, PolicyScope, StateId};
use crate::optim::{solve_lp, LinearProgram, LpStatus, Relation, Sense};

/// Optimal reachability probabilities from the primal LP.
///
/// For `Max` the LP minimises `Σ_s p_s` subject to `p_s ≥ Σ P(s,a,s')·p_{s'}`
/// for every action; summing over all states (rather than the initial state
/// only) makes the solution the least fixed point at every state.
pub fn reach_primal_lp(model: &Model, target: &BTreeSet<StateId>, optimize: Optimize) -> Result<CheckResult> {
    require_point(model)?;
    let t0 = Instant::now();
    let su = setup(model, &Objective::Reach(target.clone()), optimize, None)?;
    let n = model.num_states();
    let (sense, rel) = match optimize {
        Optimize::Max => (Sense::Minimize, Relation::Ge),
        Optimize::Min => (Sense::Maximize, Relation::Le),
    };
    let mut lp = LinearProgram::new(sense);
    for s in 0..n {
        let (lo, hi) = if su.target[s] {
            (1.0, 1.0)
        } else if su.pinned[s] {
            (0.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        lp.add_var(format!("p{s}"), lo, hi, 1.0);
    }
    for s in 0..n {
        if su.target[s] || su.pinned[s] {
            continue;
        }
        for c in &model.choices[s] {
            let mut row = vec![(s, 1.0)];
            for &(t, e) in &c.transitions {
                row.push((t, -e.lo()));
            }
            lp.add_constraint(row, rel, 0.0);
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("reachability LP is {:?}", sol.status)));
    }
    let values: Vec<f64> = sol.values.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    Ok(CheckResult {
        initial_value: model.initial_value(&values),
        values,
        satisfied: None,
        method: Method::LpPrimal,
        iterations: sol.iterations,
        wall_time_ms: elapsed_ms(t0),
        exact: true,
        scheduler: None,
    })
}

/// Optimal expected cost before reaching `goal` from the primal LP.
pub fn expected_cost_primal_lp(model: &Model, goal: &BTreeSet<StateId>, optimize: Optimize) -> Result<CheckResult> {
    require_point(model)?;
    let t0 = Instant::now();
    let su = setup(model, &Objective::ExpectedCost(goal.clone()), optimize, None)?;
    let n = model.num_states();
    let (sense, rel) = match optimize {
        Optimize::Min => (Sense::Maximize, Relation::Le),
        Optimize::Max => (Sense::Minimize, Relation::Ge),
    };
    let mut lp = LinearProgram::new(sense);
    for s in 0..n {
        let fixed = su.target[s] || su.pinned[s];
        lp.add_var(
            format!("x{s}"),
            0.0,
            if fixed { 0.0 } else { f64::INFINITY },
            if fixed { 0.0 } else { 1.0 },
        );
    }
    for s in 0..n {
        if su.target[s] || su.pinned[s] {
            continue;
        }
        for &ci in &su.allowed[s] {
            let c = &model.choices[s][ci];
            let mut row = vec![(s, 1.0)];
            for &(t, e) in &c.transitions {
                row.push((t, -e.lo()));
            }
            lp.add_constraint(row, rel, c.reward);
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("expected-cost LP is {:?}", sol.status)));
    }
    let values: Vec<f64> = (0..n)
        .map(|s| if su.pinned[s] && !su.target[s] { f64::INFINITY } else { sol.values[s].max(0.0) })
        .collect();
    Ok(CheckResult {
        initial_value: model.initial_value(&values),
        values,
        satisfied: None,
        method: Method::LpPrimal,
        iterations: sol.iterations,
        wall_time_ms: elapsed_ms(t0),
        exact: true,
        scheduler: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DualLpResult {
    #[serde(skip)]
    pub policy: Policy,
    /// Occupancy `x(s, a)` by state and action id (non-zero entries only).
    pub occupancy: Vec<(StateId, usize, f64)>,
    /// Maximal probability mass reaching the target.
    pub objective: f64,
}

/// Maximal reachability through occupancy measures, with a randomized
/// policy read off as `σ(s,a) = x(s,a) / Σ_a' x(s,a')`.
///
/// A second LP minimises total occupancy among optimal solutions, which
/// removes circulations inside end components; states never visited get
/// their first action.
pub fn dual_lp_synthesize(model: &Model, target: &BTreeSet<StateId>, beta: f64) -> Result<DualLpResult> {
    require_point(model)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(crate::error::arg(format!("threshold {beta} outside [0,1]")));
    }
    let su = setup(model, &Objective::Reach(target.clone()), Optimize::Max, None)?;
    let n = model.num_states();
    let mut alpha = vec![0.0; n];
    for &(s, p) in &model.initial {
        alpha[s] += p;
    }

    let build = |stage2: Option<f64>| -> (LinearProgram, Vec<Vec<Option<usize>>>, Vec<Option<usize>>) {
        let mut lp = LinearProgram::new(if stage2.is_some() { Sense::Minimize } else { Sense::Maximize });
        let mut x = vec![Vec::new(); n];
        let mut y = vec![None; n];
        for s in 0..n {
            if su.pinned[s] {
                x[s] = vec![None; model.choices[s].len()];
                continue;
            }
            if su.target[s] {
                y[s] = Some(lp.add_var(format!("y{s}"), 0.0, f64::INFINITY, if stage2.is_some() { 0.0 } else { 1.0 }));
                x[s] = vec![None; model.choices[s].len()];
            } else {
                x[s] = (0..model.choices[s].len())
                    .map(|c| {
                        Some(lp.add_var(format!("x{s}_{c}"), 0.0, f64::INFINITY, if stage2.is_some() { 1.0 } else { 0.0 }))
                    })
                    .collect();
            }
        }
        let mut inflow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for s in 0..n {
            for (c, ch) in model.choices[s].iter().enumerate() {
                if let Some(v) = x[s][c] {
                    for &(t, e) in &ch.transitions {
                        inflow[t].push((v, e.lo()));
                    }
                }
            }
        }
        for s in 0..n {
            if su.pinned[s] {
                continue;
            }
            let mut row: Vec<(usize, f64)> = match y[s] {
                Some(v) => vec![(v, 1.0)],
                None => x[s].iter().flatten().map(|&v| (v, 1.0)).collect(),
            };
            row.extend(inflow[s].iter().map(|&(v, p)| (v, -p)));
            lp.add_constraint(row, Relation::Eq, alpha[s]);
        }
        let mass: Vec<(usize, f64)> = y.iter().flatten().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(mass, Relation::Ge, stage2.unwrap_or(beta));
        (lp, x, y)
    };

    let (lp1, _, _) = build(None);
    let s1 = solve_lp(&lp1)?;
    match s1.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no policy reaches the target with probability at least {beta}"
            )))
        }
        LpStatus::Unbounded => return Err(Error::Internal("occupancy LP unbounded".into())),
    }
    let objective = s1.objective;
    let floor = (objective - 1e-9 * objective.abs().max(1.0)).max(beta.min(objective));
    let (lp2, x, _) = build(Some(floor));
    let s2 = solve_lp(&lp2)?;
    let sol = if s2.is_optimal() { s2 } else { s1 };

    let mut occupancy = Vec::new();
    let mut table = vec![None; n];
    for s in 0..n {
        let xs: Vec<f64> = x[s].iter().map(|v| v.map_or(0.0, |v| sol.values[v].max(0.0))).collect();
        let total: f64 = xs.iter().sum();
        for (c, &xv) in xs.iter().enumerate() {
            if xv > 0.0 {
                occupancy.push((s, model.choices[s][c].action, xv));
            }
        }
        table[s] = Some(if total > 1e-12 {
            xs.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(c, &v)| (model.choices[s][c].action, v / total))
                .collect()
        } else {
            vec![(model.choices[s][0].action, 1.0)]
        });
    }
    Ok(DualLpResult {
        policy: Policy::Memoryless(MemorylessPolicy {
            scope: PolicyScope::State,
            table,
        }),
        occupancy,
        objective,
    })
}
