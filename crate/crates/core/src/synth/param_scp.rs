//! Parameter synthesis by sequential convex programming with the model
//! checker in the loop.

use std::time::Instant;

use super::parametric::ParametricModel;
use super::{StepLog, SynthReport, SynthStatus};
use crate::checker::{check, CheckOptions, CheckResult};
use crate::error::{Error, Result};
use crate::models::{Direction, Optimize, Spec};
use crate::optim::{scp_step, solve_lp, LinearProgram, LpStatus, Relation, ScpConfig, Sense};

/// Search a parameter instantiation `v` with `M[v] ⊨ spec`.
///
/// A `≥` threshold pushes the checked value up, a `≤` threshold pushes it
/// down. Nondeterminism is resolved by `spec.optimize`. When the agent works
/// against the parameters the program constrains every action (a bound for
/// all strategies); otherwise the actions are fixed to the checker's current
/// optimal scheduler and re-selected after every accepted step.
///
/// Each iteration solves the linearised program with penalties `τ·Σk_s` and
/// a trust region on the probability variables and on every parametric
/// entry, then model checks the candidate. Only strict improvements of the
/// checked value are accepted. Returns on satisfaction, when the trust
/// radius falls below ω, or after `max_iters` iterations.
pub fn scp_param_synthesis(pm: &ParametricModel, spec: &Spec, cfg: &ScpConfig) -> Result<SynthReport> {
    let t0 = Instant::now();
    cfg.validate()?;
    let opts = CheckOptions::default();
    let evaluate = |v: &[f64]| -> Result<CheckResult> {
        let m = pm.instantiate(v, cfg.eps_graph)?;
        check(&m, spec, &opts)
    };

    let mut v_hat = pm.midpoint();
    let mut current = evaluate(&v_hat).map_err(|e| {
        Error::InvalidArgument(format!("centre of the parameter box is not a valid starting point: {e}"))
    })?;
    let maximize = spec.direction == Direction::AtLeast;
    let universal = maximize == (spec.optimize == Optimize::Min);
    let mut delta = cfg.delta0;
    let mut log = Vec::new();

    let report = |status, v: &[f64], cur: &CheckResult, iterations, log: Vec<StepLog>, delta| SynthReport {
        status,
        instantiation: Some(pm.named(v)),
        fsc: None,
        certified_value: cur.initial_value,
        iterations,
        log,
        final_delta: delta,
        wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
    };

    if current.satisfied == Some(true) {
        return Ok(report(SynthStatus::Satisfied, &v_hat, &current, 0, log, delta));
    }
    if pm.num_params() == 0 {
        return Ok(report(SynthStatus::NoImprovement, &v_hat, &current, 0, log, delta));
    }

    for it in 1..=cfg.max_iters {
        // A numerically failed LP counts as a rejected step.
        let checked = match solve_linearized(pm, spec, cfg, &v_hat, &current, delta, maximize, universal) {
            Ok(cand) => evaluate(&cand).ok().map(|c| (cand, c)),
            Err(Error::Lp(e)) => {
                log::warn!("scp iteration {it}: {e}");
                None
            }
            Err(e) => return Err(e),
        };
        let beta = checked.as_ref().map_or(
            if maximize { f64::NEG_INFINITY } else { f64::INFINITY },
            |c| c.1.initial_value,
        );
        let step = scp_step(beta, current.initial_value, delta, cfg.gamma, maximize);
        delta = step.delta;
        if step.accept {
            (v_hat, current) = checked.expect("accepted candidates were checked");
        }
        log.push(StepLog {
            iteration: it,
            value: beta,
            best: current.initial_value,
            delta,
            accepted: step.accept,
        });
        log::debug!("scp iteration {it}: value {beta}, best {}, delta {delta}", current.initial_value);
        if current.satisfied == Some(true) {
            return Ok(report(SynthStatus::Satisfied, &v_hat, &current, it, log, delta));
        }
        if delta < cfg.omega {
            return Ok(report(SynthStatus::NoImprovement, &v_hat, &current, it, log, delta));
        }
    }
    Ok(report(SynthStatus::IterationLimit, &v_hat, &current, cfg.max_iters, log, delta))
}

/// Affine expression `konst + Σ coeff·var` under construction.
#[derive(Default)]
struct Expr {
    konst: f64,
    terms: Vec<(usize, f64)>,
}

#[allow(clippy::too_many_arguments)]
fn solve_linearized(
    pm: &ParametricModel,
    spec: &Spec,
    cfg: &ScpConfig,
    v_hat: &[f64],
    current: &CheckResult,
    delta: f64,
    maximize: bool,
    universal: bool,
) -> Result<Vec<f64>> {
    let m = &pm.skeleton;
    let n = m.num_states();
    let reach = spec.objective.is_reach();
    let targets = spec.objective.states();
    let p_hat = &current.values;
    let dp = delta + 1.0;

    let mut lp = LinearProgram::new(if maximize { Sense::Maximize } else { Sense::Minimize });
    let vars: Vec<usize> = pm
        .params
        .iter()
        .map(|p| lp.add_var(p.name.clone(), p.lo, p.hi, 0.0))
        .collect();

    // Probability (or cost) variables for states whose value is not fixed.
    let mut pvar: Vec<Option<usize>> = vec![None; n];
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let alpha = {
        let mut a = vec![0.0; n];
        for &(s, w) in &m.initial {
            a[s] += w;
        }
        a
    };
    for s in 0..n {
        let x = p_hat[s];
        if targets.contains(&s) || (reach && x == 0.0) || !x.is_finite() {
            fixed[s] = Some(x);
            continue;
        }
        let (lo, hi) = if x > 0.0 { (x / dp, x * dp) } else { (0.0, f64::INFINITY) };
        let (lo, hi) = if reach { (lo.max(0.0), hi.min(1.0)) } else { (lo, hi) };
        pvar[s] = Some(lp.add_var(format!("p{s}"), lo, hi, alpha[s]));
    }

    // Linearisation of an entry around v̂: P(v̂) + ∇P(v̂)·(v − v̂).
    let entry_lin = |s: usize, c: usize, t: usize| -> (f64, Vec<f64>) {
        let poly = &pm.entries[s][c][t];
        (poly.eval(v_hat), poly.gradient(v_hat))
    };

    // Graph preservation and trust region on every parametric entry.
    for (s, cs) in pm.entries.iter().enumerate() {
        for (c, ts) in cs.iter().enumerate() {
            for (t, poly) in ts.iter().enumerate() {
                if poly.is_constant() {
                    continue;
                }
                let (p0, g) = entry_lin(s, c, t);
                let shift: f64 = g.iter().zip(v_hat).map(|(gi, vi)| gi * vi).sum();
                let row: Vec<(usize, f64)> = g
                    .iter()
                    .enumerate()
                    .filter(|(_, &gi)| gi != 0.0)
                    .map(|(i, &gi)| (vars[i], gi))
                    .collect();
                if row.is_empty() {
                    continue;
                }
                // p0 + g·(v − v̂) ≥ max(ε_graph, p0/δ')  and  ≤ p0·δ'.
                let lo = cfg.eps_graph.max(p0 / dp);
                lp.add_constraint(row.clone(), Relation::Ge, lo - p0 + shift);
                lp.add_constraint(row, Relation::Le, p0 * dp - p0 + shift);
            }
        }
    }

    for s in 0..n {
        let Some(ps) = pvar[s] else { continue };
        let choices: Vec<usize> = if universal {
            (0..m.choices[s].len()).collect()
        } else {
            vec![current.scheduler.as_ref().map_or(0, |sc| sc[s])]
        };
        let k = lp.add_var(format!("k{s}"), 0.0, f64::INFINITY, if maximize { -cfg.tau } else { cfg.tau });
        'rows: for c in choices {
            let ch = &m.choices[s][c];
            let mut e = Expr {
                konst: if reach { 0.0 } else { ch.reward },
                terms: Vec::new(),
            };
            for (t, &(succ, _)) in ch.transitions.iter().enumerate() {
                let (p0, g) = entry_lin(s, c, t);
                let z_hat = p_hat[succ];
                if !z_hat.is_finite() {
                    continue 'rows;
                }
                // P(v)·p' ≈ P(v̂)·p' + p̂'·∇P·(v − v̂)
                match (fixed[succ], pvar[succ]) {
                    (Some(x), _) => e.konst += p0 * x,
                    (None, Some(pv)) => e.terms.push((pv, p0)),
                    (None, None) => unreachable!("every state is fixed or has a variable"),
                }
                for (i, gi) in g.iter().enumerate() {
                    if *gi != 0.0 {
                        e.terms.push((vars[i], z_hat * gi));
                        e.konst -= z_hat * gi * v_hat[i];
                    }
                }
            }
            // maximize: p_s − k_s ≤ E;  minimize: p_s + k_s ≥ E.
            let mut row = vec![(ps, 1.0), (k, if maximize { -1.0 } else { 1.0 })];
            row.extend(e.terms.iter().map(|&(v, c)| (v, -c)));
            let rel = if maximize { Relation::Le } else { Relation::Ge };
            lp.add_constraint(row, rel, e.konst);
        }
    }

    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("linearised program is {:?}", sol.status)));
    }
    Ok(vars
        .iter()
        .zip(&pm.params)
        .map(|(&i, p)| sol.values[i].clamp(p.lo, p.hi))
        .collect())
}
