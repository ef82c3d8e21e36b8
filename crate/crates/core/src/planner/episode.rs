use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::active::active_perception_strategy;
use super::grid::GridInstance;
use super::perception::{bayes_update, jsd, map_labeling, sense, Reading};
use super::product::{dead_states, synthesize_task_policy_at, TaskPolicy};
use super::risk::statistical_risk;
use super::{PlannerConfig, Variant};
use crate::error::{arg, Error, Result};
use crate::models::{BeliefLabeling, Dfa, Model, ObservationModel, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub state: StateId,
    pub dfa_state: usize,
    pub readings: usize,
    /// FNV-1a hash of the belief after this step's update.
    pub belief_hash: u64,
    /// JSD (bits) between the belief now and the belief at the last plan.
    pub divergence: f64,
    pub replanned: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_value: Option<f64>,
    /// Action taken; `None` on the final record.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    /// Whether the action belongs to an active-perception detour.
    pub perceiving: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
    pub outcome: Outcome,
    pub steps: usize,
    pub plans: usize,
}

impl EpisodeTrace {
    /// One JSON object per line and time step.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// One planning problem: the agent knows `mdp`, `dfa`, `obs` and `prior`;
/// `truth` is only used to simulate readings and automaton progress.
#[derive(Clone, Copy)]
pub struct PlanningProblem<'a> {
    pub mdp: &'a Model,
    pub dfa: &'a Dfa,
    pub truth: &'a [BTreeSet<String>],
    pub obs: &'a dyn ObservationModel,
    pub prior: &'a BeliefLabeling,
}

impl GridInstance {
    pub fn problem(&self) -> PlanningProblem<'_> {
        PlanningProblem {
            mdp: &self.mdp,
            dfa: &self.dfa,
            truth: &self.truth,
            obs: &self.sensor,
            prior: &self.prior,
        }
    }
}

fn belief_hash(b: &BeliefLabeling) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in b.p.iter().flatten() {
        for byte in x.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    h
}

fn sample_successor<R: Rng>(mdp: &Model, s: StateId, a: usize, rng: &mut R) -> StateId {
    let c = mdp.choice_index(s, a).expect("action enabled");
    let tr = &mdp.choices[s][c].transitions;
    let mut u = rng.gen::<f64>();
    for &(t, e) in tr {
        u -= e.lo();
        if u < 0.0 {
            return t;
        }
    }
    tr.last().map_or(s, |&(t, _)| t)
}

/// Run the perceive–update–replan loop once.
///
/// Per step: sense and update the belief (unless `NoPerception`), replan on
/// the MAP labeling when there is no plan, under `AlwaysReplan`, when the
/// divergence from the belief at the last plan exceeds γ_d, or when the
/// current product state is outside the plan; under `Active`, assess the
/// risk of each new plan and take an active-perception detour when it
/// exceeds γ_r. The automaton advances on the true labels.
pub fn run_episode(
    mdp: &Model,
    dfa: &Dfa,
    truth: &[BTreeSet<String>],
    obs: &dyn ObservationModel,
    prior: &BeliefLabeling,
    cfg: &PlannerConfig,
) -> Result<EpisodeTrace> {
    cfg.validate()?;
    prior.validate()?;
    let n = mdp.num_states();
    if truth.len() != n || prior.num_states() != n {
        return Err(arg(format!(
            "{} true labels and {} belief rows for {n} states",
            truth.len(),
            prior.num_states()
        )));
    }
    let mut s = mdp
        .initial_state()
        .ok_or_else(|| arg("planning needs a single initial state"))?;
    let dead = dead_states(dfa);
    let mut q = dfa.step_labels(dfa.init, &truth[s]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut belief = prior.clone();
    let mut plan_belief = prior.clone();
    let mut policy: Option<TaskPolicy> = None;
    let mut detour: VecDeque<usize> = VecDeque::new();
    let mut detour_done = false;
    let mut records = Vec::new();
    let mut plans = 0;

    for t in 0.. {
        let readings: Vec<Reading> = if cfg.variant == Variant::NoPerception {
            Vec::new()
        } else {
            sense(&belief, obs, s, truth, &mut rng)
        };
        if !readings.is_empty() {
            belief = bayes_update(&belief, obs, s, &readings)?;
        }
        let divergence = jsd(&plan_belief, &belief)?;
        // A plan that cannot succeed under its own estimate is only kept
        // when no new evidence can arrive.
        let perceiving = cfg.variant != Variant::NoPerception;
        let stale = policy.as_ref().map_or(true, |p| {
            p.product.index_of(s, q).is_none() || (perceiving && p.value <= 0.0)
        });
        // A detour runs to completion and is followed by one replan on
        // what it revealed, without a fresh risk assessment.
        let replan = detour.is_empty()
            && (stale
                || detour_done
                || match cfg.variant {
                    Variant::NoPerception => false,
                    Variant::AlwaysReplan => true,
                    Variant::Divergence | Variant::Active => divergence > cfg.gamma_d,
                });
        let mut risk = None;
        if replan {
            let labels = map_labeling(&belief);
            let p = synthesize_task_policy_at(mdp, dfa, &labels, s, q)?;
            plans += 1;
            plan_belief = belief.clone();
            if cfg.variant == Variant::Active && !detour_done && !dfa.is_accepting(q) {
                let seed = cfg.seed ^ (t as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                let r = statistical_risk(mdp, dfa, &p, &belief, cfg.risk_samples, seed)?;
                if r.risk > cfg.gamma_r {
                    let cur = p.product.states[p.product.index_of(s, q).expect("root")];
                    detour = active_perception_strategy(mdp, dfa, cur, &belief, obs, cfg)?.into();
                }
                risk = Some(r.risk);
            }
            policy = Some(p);
        }
        let p = policy.as_ref().expect("planned");
        let mut rec = StepRecord {
            t,
            state: s,
            dfa_state: q,
            readings: readings.len(),
            belief_hash: belief_hash(&belief),
            divergence,
            replanned: replan,
            risk,
            plan_value: replan.then_some(p.value),
            action: None,
            perceiving: false,
        };
        let outcome = if dfa.is_accepting(q) {
            Some(Outcome::Success)
        } else if dead[q] {
            Some(Outcome::Failure)
        } else if t >= cfg.max_steps {
            Some(Outcome::Timeout)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            records.push(rec);
            return Ok(EpisodeTrace {
                records,
                outcome,
                steps: t,
                plans,
            });
        }
        let detouring = !detour.is_empty();
        let a = match detour.pop_front().filter(|&a| mdp.choice_index(s, a).is_some()) {
            Some(a) => {
                rec.perceiving = true;
                a
            }
            None => {
                detour.clear();
                p.action_at(s, q).unwrap_or(mdp.choices[s][0].action)
            }
        };
        detour_done = detouring && detour.is_empty();
        rec.action = Some(mdp.action_names[a].clone());
        records.push(rec);
        s = sample_successor(mdp, s, a, &mut rng);
        q = dfa.step_labels(q, &truth[s]);
    }
    Err(Error::Internal("episode loop exited".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub variant: Variant,
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_steps: f64,
    pub mean_plans: f64,
}

impl EnsembleSummary {
    pub const CSV_HEADER: &'static str = "variant,episodes,success_rate,mean_steps,mean_plans";

    pub fn from_traces(variant: Variant, traces: &[EpisodeTrace]) -> Self {
        let k = traces.len().max(1) as f64;
        Self {
            variant,
            episodes: traces.len(),
            success_rate: traces.iter().filter(|t| t.outcome == Outcome::Success).count() as f64 / k,
            mean_steps: traces.iter().map(|t| t.steps as f64).sum::<f64>() / k,
            mean_plans: traces.iter().map(|t| t.plans as f64).sum::<f64>() / k,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.variant.as_str(),
            self.episodes,
            self.success_rate,
            self.mean_steps,
            self.mean_plans
        )
    }

    /// Header plus one row per summary.
    pub fn to_csv(rows: &[EnsembleSummary]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in rows {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }
}

/// Run `episodes` episodes; episode `i` solves `problems[i % len]` with seed
/// `cfg.seed + i`. Episodes run in parallel, each deterministically.
pub fn run_ensemble(
    problems: &[PlanningProblem<'_>],
    episodes: usize,
    cfg: &PlannerConfig,
) -> Result<(Vec<EpisodeTrace>, EnsembleSummary)> {
    if problems.is_empty() {
        return Err(arg("ensemble needs at least one problem"));
    }
    let traces: Vec<EpisodeTrace> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let pr = problems[i % problems.len()];
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(i as u64);
            run_episode(pr.mdp, pr.dfa, pr.truth, pr.obs, pr.prior, &c)
        })
        .collect::<Result<_>>()?;
    let summary = EnsembleSummary::from_traces(cfg.variant, &traces);
    Ok((traces, summary))
}
