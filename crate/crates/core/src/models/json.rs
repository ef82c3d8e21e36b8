use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::model::{Choice, Model, ModelKind, ProbEntry, StateId};
use crate::error::{invalid, Error, Result};

const DEFAULT_ACTION: &str = "tau";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    #[serde(rename = "type")]
    kind: String,
    states: usize,
    initial: InitialJson,
    #[serde(default)]
    actions: Vec<String>,
    rows: Vec<RowJson>,
    /// Observation names in id order; optional, derived from `obs` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    observations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obs: Option<BTreeMap<String, ObsJson>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    labels: BTreeMap<String, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    rewards: Vec<RewardJson>,
    /// Parameter declarations of a parametric model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parameters: Option<Vec<ParamJson>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ParamJson {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialJson {
    State(usize),
    Dist(Vec<InitEntry>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitEntry {
    s: usize,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowJson {
    s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<String>,
    to: Vec<EntryJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    /// Polynomial entry: monomial (`"1"`, `"v"`, `"v^2*w"`) to coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    poly: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ObsJson {
    Name(String),
    Dist(BTreeMap<String, f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardJson {
    s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<String>,
    r: f64,
}

fn state_key(key: &str, n: usize, what: &str) -> Result<usize> {
    let s: usize = key
        .parse()
        .map_err(|_| invalid(format!("{what}: `{key}` is not a state index")))?;
    if s >= n {
        return Err(invalid(format!("{what}: state {s} out of range")));
    }
    Ok(s)
}

/// Parse and validate a model in the JSON exchange format.
pub fn parse_model(text: &str) -> Result<Model> {
    let raw = parse_raw(text)?;
    if !raw.params.is_empty() || !raw.polys.is_empty() {
        return Err(invalid("model declares parameters; load it as a parametric model"));
    }
    raw.model.validate()?;
    Ok(raw.model)
}

/// Unvalidated model together with its parameter declarations. Polynomial
/// entries are left as `Point(NaN)` placeholders and listed in `polys` as
/// `((state, choice index, transition index), monomials)`.
pub(crate) struct RawModel {
    pub model: Model,
    pub params: Vec<ParamJson>,
    pub polys: Vec<((StateId, usize, usize), BTreeMap<String, f64>)>,
}

pub(crate) fn parse_raw(text: &str) -> Result<RawModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: ModelJson = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    from_json(raw)
}

fn from_json(raw: ModelJson) -> Result<RawModel> {
    let kind = ModelKind::parse(&raw.kind)
        .ok_or_else(|| invalid(format!("unknown model type `{}`", raw.kind)))?;
    let n = raw.states;
    let mut action_names = raw.actions;
    let mut action_id = |name: &str| match action_names.iter().position(|a| a == name) {
        Some(i) => i,
        None => {
            action_names.push(name.to_string());
            action_names.len() - 1
        }
    };

    let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); n];
    let mut polys = Vec::new();
    for (i, row) in raw.rows.into_iter().enumerate() {
        if row.s >= n {
            return Err(invalid(format!("rows[{i}]: state {} out of range", row.s)));
        }
        let aname = row.a.as_deref().unwrap_or(DEFAULT_ACTION);
        let action = action_id(aname);
        let mut transitions = Vec::with_capacity(row.to.len());
        for (j, e) in row.to.into_iter().enumerate() {
            let entry = match (e.p, e.lo, e.hi, e.poly) {
                (Some(p), None, None, None) => ProbEntry::Point(p),
                (None, Some(lo), Some(hi), None) => ProbEntry::Interval { lo, hi },
                (None, None, None, Some(poly)) => {
                    let c = choices[row.s].len();
                    polys.push(((row.s, c, j), poly));
                    ProbEntry::Point(f64::NAN)
                }
                _ => {
                    return Err(invalid(format!(
                        "rows[{i}].to[{j}]: give exactly one of `p`, `lo`/`hi` or `poly`"
                    )))
                }
            };
            transitions.push((e.s, entry));
        }
        if choices[row.s].iter().any(|c| c.action == action) {
            return Err(invalid(format!(
                "rows[{i}]: state {}, action `{aname}` defined twice",
                row.s
            )));
        }
        choices[row.s].push(Choice {
            action,
            transitions,
            reward: 0.0,
        });
    }

    for (i, r) in raw.rewards.iter().enumerate() {
        if r.s >= n {
            return Err(invalid(format!("rewards[{i}]: state {} out of range", r.s)));
        }
        let aname = r.a.as_deref().unwrap_or(DEFAULT_ACTION);
        let a = action_names.iter().position(|x| x == aname);
        let c = a
            .and_then(|a| choices[r.s].iter_mut().find(|c| c.action == a))
            .ok_or_else(|| {
                invalid(format!("rewards[{i}]: state {} has no action `{aname}`", r.s))
            })?;
        c.reward = r.r;
    }

    let mut obs_names = raw.observations.unwrap_or_default();
    let observations = match raw.obs {
        None => None,
        Some(map) => {
            let mut table: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
            let mut keyed: Vec<(usize, ObsJson)> = Vec::with_capacity(map.len());
            for (k, v) in map {
                keyed.push((state_key(&k, n, "obs")?, v));
            }
            keyed.sort_by_key(|(s, _)| *s);
            let mut obs_id = |name: &str| match obs_names.iter().position(|a| a == name) {
                Some(i) => i,
                None => {
                    obs_names.push(name.to_string());
                    obs_names.len() - 1
                }
            };
            for (s, v) in keyed {
                table[s] = Some(match v {
                    ObsJson::Name(z) => vec![(obs_id(&z), 1.0)],
                    ObsJson::Dist(d) => d.iter().map(|(z, &p)| (obs_id(z), p)).collect(),
                });
            }
            Some(
                table
                    .into_iter()
                    .enumerate()
                    .map(|(s, o)| o.ok_or_else(|| invalid(format!("obs: state {s} missing"))))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };

    let mut labels = vec![BTreeSet::new(); n];
    for (k, props) in raw.labels {
        labels[state_key(&k, n, "labels")?] = props;
    }

    let initial = match raw.initial {
        InitialJson::State(s) => vec![(s, 1.0)],
        InitialJson::Dist(d) => d.into_iter().map(|e| (e.s, e.p)).collect(),
    };

    let model = Model {
        kind,
        initial,
        action_names,
        choices,
        obs_names,
        observations,
        labels,
    };
    Ok(RawModel {
        model,
        params: raw.parameters.unwrap_or_default(),
        polys,
    })
}

/// Serialize a model to the JSON exchange format (pretty-printed, full
/// floating-point precision).
pub fn model_to_json(m: &Model) -> String {
    to_string(&to_raw(m))
}

fn to_string(raw: &ModelJson) -> String {
    serde_json::to_string_pretty(raw).expect("model serialization cannot fail")
}

/// Serialize a parametric model: `polys` replace the corresponding entries.
pub(crate) fn parametric_to_json(
    m: &Model,
    params: &[ParamJson],
    polys: &[((StateId, usize, usize), BTreeMap<String, f64>)],
) -> String {
    let mut raw = to_raw(m);
    // Rows are emitted state by state, choice by choice.
    let mut offsets = Vec::with_capacity(m.num_states());
    let mut acc = 0;
    for cs in &m.choices {
        offsets.push(acc);
        acc += cs.len();
    }
    for ((s, c, t), poly) in polys {
        let e = &mut raw.rows[offsets[*s] + c].to[*t];
        e.p = None;
        e.poly = Some(poly.clone());
    }
    raw.parameters = Some(params.to_vec());
    to_string(&raw)
}

fn to_raw(m: &Model) -> ModelJson {
    let rows = m
        .choices
        .iter()
        .enumerate()
        .flat_map(|(s, cs)| {
            cs.iter().map(move |c| RowJson {
                s,
                a: Some(m.action_names[c.action].clone()),
                to: c
                    .transitions
                    .iter()
                    .map(|&(t, e)| match e {
                        ProbEntry::Point(p) => EntryJson {
                            s: t,
                            p: Some(p),
                            lo: None,
                            hi: None,
                            poly: None,
                        },
                        ProbEntry::Interval { lo, hi } => EntryJson {
                            s: t,
                            p: None,
                            lo: Some(lo),
                            hi: Some(hi),
                            poly: None,
                        },
                    })
                    .collect(),
            })
        })
        .collect();
    let rewards = m
        .choices
        .iter()
        .enumerate()
        .flat_map(|(s, cs)| {
            cs.iter().filter(|c| c.reward != 0.0).map(move |c| RewardJson {
                s,
                a: Some(m.action_names[c.action].clone()),
                r: c.reward,
            })
        })
        .collect();
    let obs = m.observations.as_ref().map(|o| {
        o.iter()
            .enumerate()
            .map(|(s, d)| {
                let v = match d.as_slice() {
                    [(z, p)] if *p == 1.0 => ObsJson::Name(m.obs_names[*z].clone()),
                    _ => ObsJson::Dist(
                        d.iter()
                            .map(|&(z, p)| (m.obs_names[z].clone(), p))
                            .collect(),
                    ),
                };
                (s.to_string(), v)
            })
            .collect()
    });
    let initial = match m.initial.as_slice() {
        [(s, p)] if *p == 1.0 => InitialJson::State(*s),
        d => InitialJson::Dist(d.iter().map(|&(s, p)| InitEntry { s, p }).collect()),
    };
    let raw = ModelJson {
        kind: m.kind.as_str().to_string(),
        states: m.num_states(),
        initial,
        actions: m.action_names.clone(),
        rows,
        observations: m.observations.as_ref().map(|_| m.obs_names.clone()),
        obs,
        labels: m
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(s, l)| (s.to_string(), l.clone()))
            .collect(),
        rewards,
        parameters: None,
    };
    raw
}
