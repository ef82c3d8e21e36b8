//! Parametric models: transition probabilities given by polynomials over a
//! box of real parameters.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{parametric_to_json, parse_raw, Model, ParamJson, ProbEntry, StateId};

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Polynomial `Σ c·Π v_i^{e_i}`; exponents are indexed like the parameter list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    pub fn constant(c: f64, nparams: usize) -> Self {
        Self {
            terms: vec![(c, vec![0; nparams])],
        }
    }

    /// `c + Σ d_i·v_i`.
    pub fn affine(c: f64, coeffs: &[f64]) -> Self {
        let n = coeffs.len();
        let mut terms = vec![(c, vec![0; n])];
        for (i, &d) in coeffs.iter().enumerate() {
            if d != 0.0 {
                let mut e = vec![0; n];
                e[i] = 1;
                terms.push((d, e));
            }
        }
        Self { terms }.normalized()
    }

    /// Merge equal monomials and drop zero coefficients.
    pub fn normalized(self) -> Self {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, e) in self.terms {
            *acc.entry(e).or_default() += c;
        }
        Self {
            terms: acc.into_iter().filter(|(_, c)| *c != 0.0).map(|(e, c)| (c, e)).collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        Poly {
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        }
        .normalized()
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(v).map(|(&k, &x)| x.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Partial derivatives at `v`.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; v.len()];
        for (c, e) in &self.terms {
            for i in 0..v.len() {
                if e[i] == 0 {
                    continue;
                }
                let mut t = c * e[i] as f64;
                for (j, (&k, &x)) in e.iter().zip(v).enumerate() {
                    let k = if j == i { k - 1 } else { k };
                    t *= x.powi(k as i32);
                }
                g[i] += t;
            }
        }
        g
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, e)| e.iter().all(|&k| k == 0))
    }

    /// Degree at most one.
    pub fn is_affine(&self) -> bool {
        self.terms.iter().all(|(_, e)| e.iter().sum::<u32>() <= 1)
    }

    /// Parse `{"1": 0.5, "v": -1, "v^2*w": 3}` against parameter names.
    pub fn from_monomials(map: &BTreeMap<String, f64>, names: &[String]) -> Result<Self> {
        let mut terms = Vec::with_capacity(map.len());
        for (key, &c) in map {
            if !c.is_finite() {
                return Err(invalid(format!("coefficient of `{key}` is not finite")));
            }
            let mut e = vec![0u32; names.len()];
            let key = key.trim();
            if key != "1" {
                for factor in key.split('*') {
                    let (name, pow) = match factor.split_once('^') {
                        Some((n, p)) => (
                            n.trim(),
                            p.trim()
                                .parse::<u32>()
                                .map_err(|_| invalid(format!("bad exponent in monomial `{key}`")))?,
                        ),
                        None => (factor.trim(), 1),
                    };
                    let i = names
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| invalid(format!("unknown parameter `{name}` in monomial `{key}`")))?;
                    e[i] += pow;
                }
            }
            terms.push((c, e));
        }
        Ok(Self { terms }.normalized())
    }

    pub fn to_monomials(&self, names: &[String]) -> BTreeMap<String, f64> {
        self.terms
            .iter()
            .map(|(c, e)| {
                let parts: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| if k == 1 { names[i].clone() } else { format!("{}^{k}", names[i]) })
                    .collect();
                let key = if parts.is_empty() { "1".to_string() } else { parts.join("*") };
                (key, *c)
            })
            .collect()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.terms.first().map_or(0, |t| t.1.len()))
            .map(|i| format!("x{i}"))
            .collect();
        let parts: Vec<String> = self
            .to_monomials(&names)
            .into_iter()
            .map(|(k, c)| if k == "1" { format!("{c}") } else { format!("{c}*{k}") })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// A model whose transition probabilities are polynomials in the parameters.
///
/// `skeleton` fixes states, actions, observations, labels and rewards; its
/// probability entries are placeholders and are replaced by `entries` on
/// instantiation. Interval entries are not allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricModel {
    pub skeleton: Model,
    pub params: Vec<Parameter>,
    /// `entries[s][c][t]` is the probability of the `t`-th transition of the
    /// `c`-th choice of state `s`.
    pub entries: Vec<Vec<Vec<Poly>>>,
}

impl ParametricModel {
    /// Wrap a point-probability model with constant entries.
    pub fn from_model(model: &Model) -> Result<Self> {
        if model.is_uncertain() {
            return Err(Error::Unsupported("interval entries in a parametric model".into()));
        }
        let entries = model
            .choices
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|c| c.transitions.iter().map(|&(_, e)| Poly::constant(e.lo(), 0)).collect())
                    .collect()
            })
            .collect();
        Ok(Self {
            skeleton: model.clone(),
            params: Vec::new(),
            entries,
        })
    }

    /// Model with the given parameters and `entries[(s, c, t)]` replaced.
    pub fn new(skeleton: Model, params: Vec<Parameter>, polys: Vec<((StateId, usize, usize), Poly)>) -> Result<Self> {
        let np = params.len();
        let mut entries: Vec<Vec<Vec<Poly>>> = skeleton
            .choices
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|c| c.transitions.iter().map(|&(_, e)| Poly::constant(e.lo(), np)).collect())
                    .collect()
            })
            .collect();
        for ((s, c, t), p) in polys {
            let slot = entries
                .get_mut(s)
                .and_then(|cs| cs.get_mut(c))
                .and_then(|ts| ts.get_mut(t))
                .ok_or_else(|| invalid(format!("parametric entry ({s}, {c}, {t}) does not exist")))?;
            if p.terms.iter().any(|(_, e)| e.len() != np) {
                return Err(invalid("monomial arity differs from the parameter count"));
            }
            *slot = p;
        }
        let pm = Self {
            skeleton,
            params,
            entries,
        };
        pm.validate()?;
        Ok(pm)
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Centre of the parameter box.
    pub fn midpoint(&self) -> Vec<f64> {
        self.params.iter().map(|p| 0.5 * (p.lo + p.hi)).collect()
    }

    /// Whether every entry is affine in the parameters.
    pub fn is_affine(&self) -> bool {
        self.entries.iter().flatten().flatten().all(Poly::is_affine)
    }

    /// Rows must sum to one identically; the skeleton must be well formed.
    pub fn validate(&self) -> Result<()> {
        if self.skeleton.is_uncertain() {
            return Err(Error::Unsupported("interval entries in a parametric model".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.params {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo <= p.hi) {
                return Err(invalid(format!("parameter `{}` has an invalid range", p.name)));
            }
            if !seen.insert(&p.name) {
                return Err(invalid(format!("parameter `{}` declared twice", p.name)));
            }
        }
        let np = self.num_params();
        for (s, cs) in self.entries.iter().enumerate() {
            for (c, ts) in cs.iter().enumerate() {
                let mut sum = Poly::constant(0.0, np);
                for t in ts {
                    sum = sum.add(t);
                }
                let ok = sum.terms.iter().all(|(coef, e)| {
                    if e.iter().all(|&k| k == 0) {
                        (coef - 1.0).abs() <= SUM_TOL
                    } else {
                        coef.abs() <= SUM_TOL
                    }
                }) && sum.terms.iter().any(|(_, e)| e.iter().all(|&k| k == 0));
                if !ok {
                    return Err(invalid(format!(
                        "state {s}, action `{}`: probabilities do not sum to 1 for all parameter values",
                        self.skeleton.action_name(s, c)
                    )));
                }
            }
        }
        // Structure (actions, observations, labels) is checked on a probe
        // instantiation with uniform rows.
        let mut probe = self.skeleton.clone();
        for c in probe.choices.iter_mut().flatten() {
            let k = c.transitions.len() as f64;
            for (_, e) in c.transitions.iter_mut() {
                *e = ProbEntry::Point(1.0 / k);
            }
        }
        probe.validate()
    }

    /// Smallest entry at `v` (for graph-preservation checks).
    pub fn min_entry(&self, v: &[f64]) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|p| p.eval(v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn in_box(&self, v: &[f64]) -> bool {
        v.len() == self.params.len()
            && v.iter().zip(&self.params).all(|(x, p)| *x >= p.lo && *x <= p.hi)
    }

    /// Instantiated model `M[v]`; every entry must be at least `eps_graph`
    /// so that the underlying graph is preserved.
    pub fn instantiate(&self, v: &[f64], eps_graph: f64) -> Result<Model> {
        if v.len() != self.num_params() {
            return Err(crate::error::arg(format!(
                "expected {} parameter values, got {}",
                self.num_params(),
                v.len()
            )));
        }
        let mut m = self.skeleton.clone();
        for (s, cs) in m.choices.iter_mut().enumerate() {
            for (c, ch) in cs.iter_mut().enumerate() {
                for (t, (_, e)) in ch.transitions.iter_mut().enumerate() {
                    let p = self.entries[s][c][t].eval(v);
                    if !(p >= eps_graph) || p > 1.0 + crate::PROB_TOL {
                        return Err(Error::Invalid(format!(
                            "instantiation is not graph-preserving: state {s}, action `{}` has probability {p}",
                            self.skeleton.action_names[ch.action]
                        )));
                    }
                    *e = ProbEntry::Point(p.min(1.0));
                }
            }
        }
        m.validate()?;
        Ok(m)
    }

    /// Instantiate from a name-to-value map.
    pub fn instantiate_named(&self, values: &BTreeMap<String, f64>, eps_graph: f64) -> Result<Model> {
        let v = self.values_from_names(values)?;
        self.instantiate(&v, eps_graph)
    }

    pub fn values_from_names(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        if let Some(k) = values.keys().find(|k| self.param_index(k).is_none()) {
            return Err(crate::error::arg(format!("unknown parameter `{k}`")));
        }
        self.params
            .iter()
            .map(|p| {
                values
                    .get(&p.name)
                    .copied()
                    .ok_or_else(|| crate::error::arg(format!("missing value for parameter `{}`", p.name)))
            })
            .collect()
    }

    pub fn named(&self, v: &[f64]) -> BTreeMap<String, f64> {
        self.params.iter().zip(v).map(|(p, &x)| (p.name.clone(), x)).collect()
    }

    /// Parse the JSON model format extended with `"parameters"` and
    /// polynomial `"poly"` entries.
    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_raw(text)?;
        let params: Vec<Parameter> = raw
            .params
            .into_iter()
            .map(|p| Parameter {
                name: p.name,
                lo: p.lo,
                hi: p.hi,
            })
            .collect();
        let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
        let polys = raw
            .polys
            .iter()
            .map(|(at, mono)| Ok((*at, Poly::from_monomials(mono, &names)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut skeleton = raw.model;
        // Give placeholders a finite value so the skeleton is printable.
        for c in skeleton.choices.iter_mut().flatten() {
            for (_, e) in c.transitions.iter_mut() {
                if e.lo().is_nan() {
                    *e = ProbEntry::Point(0.0);
                }
            }
        }
        Self::new(skeleton, params, polys)
    }

    pub fn to_json(&self) -> String {
        let names: Vec<String> = self.params.iter().map(|p| p.name.clone()).collect();
        let mut polys = Vec::new();
        let mut skel = self.skeleton.clone();
        for (s, cs) in self.entries.iter().enumerate() {
            for (c, ts) in cs.iter().enumerate() {
                for (t, p) in ts.iter().enumerate() {
                    if p.is_constant() {
                        skel.choices[s][c].transitions[t].1 = ProbEntry::Point(p.eval(&vec![0.0; names.len()]));
                    } else {
                        polys.push(((s, c, t), p.to_monomials(&names)));
                    }
                }
            }
        }
        let params: Vec<ParamJson> = self
            .params
            .iter()
            .map(|p| ParamJson {
                name: p.name.clone(),
                lo: p.lo,
                hi: p.hi,
            })
            .collect();
        parametric_to_json(&skel, &params, &polys)
    }
}
