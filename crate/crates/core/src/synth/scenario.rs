//! Scenario-based verification: sample parameter instantiations, check each
//! one and bound the violation probability with a confidence level.

use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Beta;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::parametric::ParametricModel;
use crate::checker::{check, CheckOptions};
use crate::error::{arg, Error, Result};
use crate::models::Spec;

/// Distribution of one parameter over its range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    Uniform,
    /// `lo + (hi − lo)·X` with `X ~ Beta(a, b)`.
    Beta { a: f64, b: f64 },
    /// `(value, weight)` pairs.
    Discrete { points: Vec<(f64, f64)> },
}

impl Sampler {
    fn validate(&self, lo: f64, hi: f64) -> Result<()> {
        match self {
            Sampler::Uniform => Ok(()),
            Sampler::Beta { a, b } if *a > 0.0 && *b > 0.0 => Ok(()),
            Sampler::Beta { a, b } => Err(arg(format!("beta shape parameters must be positive, got ({a}, {b})"))),
            Sampler::Discrete { points } => {
                if points.is_empty() || points.iter().any(|&(v, w)| !(lo..=hi).contains(&v) || !(w >= 0.0)) {
                    return Err(arg("discrete sampler needs weighted points inside the parameter range"));
                }
                WeightedIndex::new(points.iter().map(|p| p.1)).map_err(|e| arg(e.to_string()))?;
                Ok(())
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        match self {
            Sampler::Uniform => lo + (hi - lo) * rng.gen::<f64>(),
            Sampler::Beta { a, b } => lo + (hi - lo) * Beta::new(*a, *b).expect("validated").sample(rng),
            Sampler::Discrete { points } => {
                let w = WeightedIndex::new(points.iter().map(|p| p.1)).expect("validated");
                points[w.sample(rng)].0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of sampled instantiations K (≥ 2).
    pub samples: usize,
    /// One sampler per parameter; empty means uniform for all.
    pub samplers: Vec<Sampler>,
    pub seed: u64,
    /// Tolerance ν to report a confidence for.
    pub nu: Option<f64>,
    /// Confidence target α to bisect a tolerance for.
    pub alpha: Option<f64>,
    /// Tolerances listed in the α table.
    pub nu_table: Vec<f64>,
    pub eps_graph: f64,
    /// Resamples allowed per scenario when an instantiation is not graph
    /// preserving.
    pub max_retries: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            samplers: Vec::new(),
            seed: 0,
            nu: None,
            alpha: None,
            nu_table: vec![0.001, 0.005, 0.01, 0.05, 0.1, 0.2],
            eps_graph: 1e-6,
            max_retries: 100,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self, pm: &ParametricModel) -> Result<()> {
        if self.samples < 2 {
            return Err(arg("at least two samples are required"));
        }
        if let Some(nu) = self.nu {
            check_nu(nu)?;
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(arg(format!("confidence target must lie in (0, 1], got {a}")));
            }
        }
        for &nu in &self.nu_table {
            check_nu(nu)?;
        }
        if !self.samplers.is_empty() && self.samplers.len() != pm.num_params() {
            return Err(arg(format!(
                "{} samplers given for {} parameters",
                self.samplers.len(),
                pm.num_params()
            )));
        }
        for (s, p) in self.samplers.iter().zip(&pm.params) {
            s.validate(p.lo, p.hi)?;
        }
        Ok(())
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&nu) {
        return Err(arg(format!("tolerance must lie in [0, 1), got {nu}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSample {
    pub index: usize,
    pub params: Vec<f64>,
    pub value: f64,
    pub satisfied: bool,
    /// Rejected draws before this one.
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub samples: usize,
    pub sat_count: usize,
    /// Violating scenarios L.
    pub viol_count: usize,
    pub sat_rate: f64,
    /// Requested tolerance and its confidence bound α.
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    /// Bisection bracket `[ν_lo, ν_hi]` for a requested α.
    pub nu_interval: Option<(f64, f64)>,
    /// `(ν, α)` pairs.
    pub alpha_table: Vec<(f64, f64)>,
    #[serde(skip)]
    pub details: Vec<ScenarioSample>,
    pub wall_time_ms: f64,
}

impl ScenarioReport {
    /// Human-readable certificate: with probability at least `1 − α`, a fresh
    /// instantiation satisfies the specification with probability at least
    /// `1 − ν`.
    pub fn statement(&self) -> Option<String> {
        let (nu, alpha) = match (self.nu_interval, self.nu, self.alpha) {
            (Some((_, hi)), _, Some(a)) => (hi, a),
            (None, Some(nu), Some(a)) => (nu, a),
            _ => return None,
        };
        Some(format!(
            "with confidence {:.6} the satisfaction probability is at least {:.6} (K = {}, L = {}, ν = {nu}, α = {alpha:e})",
            1.0 - alpha,
            1.0 - nu,
            self.samples,
            self.viol_count
        ))
    }
}

/// Sample `K` instantiations of `pm`, check each against `spec` and bound the
/// probability of violation.
///
/// Sample `i` draws from its own ChaCha8 stream `i` under `seed`, so the
/// result does not depend on the number of threads.
pub fn scenario_verify(pm: &ParametricModel, spec: &Spec, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let t0 = Instant::now();
    cfg.validate(pm)?;
    let opts = CheckOptions::default();
    let details: Vec<ScenarioSample> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            for retries in 0..=cfg.max_retries {
                let v: Vec<f64> = pm
                    .params
                    .iter()
                    .enumerate()
                    .map(|(j, p)| cfg.samplers.get(j).unwrap_or(&Sampler::Uniform).sample(&mut rng, p.lo, p.hi))
                    .collect();
                let Ok(m) = pm.instantiate(&v, cfg.eps_graph) else { continue };
                let r = check(&m, spec, &opts)?;
                return Ok(ScenarioSample {
                    index: i,
                    params: v,
                    value: r.initial_value,
                    satisfied: spec.satisfied_by(r.initial_value),
                    retries,
                });
            }
            Err(Error::InvalidArgument(format!(
                "sample {i}: no graph-preserving instantiation within {} retries",
                cfg.max_retries
            )))
        })
        .collect::<Result<_>>()?;

    let k = cfg.samples;
    let sat = details.iter().filter(|d| d.satisfied).count();
    let l = k - sat;
    let informative = l < k;
    let alpha_of = |nu: f64| if informative { confidence_bound(k, l, nu).ok() } else { None };
    let (nu, alpha, nu_interval) = match (cfg.nu, cfg.alpha) {
        (_, Some(a)) if informative => {
            let iv = bisect_nu(k, l, a)?;
            (Some(iv.1), Some(a), Some(iv))
        }
        (Some(nu), _) => (Some(nu), alpha_of(nu), None),
        _ => (None, None, None),
    };
    Ok(ScenarioReport {
        samples: k,
        sat_count: sat,
        viol_count: l,
        sat_rate: sat as f64 / k as f64,
        nu,
        alpha,
        nu_interval,
        alpha_table: cfg.nu_table.iter().filter_map(|&nu| alpha_of(nu).map(|a| (nu, a))).collect(),
        details,
        wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

fn check_domain(k: usize, l: usize, nu: f64) -> Result<()> {
    if k < 2 {
        return Err(arg(format!("sample count must be at least 2, got {k}")));
    }
    if l >= k {
        return Err(arg(format!("violation count {l} must be below the sample count {k}")));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(arg(format!("tolerance must lie in [0, 1], got {nu}")));
    }
    Ok(())
}

/// `(L + 1)·Σ_{i=0}^{L+1} C(K, i)(1 − ν)^{K−i} ν^i`, evaluated term-wise in
/// log space. May exceed 1 for `L > 0`.
pub fn confidence_bound_raw(k: usize, l: usize, nu: f64) -> Result<f64> {
    check_domain(k, l, nu)?;
    let ln_nu = nu.ln();
    let ln_1m = (-nu).ln_1p();
    let mut ln_c = 0.0; // ln C(K, i)
    let mut sum = 0.0;
    for i in 0..=(l + 1).min(k) {
        if i > 0 {
            ln_c += ((k - i + 1) as f64 / i as f64).ln();
        }
        let a = if i == 0 { 0.0 } else { i as f64 * ln_nu };
        let b = if i == k { 0.0 } else { (k - i) as f64 * ln_1m };
        sum += (ln_c + a + b).exp();
    }
    Ok((l + 1) as f64 * sum)
}

/// Confidence level α_ν clamped to `[0, 1]`.
pub fn confidence_bound(k: usize, l: usize, nu: f64) -> Result<f64> {
    Ok(confidence_bound_raw(k, l, nu)?.min(1.0))
}

/// Bracket `[ν_lo, ν_hi]` with `α(ν_hi) ≤ α_target < α(ν_lo)`, found by
/// bisection on the decreasing map `ν ↦ α(ν)`.
pub fn bisect_nu(k: usize, l: usize, alpha_target: f64) -> Result<(f64, f64)> {
    if !(alpha_target > 0.0 && alpha_target <= 1.0) {
        return Err(arg(format!("confidence target must lie in (0, 1], got {alpha_target}")));
    }
    let alpha = |nu| confidence_bound(k, l, nu);
    if alpha(0.0)? <= alpha_target {
        return Ok((0.0, 0.0));
    }
    if alpha(1.0)? > alpha_target {
        return Err(Error::Infeasible(format!(
            "no tolerance reaches confidence {alpha_target} with K = {k}, L = {l}"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if alpha(mid)? <= alpha_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}
