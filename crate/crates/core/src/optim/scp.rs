use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

/// Parameters shared by the sequential convex programming loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScpConfig {
    /// Initial trust radius δ₀.
    pub delta0: f64,
    /// Growth/shrink factor γ of the trust radius.
    pub gamma: f64,
    /// Stop once δ drops below ω.
    pub omega: f64,
    /// Penalty weight τ of the slack variables.
    pub tau: f64,
    /// Floor keeping instantiated transition probabilities positive.
    pub eps_graph: f64,
    /// Floor keeping policy probabilities positive.
    pub eps_pol: f64,
    pub max_iters: usize,
}

impl Default for ScpConfig {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            gamma: 1.5,
            omega: 1e-4,
            tau: 1e4,
            eps_graph: 1e-6,
            eps_pol: 1e-6,
            max_iters: 200,
        }
    }
}

impl ScpConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("delta0", self.delta0),
            ("omega", self.omega),
            ("tau", self.tau),
            ("eps_graph", self.eps_graph),
            ("eps_pol", self.eps_pol),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(arg(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(arg(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if self.eps_graph >= 0.1 || self.eps_pol >= 0.1 {
            return Err(arg("eps_graph and eps_pol must lie in (0, 0.1)"));
        }
        Ok(())
    }
}

/// Affine function `k + cy·y + cz·z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2 {
    pub k: f64,
    pub cy: f64,
    pub cz: f64,
}

impl Affine2 {
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        self.k + self.cy * y + self.cz * z
    }
}

/// First-order expansion of `h(y, z) = (2d·y + c)·z` at `(ŷ, ẑ)`:
/// `2d(ŷẑ + ŷ(z − ẑ) + ẑ(y − ŷ)) + c·z`.
pub fn linearize_bilinear(d: f64, c: f64, y_hat: f64, z_hat: f64) -> Affine2 {
    Affine2 {
        k: -2.0 * d * y_hat * z_hat,
        cy: 2.0 * d * z_hat,
        cz: 2.0 * d * y_hat + c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustBounds {
    pub var: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Multiplicative trust region `v̂/δ' ≤ v ≤ v̂·δ'` with `δ' = δ + 1`.
///
/// `center` lists `(variable, v̂, is_probability)`; probability variables are
/// additionally confined to `[eps, 1 − eps]`.
pub fn trust_region_constraints(
    center: &[(usize, f64, bool)],
    delta: f64,
    eps: f64,
) -> Result<Vec<TrustBounds>> {
    if !(delta > 0.0) {
        return Err(arg(format!("trust radius must be positive, got {delta}")));
    }
    let dp = delta + 1.0;
    center
        .iter()
        .map(|&(var, v, prob)| {
            if !(v > 0.0) {
                return Err(arg(format!("trust-region center of variable {var} is {v}")));
            }
            let (mut lo, mut hi) = (v / dp, v * dp);
            if prob {
                lo = lo.max(eps);
                hi = hi.min(1.0 - eps);
            }
            Ok(TrustBounds { var, lo, hi })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accept: bool,
    pub delta: f64,
}

/// Trust-region update: accept a strictly better checked value and grow the
/// region, otherwise shrink it. `maximize = false` flips the comparison.
pub fn scp_step(beta: f64, beta_hat: f64, delta: f64, gamma: f64, maximize: bool) -> StepOutcome {
    let better = if maximize { beta > beta_hat } else { beta < beta_hat };
    if better {
        StepOutcome {
            accept: true,
            delta: delta * gamma,
        }
    } else {
        StepOutcome {
            accept: false,
            delta: delta / gamma,
        }
    }
}
