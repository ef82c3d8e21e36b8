//! Dense two-phase primal simplex.
//!
//! Variables with finite bounds are shifted to be non-negative; finite upper
//! bounds become explicit rows. Pricing is Dantzig's rule, falling back to
//! Bland's rule during runs of degenerate pivots so the method cannot cycle.
//! The tableau is rebuilt from the original data periodically and before a
//! solution is returned; a solution that fails the residual check after a
//! bounded number of rebuilds is reported as numerically unstable.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub obj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    InvalidInput(String),
    #[error("simplex numerically unstable: {0}")]
    NumericalInstability(String),
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, obj: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lo,
            hi,
            obj,
        });
        self.vars.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, rel, rhs });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lo.is_nan() || v.hi.is_nan() || v.lo == f64::INFINITY || v.hi == f64::NEG_INFINITY {
                return Err(LpError::InvalidInput(format!("variable {j} has bounds [{}, {}]", v.lo, v.hi)));
            }
            if !v.obj.is_finite() {
                return Err(LpError::InvalidInput(format!("objective coefficient of variable {j}")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::InvalidInput(format!("row {i}: rhs {}", c.rhs)));
            }
            for &(j, a) in &c.coeffs {
                if j >= self.vars.len() {
                    return Err(LpError::InvalidInput(format!("row {i}: undeclared variable {j}")));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidInput(format!("row {i}: coefficient {a}")));
                }
            }
        }
        Ok(())
    }

    /// Objective value of an assignment.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, x)| v.obj * x).sum()
    }

    /// Largest violation of any bound or row by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xj) in self.vars.iter().zip(x) {
            worst = worst.max(v.lo - xj).max(xj - v.hi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let d = match c.rel {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(d);
        }
        worst
    }

    /// Fixed-format MPS dump (objective row `OBJ`, rows `R<i>`, columns by
    /// variable name). Maximisation is declared in an `OBJSENSE` section.
    pub fn to_mps(&self, name: &str) -> String {
        let mut out = String::new();
        let col = |j: usize| {
            let n = &self.vars[j].name;
            if n.is_empty() || n.contains(char::is_whitespace) {
                format!("X{j}")
            } else {
                n.clone()
            }
        };
        let _ = writeln!(out, "NAME          {name}");
        if self.sense == Sense::Maximize {
            let _ = writeln!(out, "OBJSENSE\n    MAX");
        }
        let _ = writeln!(out, "ROWS\n N  OBJ");
        for (i, c) in self.constraints.iter().enumerate() {
            let t = match c.rel {
                Relation::Le => 'L',
                Relation::Eq => 'E',
                Relation::Ge => 'G',
            };
            let _ = writeln!(out, " {t}  R{i}");
        }
        let _ = writeln!(out, "COLUMNS");
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (i, c) in self.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                by_col[j].push((i, a));
            }
        }
        for (j, entries) in by_col.iter().enumerate() {
            let name = col(j);
            if self.vars[j].obj != 0.0 {
                let _ = writeln!(out, "    {name:<8}  {:<8}  {:>12e}", "OBJ", self.vars[j].obj);
            }
            for &(i, a) in entries {
                let _ = writeln!(out, "    {name:<8}  {:<8}  {:>12e}", format!("R{i}"), a);
            }
        }
        let _ = writeln!(out, "RHS");
        for (i, c) in self.constraints.iter().enumerate() {
            if c.rhs != 0.0 {
                let _ = writeln!(out, "    RHS       {:<8}  {:>12e}", format!("R{i}"), c.rhs);
            }
        }
        let _ = writeln!(out, "BOUNDS");
        for (j, v) in self.vars.iter().enumerate() {
            let name = col(j);
            match (v.lo.is_finite(), v.hi.is_finite()) {
                (true, true) if v.lo == v.hi => {
                    let _ = writeln!(out, " FX BND       {name:<8}  {:>12e}", v.lo);
                }
                (false, false) => {
                    let _ = writeln!(out, " FR BND       {name:<8}");
                }
                (lo_f, hi_f) => {
                    if !lo_f {
                        let _ = writeln!(out, " MI BND       {name:<8}");
                    } else if v.lo != 0.0 {
                        let _ = writeln!(out, " LO BND       {name:<8}  {:>12e}", v.lo);
                    }
                    if hi_f {
                        let _ = writeln!(out, " UP BND       {name:<8}  {:>12e}", v.hi);
                    }
                }
            }
        }
        let _ = writeln!(out, "ENDATA");
        out
    }
}

/// How an original variable is expressed through standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    /// x = offset + sign·y
    Shift { col: usize, offset: f64, sign: f64 },
    /// x = y⁺ − y⁻
    Free { pos: usize, neg: usize },
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 20;
const REFACTOR_EVERY: usize = 200;
const MAX_REBUILDS: usize = 3;

struct Tableau {
    /// Row-major `m × (ncols + 1)`; last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Original standard-form rows, kept for rebuilds.
    a0: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Columns that may never enter (artificials after phase 1).
    banned: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.ncols + 1;
        let p = self.t[r][c];
        let inv = 1.0 / p;
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.t[r][c] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..w {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Recompute `B⁻¹[A | b]` from the original rows.
    fn rebuild(&mut self) -> Result<(), LpError> {
        let m = self.a0.len();
        let w = self.ncols + 1;
        let mut t = self.a0.clone();
        let cols = self.basis.clone();
        let mut row_of = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for (k, &c) in cols.iter().enumerate() {
            let mut best = None;
            let mut best_v = 1e-11;
            for (i, row) in t.iter().enumerate() {
                if !used[i] && row[c].abs() > best_v {
                    best_v = row[c].abs();
                    best = Some(i);
                }
            }
            let Some(r) = best else {
                return Err(LpError::NumericalInstability(
                    "singular basis during refactorization".into(),
                ));
            };
            used[r] = true;
            row_of[k] = r;
            let inv = 1.0 / t[r][c];
            for v in t[r].iter_mut() {
                *v *= inv;
            }
            let prow = t[r].clone();
            for (i, row) in t.iter_mut().enumerate() {
                if i != r {
                    let f = row[c];
                    if f != 0.0 {
                        for j in 0..w {
                            row[j] -= f * prow[j];
                        }
                    }
                }
            }
        }
        for (k, &c) in cols.iter().enumerate() {
            self.basis[row_of[k]] = c;
        }
        // Clean up exact unit columns.
        for (i, &c) in self.basis.iter().enumerate() {
            for (k, row) in t.iter_mut().enumerate() {
                row[c] = if k == i { 1.0 } else { 0.0 };
            }
        }
        self.t = t;
        Ok(())
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj -= cb * self.t[i][j];
                }
            }
        }
        r
    }

    /// Primal simplex on the current basis for `min cost·y`.
    fn optimize(&mut self, cost: &[f64]) -> Result<PhaseEnd, LpError> {
        let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let opt_tol = 1e-9 * scale;
        let mut degenerate_run = 0usize;
        let mut since_rebuild = 0usize;
        let mut r = self.reduced_costs(cost);
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::NumericalInstability(format!(
                    "iteration limit {} reached",
                    self.max_iterations
                )));
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -opt_tol;
            for j in 0..self.ncols {
                if self.banned[j] || r[j] >= -opt_tol {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if r[j] < best {
                    best = r[j];
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let q = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            q < ratio - 1e-12 * (1.0 + ratio.abs())
                                || (q <= ratio + 1e-12 * (1.0 + ratio.abs())
                                    && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        ratio = if leave.is_none() { q } else { q.min(ratio) };
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(l, c);
            self.iterations += 1;
            since_rebuild += 1;
            if since_rebuild >= REFACTOR_EVERY {
                self.rebuild()?;
                since_rebuild = 0;
                r = self.reduced_costs(cost);
            } else {
                let f = r[c];
                let prow = &self.t[l];
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj -= f * prow[j];
                }
                r[c] = 0.0;
            }
        }
    }
}

/// Solve an LP. The result is deterministic for identical input.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;

    // Variable substitution.
    let mut maps = Vec::with_capacity(lp.vars.len());
    let mut ncols = 0usize;
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();
    for v in &lp.vars {
        if v.lo > v.hi {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                values: vec![],
                iterations: 0,
            });
        }
        let m = if v.lo.is_finite() && v.hi.is_finite() && v.lo == v.hi {
            VarMap::Fixed(v.lo)
        } else if v.lo.is_finite() {
            if v.hi.is_finite() {
                ub_rows.push((ncols, v.hi - v.lo));
            }
            ncols += 1;
            VarMap::Shift {
                col: ncols - 1,
                offset: v.lo,
                sign: 1.0,
            }
        } else if v.hi.is_finite() {
            ncols += 1;
            VarMap::Shift {
                col: ncols - 1,
                offset: v.hi,
                sign: -1.0,
            }
        } else {
            ncols += 2;
            VarMap::Free {
                pos: ncols - 2,
                neg: ncols - 1,
            }
        };
        maps.push(m);
    }
    let nstruct = ncols;

    // Rows over structural columns with non-negative rhs.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut a = vec![0.0; nstruct];
        let mut rhs = c.rhs;
        for &(j, v) in &c.coeffs {
            match maps[j] {
                VarMap::Fixed(x) => rhs -= v * x,
                VarMap::Shift { col, offset, sign } => {
                    a[col] += sign * v;
                    rhs -= v * offset;
                }
                VarMap::Free { pos, neg } => {
                    a[pos] += v;
                    a[neg] -= v;
                }
            }
        }
        if a.iter().all(|&x| x == 0.0) {
            let ok = match c.rel {
                Relation::Le => rhs >= -1e-9,
                Relation::Ge => rhs <= 1e-9,
                Relation::Eq => rhs.abs() <= 1e-9,
            };
            if !ok {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: f64::NAN,
                    values: vec![],
                    iterations: 0,
                });
            }
            continue;
        }
        rows.push((a, c.rel, rhs));
    }
    for &(col, ub) in &ub_rows {
        let mut a = vec![0.0; nstruct];
        a[col] = 1.0;
        rows.push((a, Relation::Le, ub));
    }
    for (a, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // Slack, surplus and artificial columns.
    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let total = nstruct + nslack + nart;
    let mut a0 = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut is_art = vec![false; total];
    let (mut sk, mut ak) = (nstruct, nstruct + nslack);
    for (a, rel, rhs) in &rows {
        let mut row = vec![0.0; total + 1];
        row[..nstruct].copy_from_slice(a);
        row[total] = *rhs;
        match rel {
            Relation::Le => {
                row[sk] = 1.0;
                basis.push(sk);
                sk += 1;
            }
            Relation::Ge => {
                row[sk] = -1.0;
                sk += 1;
                row[ak] = 1.0;
                is_art[ak] = true;
                basis.push(ak);
                ak += 1;
            }
            Relation::Eq => {
                row[ak] = 1.0;
                is_art[ak] = true;
                basis.push(ak);
                ak += 1;
            }
        }
        a0.push(row);
    }

    let mut tab = Tableau {
        t: a0.clone(),
        a0,
        basis,
        ncols: total,
        banned: vec![false; total],
        iterations: 0,
        max_iterations: 20_000 + 50 * (m + total),
    };

    let bscale = tab.t.iter().fold(1.0f64, |acc, r| acc.max(r[total].abs()));

    // Phase 1.
    if nart > 0 {
        let cost1: Vec<f64> = is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        tab.optimize(&cost1)?;
        tab.rebuild()?;
        let infeas: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| is_art[b])
            .map(|(i, _)| tab.rhs(i).abs())
            .sum();
        if infeas > 1e-8 * bscale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                values: vec![],
                iterations: tab.iterations,
            });
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if is_art[tab.basis[i]] {
                let mut best = None;
                let mut best_v = 1e-9;
                for j in 0..total {
                    if !is_art[j] && tab.t[i][j].abs() > best_v {
                        best_v = tab.t[i][j].abs();
                        best = Some(j);
                    }
                }
                match best {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.t.remove(i);
                        tab.a0.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for (j, b) in tab.banned.iter_mut().enumerate() {
            *b = is_art[j];
        }
        tab.rebuild()?;
    }

    // Phase 2 objective in standard columns (always minimise).
    let sgn = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; total];
    for (v, m) in lp.vars.iter().zip(&maps) {
        match *m {
            VarMap::Fixed(_) => {}
            VarMap::Shift { col, sign, .. } => cost[col] += sgn * sign * v.obj,
            VarMap::Free { pos, neg } => {
                cost[pos] += sgn * v.obj;
                cost[neg] -= sgn * v.obj;
            }
        }
    }

    let mut rebuilds = 0;
    loop {
        match tab.optimize(&cost)? {
            PhaseEnd::Unbounded => {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    objective: if lp.sense == Sense::Maximize {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    },
                    values: vec![],
                    iterations: tab.iterations,
                })
            }
            PhaseEnd::Optimal => {}
        }
        tab.rebuild()?;
        let mut y = vec![0.0; total];
        for (i, &b) in tab.basis.iter().enumerate() {
            y[b] = tab.rhs(i).max(0.0);
        }
        let values: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                VarMap::Fixed(x) => x,
                VarMap::Shift { col, offset, sign } => offset + sign * y[col],
                VarMap::Free { pos, neg } => y[pos] - y[neg],
            })
            .collect();
        let viol = lp.max_violation(&values);
        let primal_ok = tab.basis.iter().enumerate().all(|(i, _)| tab.rhs(i) >= -1e-7 * bscale);
        let r = tab.reduced_costs(&cost);
        let cscale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let dual_ok = (0..total).all(|j| tab.banned[j] || r[j] >= -1e-7 * cscale);
        if viol <= 1e-6 * bscale && primal_ok && dual_ok {
            return Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: lp.evaluate(&values),
                values,
                iterations: tab.iterations,
            });
        }
        rebuilds += 1;
        if rebuilds > MAX_REBUILDS {
            return Err(LpError::NumericalInstability(format!(
                "residual {viol:.3e} after {MAX_REBUILDS} refactorizations"
            )));
        }
        // Restore primal feasibility of tiny negative entries and resume.
        for i in 0..tab.t.len() {
            if tab.t[i][total] < 0.0 && tab.t[i][total] > -1e-7 * bscale {
                tab.t[i][total] = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_max() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.values[x] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_negative_bounds() {
        // min x + y with x free, y <= -1, x + y >= -5, x >= y
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, -1.0, 1.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, -5.0);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Ge, 0.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective + 5.0).abs() < 1e-9);
        assert!(lp.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, 2.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(x, 2.0), (y, 2.0)], Relation::Eq, 2.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under Dantzig's rule with naive tie-breaking.
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x: Vec<usize> = (0..4)
            .map(|i| lp.add_var(format!("x{i}"), 0.0, f64::INFINITY, [-0.75, 150.0, -0.02, 6.0][i]))
            .collect();
        lp.add_constraint(vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(x[2], 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn mps_dump_lists_all_sections() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, 4.0, 1.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 2.0);
        let mps = lp.to_mps("t");
        for sec in ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA", " UP BND", " FR BND"] {
            assert!(mps.contains(sec), "missing {sec}");
        }
    }
}
