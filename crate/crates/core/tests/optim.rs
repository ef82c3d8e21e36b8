use num_rational::Ratio;
use num_traits::{One, Zero};
use proptest::prelude::*;
use verisynth::optim::{
    linearize_bilinear, scp_step, solve_lp, trust_region_constraints, LinearProgram, LpStatus, Relation,
    ScpConfig, Sense,
};

type Q = Ratio<i128>;

/// Integer LP over a bounded box, kept in exact form for the oracle.
#[derive(Debug, Clone)]
struct IntLp {
    maximize: bool,
    obj: Vec<i64>,
    bounds: Vec<(i64, i64)>,
    rows: Vec<(Vec<i64>, Relation, i64)>,
}

impl IntLp {
    fn to_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(if self.maximize { Sense::Maximize } else { Sense::Minimize });
        for (j, (&c, &(lo, hi))) in self.obj.iter().zip(&self.bounds).enumerate() {
            lp.add_var(format!("x{j}"), lo as f64, hi as f64, c as f64);
        }
        for (a, rel, b) in &self.rows {
            let coeffs = a.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, &v)| (j, v as f64)).collect();
            lp.add_constraint(coeffs, *rel, *b as f64);
        }
        lp
    }
}

/// Solve a square system exactly; `None` when singular.
fn solve_exact(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
                let v = b[col];
                b[r] -= f * v;
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Exact optimum by enumerating every vertex of the (bounded) feasible set.
fn vertex_oracle(lp: &IntLp) -> Option<Q> {
    let n = lp.obj.len();
    let q = |v: i64| Q::from_integer(v as i128);
    // Candidate hyperplanes: constraint rows, then lower and upper bounds.
    let mut planes: Vec<(Vec<Q>, Q)> = Vec::new();
    for (a, _, b) in &lp.rows {
        planes.push((a.iter().map(|&v| q(v)).collect(), q(*b)));
    }
    for j in 0..n {
        for v in [lp.bounds[j].0, lp.bounds[j].1] {
            let mut e = vec![Q::zero(); n];
            e[j] = Q::one();
            planes.push((e, q(v)));
        }
    }
    let feasible = |x: &[Q]| {
        let lhs = |a: &[i64]| a.iter().zip(x).fold(Q::zero(), |acc, (&c, v)| acc + q(c) * v);
        lp.bounds.iter().zip(x).all(|(&(lo, hi), v)| *v >= q(lo) && *v <= q(hi))
            && lp.rows.iter().all(|(a, rel, b)| {
                let l = lhs(a);
                match rel {
                    Relation::Le => l <= q(*b),
                    Relation::Ge => l >= q(*b),
                    Relation::Eq => l == q(*b),
                }
            })
    };
    let mut best: Option<Q> = None;
    let m = planes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<Q>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<Q> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_exact(a, b) {
            if feasible(&x) {
                let val = lp.obj.iter().zip(&x).fold(Q::zero(), |acc, (&c, v)| acc + q(c) * v);
                let better = match best {
                    None => true,
                    Some(bv) => if lp.maximize { val > bv } else { val < bv },
                };
                if better {
                    best = Some(val);
                }
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn int_lp() -> impl Strategy<Value = IntLp> {
    (1usize..=6, 1usize..=8).prop_flat_map(|(n, m)| {
        let bounds = prop::collection::vec((-3i64..=0, 1i64..=4).prop_map(|(lo, w)| (lo, lo + w)), n);
        let obj = prop::collection::vec(-5i64..=5, n);
        let rows = prop::collection::vec(
            (
                prop::collection::vec(-4i64..=4, n),
                prop_oneof![4 => Just(Relation::Le), 4 => Just(Relation::Ge), 1 => Just(Relation::Eq)],
                -2i64..=3,
                any::<bool>(),
            ),
            m,
        );
        let point = prop::collection::vec(0.0f64..1.0, n);
        (any::<bool>(), obj, bounds, rows, point).prop_map(|(maximize, obj, bounds, rows, point)| {
            // Anchor most rows at an integer point of the box so that both
            // feasible and infeasible programs occur.
            let x0: Vec<i64> = bounds
                .iter()
                .zip(&point)
                .map(|(&(lo, hi), &t)| lo + ((hi - lo) as f64 * t).round() as i64)
                .collect();
            let rows = rows
                .into_iter()
                .map(|(a, rel, slack, anchored)| {
                    let ax: i64 = a.iter().zip(&x0).map(|(c, x)| c * x).sum();
                    let b = if !anchored {
                        slack * 2
                    } else {
                        match rel {
                            Relation::Le => ax + slack.abs(),
                            Relation::Ge => ax - slack.abs(),
                            Relation::Eq => ax,
                        }
                    };
                    (a, rel, b)
                })
                .collect();
            IntLp { maximize, obj, bounds, rows }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_rational_vertex_enumeration(lp in int_lp()) {
        let oracle = vertex_oracle(&lp);
        let sol = solve_lp(&lp.to_lp()).unwrap();
        match oracle {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                let exact = *v.numer() as f64 / *v.denom() as f64;
                prop_assert!((sol.objective - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                    "objective {} vs exact {}", sol.objective, exact);
                prop_assert!(lp.to_lp().max_violation(&sol.values) <= 1e-9);
                prop_assert!((lp.to_lp().evaluate(&sol.values) - sol.objective).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn solve_is_deterministic(lp in int_lp()) {
        let a = solve_lp(&lp.to_lp()).unwrap();
        let b = solve_lp(&lp.to_lp()).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.values), bits(&b.values));
    }

    #[test]
    fn linearization_is_tangent_and_exact_when_affine(
        d in -3.0f64..3.0, c in -3.0f64..3.0, y in 0.01f64..1.0, z in 0.01f64..1.0,
        y2 in 0.0f64..1.0, z2 in 0.0f64..1.0,
    ) {
        let h = |d: f64, y: f64, z: f64| (2.0 * d * y + c) * z;
        let a = linearize_bilinear(d, c, y, z);
        prop_assert!((a.eval(y, z) - h(d, y, z)).abs() < 1e-12);
        // The gap is exactly 2d(y−ŷ)(z−ẑ).
        let gap = h(d, y2, z2) - a.eval(y2, z2);
        prop_assert!((gap - 2.0 * d * (y2 - y) * (z2 - z)).abs() < 1e-12);
        let lin = linearize_bilinear(0.0, c, y, z);
        prop_assert!((lin.eval(y2, z2) - h(0.0, y2, z2)).abs() < 1e-12);
    }

    #[test]
    fn trust_radius_after_accepts_and_rejects(steps in prop::collection::vec(any::<bool>(), 0..30), gamma in 1.01f64..3.0) {
        let mut delta = 1.0;
        let mut best = 0.0;
        let (mut acc, mut rej) = (0i32, 0i32);
        for up in steps {
            let beta = if up { best + 0.01 } else { best };
            let out = scp_step(beta, best, delta, gamma, true);
            prop_assert_eq!(out.accept, up);
            if out.accept { best = beta; acc += 1; } else { rej += 1; }
            delta = out.delta;
        }
        let expect = gamma.powi(acc - rej);
        prop_assert!((delta - expect).abs() <= 1e-9 * expect);
    }
}

#[test]
fn single_variable_max() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
    lp.add_constraint(vec![(x, 1.0)], Relation::Le, 3.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-12 && (s.values[x] - 3.0).abs() < 1e-12);
}

#[test]
fn infeasible_pair() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    lp.add_constraint(vec![(x, 1.0)], Relation::Le, 0.0);
    lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 1.0);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn unbounded_program() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
    let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0);
    lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn parametric_chain_lp_at_fixed_valuation() {
    // s0 -v-> s1 -(1-v)-> s2 -v-> s3 (target), remaining mass to a sink.
    let v = 0.5;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let p: Vec<usize> = (0..4).map(|i| lp.add_var(format!("p{i}"), 0.0, 1.0, if i == 0 { 1.0 } else { 0.0 })).collect();
    lp.add_constraint(vec![(p[3], 1.0)], Relation::Eq, 1.0);
    lp.add_constraint(vec![(p[0], 1.0), (p[1], -v)], Relation::Ge, 0.0);
    lp.add_constraint(vec![(p[1], 1.0), (p[2], -(1.0 - v))], Relation::Ge, 0.0);
    lp.add_constraint(vec![(p[2], 1.0), (p[3], -v)], Relation::Ge, 0.0);
    let s = solve_lp(&lp).unwrap();
    assert!((s.values[p[0]] - v * (1.0 - v) * v).abs() < 1e-12);
    assert!((s.objective - 0.125).abs() < 1e-12);
}

#[test]
fn linearization_examples() {
    let a = linearize_bilinear(0.0, 0.7, 0.2, 0.3);
    assert_eq!(a.eval(0.9, 0.4), 0.7 * 0.4);
    let a = linearize_bilinear(1.0, 0.0, 0.4, 0.7);
    assert!((a.eval(0.4, 0.7) - 0.56).abs() < 1e-15);
    let a = linearize_bilinear(1.0, 0.0, 0.5, 0.5);
    assert!((a.eval(0.6, 0.6) - 0.70).abs() < 1e-15);
    assert!(a.eval(0.6, 0.6) <= 2.0 * 0.6 * 0.6);
}

#[test]
fn trust_region_examples() {
    let eps = 1e-6;
    let b = trust_region_constraints(&[(0, 0.5, true)], 1.0, eps).unwrap();
    assert_eq!(b[0].var, 0);
    assert!((b[0].lo - 0.25).abs() < 1e-15);
    assert!((b[0].hi - (1.0 - eps)).abs() < 1e-15);

    let b = trust_region_constraints(&[(3, 0.3, true), (4, 2.0, false)], 1e-12, eps).unwrap();
    assert!((b[0].lo - 0.3).abs() < 1e-11 && (b[0].hi - 0.3).abs() < 1e-11);
    assert!((b[1].lo - 2.0).abs() < 1e-11 && (b[1].hi - 2.0).abs() < 1e-11);

    let b = trust_region_constraints(&[(0, eps, true)], 9.0, eps).unwrap();
    assert_eq!(b[0].lo, eps);
    assert!((b[0].hi - 10.0 * eps).abs() < 1e-18);

    assert!(trust_region_constraints(&[(0, 0.0, true)], 1.0, eps).is_err());
}

#[test]
fn step_examples() {
    let s = scp_step(0.6, 0.5, 1.0, 2.0, true);
    assert!(s.accept && s.delta == 2.0);
    let s = scp_step(0.5, 0.5, 1.0, 2.0, true);
    assert!(!s.accept && s.delta == 0.5);
    // Cost minimisation flips the comparison.
    assert!(scp_step(0.4, 0.5, 1.0, 2.0, false).accept);
    assert!(!scp_step(0.6, 0.5, 1.0, 2.0, false).accept);
    let a = scp_step(0.6, 0.5, 1.0, 1.5, true);
    let b = scp_step(0.6, 0.6, a.delta, 1.5, true);
    assert!((b.delta - 1.0).abs() < 1e-15);
}

#[test]
fn config_defaults_and_validation() {
    let c = ScpConfig::default();
    assert_eq!((c.delta0, c.gamma, c.omega, c.tau), (1.0, 1.5, 1e-4, 1e4));
    assert_eq!((c.eps_graph, c.eps_pol, c.max_iters), (1e-6, 1e-6, 200));
    c.validate().unwrap();
    assert!(ScpConfig { gamma: 1.0, ..c.clone() }.validate().is_err());
    assert!(ScpConfig { eps_graph: 0.2, ..c.clone() }.validate().is_err());
}
