//! Benchmark generators. All generators are deterministic in their size
//! argument; only reach-avoid instances depend on a seed.

use std::collections::BTreeMap;

use verisynth::models::{Model, ModelBuilder, ModelKind, StateId};

use crate::error::{usage, Result};

const MOVES: [(&str, i64, i64); 4] = [("up", -1, 0), ("down", 1, 0), ("left", 0, -1), ("right", 0, 1)];

fn check_size(c: usize) -> Result<()> {
    if c == 0 {
        return Err(usage("benchmark size must be at least 1"));
    }
    Ok(())
}

/// Uniform initial distribution over `states`.
fn uniform(states: &[StateId]) -> Vec<(StateId, f64)> {
    let p = 1.0 / states.len() as f64;
    states.iter().map(|&s| (s, p)).collect()
}

/// Adds the four moves at every cell of `cells` (row, col); a move into a
/// wall leaves the agent in place. `goal` is absorbing and free of cost,
/// every other step costs 1.
fn add_moves(b: &mut ModelBuilder, cells: &BTreeMap<(i64, i64), StateId>, goal: StateId) {
    for (&(r, c), &s) in cells {
        for (name, dr, dc) in MOVES {
            if s == goal {
                b.choice(s, name, &[(s, 1.0)]);
                continue;
            }
            let t = cells.get(&(r + dr, c + dc)).copied().unwrap_or(s);
            b.choice(s, name, &[(t, 1.0)]).reward(s, name, 1.0);
        }
    }
}

/// `c × c` grid, goal in the top-right corner, uniform start over the other
/// cells. The agent observes only whether it is at the goal.
pub fn grid(c: usize) -> Result<Model> {
    check_size(c)?;
    let n = c * c;
    let cells: BTreeMap<(i64, i64), StateId> =
        (0..n).map(|s| (((s / c) as i64, (s % c) as i64), s)).collect();
    let goal = c - 1;
    let mut b = ModelBuilder::new(ModelKind::Pomdp, n);
    add_moves(&mut b, &cells, goal);
    for s in 0..n {
        b.observe(s, if s == goal { "goal" } else { "grid" });
    }
    b.label(goal, "goal");
    let mut start: Vec<StateId> = (0..n).filter(|&s| s != goal).collect();
    if start.is_empty() {
        start.push(goal);
    }
    b.initial_dist(uniform(&start));
    Ok(b.build()?)
}

/// Maze with `c + 2` rows: a corridor of five cells on top and three
/// vertical corridors of `c + 1` cells below columns 0, 2 and 4. The goal is
/// the bottom cell of the middle corridor. The agent observes which of its
/// four neighbours are walls (`walls-<dirs>`), and `goal` at the goal.
///
/// Cells are numbered row by row, so `maze(1)` has `s0…s4` on top, `s5…s7`
/// and `s8…s10` below, with the goal at `s9`.
pub fn maze(c: usize) -> Result<Model> {
    check_size(c)?;
    let mut cells = BTreeMap::new();
    let mut order = Vec::new();
    for x in 0..5 {
        order.push((0, x));
    }
    for r in 1..=(c as i64 + 1) {
        for x in [0, 2, 4] {
            order.push((r, x));
        }
    }
    for (s, &rc) in order.iter().enumerate() {
        cells.insert(rc, s);
    }
    let n = order.len();
    let goal = cells[&(c as i64 + 1, 2)];
    let mut b = ModelBuilder::new(ModelKind::Pomdp, n);
    add_moves(&mut b, &cells, goal);
    for (s, &(r, x)) in order.iter().enumerate() {
        if s == goal {
            b.observe(s, "goal");
            continue;
        }
        let walls: String = MOVES
            .iter()
            .filter(|(_, dr, dc)| !cells.contains_key(&(r + dr, x + dc)))
            .map(|(name, _, _)| name[..1].to_ascii_uppercase())
            .collect();
        b.observe(s, &format!("walls-{walls}"));
    }
    b.label(goal, "goal");
    let start: Vec<StateId> = (0..n).filter(|&s| s != goal).collect();
    b.initial_dist(uniform(&start));
    Ok(b.build()?)
}

const RELATIVE: [(&str, i64, i64); 8] = [
    ("n", -1, 0),
    ("ne", -1, 1),
    ("e", 0, 1),
    ("se", 1, 1),
    ("s", 1, 0),
    ("sw", 1, -1),
    ("w", 0, -1),
    ("nw", -1, -1),
];

/// `c × c` grid with one obstacle that stays or moves to a neighbouring cell
/// uniformly at random after every agent move. The agent starts top-left,
/// the goal is bottom-right, the obstacle starts bottom-left. The agent
/// observes the obstacle's relative position when it is one of the eight
/// surrounding cells, `none` otherwise. Meeting the obstacle ends in the
/// absorbing `crash` state; reaching the goal in the absorbing `goal` state.
pub fn navigation(c: usize) -> Result<Model> {
    check_size(c)?;
    let ci = c as i64;
    let cells = c * c;
    let id = |a: (i64, i64), o: (i64, i64)| ((a.0 * ci + a.1) as usize) * cells + (o.0 * ci + o.1) as usize;
    let goal_state = cells * cells;
    let crash = goal_state + 1;
    let inside = |p: (i64, i64)| (0..ci).contains(&p.0) && (0..ci).contains(&p.1);
    let goal = (ci - 1, ci - 1);
    let mut b = ModelBuilder::new(ModelKind::Pomdp, cells * cells + 2);
    for ar in 0..ci {
        for ac in 0..ci {
            for or in 0..ci {
                for oc in 0..ci {
                    let (a, o) = ((ar, ac), (or, oc));
                    let s = id(a, o);
                    let obs = RELATIVE
                        .iter()
                        .find(|(_, dr, dc)| (a.0 + dr, a.1 + dc) == o)
                        .map_or("none", |r| r.0);
                    b.observe(s, obs);
                    let obstacle_moves: Vec<(i64, i64)> = std::iter::once(o)
                        .chain(MOVES.iter().map(|&(_, dr, dc)| (o.0 + dr, o.1 + dc)))
                        .filter(|&p| inside(p))
                        .collect();
                    let q = 1.0 / obstacle_moves.len() as f64;
                    for (name, dr, dc) in MOVES {
                        let na = if inside((a.0 + dr, a.1 + dc)) { (a.0 + dr, a.1 + dc) } else { a };
                        let mut dist: BTreeMap<StateId, f64> = BTreeMap::new();
                        for &no in &obstacle_moves {
                            let t = if na == goal {
                                goal_state
                            } else if na == no || a == o {
                                crash
                            } else {
                                id(na, no)
                            };
                            *dist.entry(t).or_default() += q;
                        }
                        let to: Vec<(StateId, f64)> = dist.into_iter().collect();
                        b.choice(s, name, &to);
                    }
                }
            }
        }
    }
    for (s, name) in [(goal_state, "goal"), (crash, "crash")] {
        for (a, _, _) in MOVES {
            b.choice(s, a, &[(s, 1.0)]);
        }
        b.observe(s, name).label(s, name);
    }
    let start = (0, 0);
    b.initial(if start == goal { goal_state } else { id(start, (ci - 1, 0)) });
    Ok(b.build()?)
}
