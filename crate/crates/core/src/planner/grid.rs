use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, Result};
use crate::models::{BeliefLabeling, Dfa, DistanceSensor, Model, ModelBuilder, ModelKind, StateId};

/// Probability that a move succeeds; otherwise the agent stays put.
pub const MOVE_PROB: f64 = 0.9;
const GOAL_PRIOR: f64 = 0.35;
const DECOY_PRIOR: f64 = 0.65;
const STRAY_GOAL_PRIOR: f64 = 0.02;
const OBSTACLE_PRIOR: f64 = 0.3;

/// Reach-avoid planning instance on a square grid with uncertain labels.
#[derive(Debug, Clone)]
pub struct GridInstance {
    pub size: usize,
    pub mdp: Model,
    pub dfa: Dfa,
    pub truth: Vec<BTreeSet<String>>,
    pub prior: BeliefLabeling,
    pub sensor: DistanceSensor,
    pub goal: StateId,
    /// Cell the prior wrongly favours as the goal.
    pub decoy: StateId,
    pub obstacles: BTreeSet<StateId>,
}

impl GridInstance {
    pub fn cell(&self, r: usize, c: usize) -> StateId {
        r * self.size + c
    }
}

/// `size × size` grid, start in the top-left corner, goal in the
/// bottom-right one. `obstacles` random cells (never start, goal or decoy,
/// always leaving a start–goal path) carry `"obstacle"`. The prior puts more
/// goal mass on the top-right decoy than on the true goal, so the prior-only
/// plan misses the goal and only sensing recovers it.
pub fn reach_avoid_grid(size: usize, obstacles: usize, seed: u64) -> Result<GridInstance> {
    if size < 2 {
        return Err(arg("reach-avoid grid needs size ≥ 2"));
    }
    let n = size * size;
    let id = |r: usize, c: usize| r * size + c;
    let (start, goal, decoy) = (0, id(size - 1, size - 1), id(0, size - 1));
    if obstacles > n - 3 {
        return Err(arg(format!("{obstacles} obstacles do not fit a {size}×{size} grid")));
    }

    let mut b = ModelBuilder::new(ModelKind::Mdp, n);
    b.initial(start);
    let moves: [(&str, i64, i64); 4] = [("up", -1, 0), ("down", 1, 0), ("left", 0, -1), ("right", 0, 1)];
    for r in 0..size {
        for c in 0..size {
            let s = id(r, c);
            for (name, dr, dc) in moves {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if (0..size as i64).contains(&nr) && (0..size as i64).contains(&nc) {
                    let t = id(nr as usize, nc as usize);
                    b.choice(s, name, &[(t, MOVE_PROB), (s, 1.0 - MOVE_PROB)]);
                } else {
                    b.choice(s, name, &[(s, 1.0)]);
                }
            }
        }
    }
    let mdp = b.build()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<StateId> = (0..n).filter(|&s| s != start && s != goal && s != decoy).collect();
    let blocked = loop {
        let set: BTreeSet<StateId> = free.choose_multiple(&mut rng, obstacles).copied().collect();
        if connected(size, &set, start, goal) {
            break set;
        }
    };

    let props = vec!["goal".to_string(), "obstacle".to_string()];
    let truth: Vec<BTreeSet<String>> = (0..n)
        .map(|s| {
            let mut l = BTreeSet::new();
            if s == goal {
                l.insert("goal".to_string());
            }
            if blocked.contains(&s) {
                l.insert("obstacle".to_string());
            }
            l
        })
        .collect();
    let p = (0..n)
        .map(|s| {
            if s == start {
                vec![0.0, 0.0]
            } else if s == goal {
                vec![GOAL_PRIOR, 0.0]
            } else if s == decoy {
                vec![DECOY_PRIOR, 0.0]
            } else {
                vec![STRAY_GOAL_PRIOR, OBSTACLE_PRIOR]
            }
        })
        .collect();
    let coords = (0..n).map(|s| ((s / size) as i64, (s % size) as i64)).collect();
    Ok(GridInstance {
        size,
        mdp,
        dfa: Dfa::reach_avoid("goal", "obstacle"),
        truth,
        prior: BeliefLabeling { props, p },
        sensor: DistanceSensor {
            coords,
            near: 0.95,
            decay: 0.85,
            radius: None,
        },
        goal,
        decoy,
        obstacles: blocked,
    })
}

fn connected(size: usize, blocked: &BTreeSet<StateId>, from: StateId, to: StateId) -> bool {
    let mut seen = vec![false; size * size];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(s) = queue.pop_front() {
        if s == to {
            return true;
        }
        let (r, c) = (s / size, s % size);
        let mut next = Vec::with_capacity(4);
        if r > 0 {
            next.push(s - size);
        }
        if r + 1 < size {
            next.push(s + size);
        }
        if c > 0 {
            next.push(s - 1);
        }
        if c + 1 < size {
            next.push(s + 1);
        }
        for t in next {
            if !seen[t] && !blocked.contains(&t) {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    false
}
