//! Instantaneous reward sources and run/strategy evaluation.

use num_traits::{Num, Zero};

use crate::game::{ActionId, Game, GameError, Player, RunTrace, StateId};
use crate::strategy::MemorylessStrategy;

/// Black-box instantaneous reward `R(s, a)`, revealed one transition at a
/// time. Must be deterministic, stationary and non-negative.
pub trait RewardOracle<T> {
    fn reward(&self, s: StateId, a: ActionId) -> T;
}

impl<T, F: Fn(StateId, ActionId) -> T> RewardOracle<T> for F {
    fn reward(&self, s: StateId, a: ActionId) -> T {
        self(s, a)
    }
}

/// The full reward table of a game, indexed by edge. Only evaluation code
/// and the value-iteration oracle read it; the learner never does.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTable<T> {
    rewards: Vec<T>,
}

impl<T: Copy + Zero + PartialOrd> RewardTable<T> {
    /// Queries `oracle` at every system edge; environment edges get 0.
    pub fn from_oracle(g: &Game, oracle: &impl RewardOracle<T>) -> Self {
        let mut rewards = vec![T::zero(); g.num_edges()];
        for s in g.system_states() {
            for i in g.edge_range(s) {
                rewards[i] = oracle.reward(s, g.edge(i).action);
            }
        }
        RewardTable { rewards }
    }

    pub fn from_edges(rewards: Vec<T>) -> Self {
        RewardTable { rewards }
    }

    pub fn edge(&self, index: usize) -> T {
        self.rewards[index]
    }

    pub fn get(&self, g: &Game, s: StateId, a: ActionId) -> Option<T> {
        g.edge_index(s, a).map(|i| self.rewards[i])
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn max(&self) -> T {
        self.rewards.iter().copied().fold(T::zero(), |m, r| if r > m { r } else { m })
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: T) -> Self
    where
        T: std::ops::Mul<Output = T>,
    {
        RewardTable { rewards: self.rewards.iter().map(|&r| r * c).collect() }
    }
}

/// `Σ_k γᵏ R_{k+1}` over the system steps of a finite trace. Environment
/// steps neither contribute nor advance `k`.
pub fn discounted_reward<T: Num + Copy>(trace: &RunTrace<T>, gamma: T) -> T {
    let mut total = T::zero();
    let mut weight = T::one();
    for (&r, &mover) in trace.rewards.iter().zip(&trace.movers) {
        if mover == Player::System {
            total = total + weight * r;
            weight = weight * gamma;
        }
    }
    total
}

/// Bracket on the worst-case discounted reward `inf_π J(π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardBounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Num + Copy + PartialOrd> RewardBounds<T> {
    pub fn contains(&self, v: T, slack: T) -> bool {
        self.lower <= v + slack && v <= self.upper + slack
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// Worst case of `J` over the runs from `s` induced by the deterministic
/// strategy `mu`, by minimizing dynamic programming over the environment.
///
/// `horizon` counts steps of either player. Runs are cut after `horizon`
/// steps; the unseen tail contributes between 0 and `γᵏ R_max / (1 − γ)`
/// where `k` is the number of system steps taken so far.
pub fn worst_case_reward<T: Num + Copy + PartialOrd>(
    ghat: &Game,
    mu: &MemorylessStrategy,
    table: &RewardTable<T>,
    s: StateId,
    gamma: T,
    horizon: usize,
) -> Result<RewardBounds<T>, GameError> {
    let tail = table.max() / (T::one() - gamma);
    let n = ghat.num_states();
    // Each entry: Some((lo, hi)) or None when the strategy is undefined on
    // the way.
    let mut cur: Vec<Option<(T, T)>> = vec![Some((T::zero(), tail)); n];
    let mut next = cur.clone();
    let mut picks = vec![None; n];
    for q in ghat.system_states() {
        let choice = mu.choice(q);
        if choice.len() == 1 {
            picks[q.index()] = ghat.edge_index(q, choice[0]);
        }
    }
    for _ in 0..horizon {
        for q in ghat.states() {
            next[q.index()] = match ghat.player(q) {
                Player::System => picks[q.index()].and_then(|i| {
                    let r = table.edge(i);
                    cur[ghat.edge(i).target.index()].map(|(lo, hi)| (r + gamma * lo, r + gamma * hi))
                }),
                Player::Environment => {
                    let mut acc: Option<(T, T)> = None;
                    let mut undefined = ghat.is_dead_end(q);
                    for e in ghat.outgoing(q) {
                        match cur[e.target.index()] {
                            None => undefined = true,
                            Some((lo, hi)) => {
                                acc = Some(match acc {
                                    None => (lo, hi),
                                    Some((a, b)) => (min(a, lo), min(b, hi)),
                                })
                            }
                        }
                    }
                    if undefined {
                        None
                    } else {
                        acc
                    }
                }
            };
        }
        std::mem::swap(&mut cur, &mut next);
    }
    match cur[s.index()] {
        Some((lower, upper)) => Ok(RewardBounds { lower, upper }),
        None => Err(GameError::DeadEnd(s)),
    }
}

fn min<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}
