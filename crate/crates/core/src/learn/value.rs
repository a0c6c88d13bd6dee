//! Q-tables, maximin state values, greedy extraction and the value-iteration
//! oracle.

use crate::game::{Game, Player, StateId};
use crate::learn::reward::RewardTable;
use crate::strategy::MemorylessStrategy;
use crate::Scalar;

/// Action values over the `(s, a)` pairs of a game, indexed by edge.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable<T> {
    q: Vec<T>,
    pub gamma: T,
}

/// `v(s) = max_a q(s, a)` at system states and `min_a q(s, a)` at
/// environment states.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction<T> {
    v: Vec<T>,
}

impl<T: Scalar> QTable<T> {
    pub fn zeros(g: &Game, gamma: T) -> Self {
        QTable { q: vec![T::zero(); g.num_edges()], gamma }
    }

    pub fn edge(&self, index: usize) -> T {
        self.q[index]
    }

    pub fn edge_mut(&mut self, index: usize) -> &mut T {
        &mut self.q[index]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Maximin value of `s`; 0 at dead ends.
    pub fn state_value(&self, g: &Game, s: StateId) -> T {
        let range = g.edge_range(s);
        let mut values = self.q[range].iter().copied();
        let Some(first) = values.next() else {
            return T::zero();
        };
        match g.player(s) {
            Player::System => values.fold(first, T::max),
            Player::Environment => values.fold(first, T::min),
        }
    }

    pub fn values(&self, g: &Game) -> ValueFunction<T> {
        ValueFunction { v: g.states().map(|s| self.state_value(g, s)).collect() }
    }

    /// `max |q − other|` over all pairs.
    pub fn sup_distance(&self, other: &QTable<T>) -> T {
        self.q.iter().zip(&other.q).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max)
    }

    /// `max |q(s,a) − (r + γ_step · v(s'))|` where the discount applies only
    /// at system steps.
    pub fn bellman_residual(&self, g: &Game, table: &RewardTable<T>) -> T {
        let v = self.values(g);
        let mut worst = T::zero();
        for s in g.states() {
            let disc = if g.is_system(s) { self.gamma } else { T::one() };
            for i in g.edge_range(s) {
                let target = table.edge(i) + disc * v.get(g.edge(i).target);
                worst = worst.max((self.q[i] - target).abs());
            }
        }
        worst
    }
}

impl<T: Scalar> ValueFunction<T> {
    pub fn get(&self, s: StateId) -> T {
        self.v[s.index()]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.v
    }

    pub fn sup_distance(&self, other: &ValueFunction<T>) -> T {
        self.v.iter().zip(&other.v).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max)
    }

    pub fn max_over(&self, states: impl Iterator<Item = StateId>) -> Option<T> {
        states.map(|s| self.get(s)).reduce(T::max)
    }
}

/// Deterministic strategy picking `argmax_a q(s, a)` at each system state,
/// ties going to the lowest action id.
pub fn greedy_strategy<T: Scalar>(q: &QTable<T>, ghat: &Game) -> MemorylessStrategy {
    let mut mu = MemorylessStrategy::empty(ghat.num_states());
    for s in ghat.system_states() {
        let mut best: Option<(T, usize)> = None;
        for i in ghat.edge_range(s) {
            if best.is_none_or(|(b, _)| q.edge(i) > b) {
                best = Some((q.edge(i), i));
            }
        }
        if let Some((_, i)) = best {
            mu.set(s, [ghat.edge(i).action]);
        }
    }
    mu
}

/// Result of [`maximin_value_iteration`].
#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub q: QTable<T>,
    pub v: ValueFunction<T>,
    pub sweeps: usize,
}

/// Iterates the maximin Bellman operator
/// `q(s,a) ← r(s,a) + γ_step · v(T(s,a))` from zero until the sup-norm change
/// of a sweep drops below `tol`. `γ_step` is `γ` at system states and 1 at
/// environment states.
pub fn maximin_value_iteration<T: Scalar>(ghat: &Game, table: &RewardTable<T>, gamma: T, tol: T) -> Solved<T> {
    let mut q = QTable::zeros(ghat, gamma);
    let mut v = q.values(ghat);
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut change = T::zero();
        for s in ghat.states() {
            let disc = if ghat.is_system(s) { gamma } else { T::one() };
            for i in ghat.edge_range(s) {
                let new = table.edge(i) + disc * v.get(ghat.edge(i).target);
                change = change.max((new - q.q[i]).abs());
                q.q[i] = new;
            }
        }
        v = q.values(ghat);
        if change < tol || sweeps >= 1_000_000 {
            break;
        }
    }
    Solved { q, v, sweeps }
}
