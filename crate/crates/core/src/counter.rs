//! Bounded-liveness to safety: product with a move counter.
//!
//! `□◇target` is strengthened to "the counted player reaches a target within
//! `c_max` of its own moves". The counter lives in the state; transitions that
//! would push it to `c_max` are deleted, so the ordinary safety solver
//! enforces the bound.

use crate::formula::{BoundFormula, Formula};
use crate::game::{Game, GameBuilder, Player, PropId, Pruned, StateId};
use crate::synth::SynthError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterAugmentation {
    /// Assertion over the successor's label; true resets the counter.
    pub reset: Formula,
    /// Counter values range over `0..c_max`.
    pub c_max: u32,
    pub counted: Player,
}

impl CounterAugmentation {
    pub fn new(reset: Formula, c_max: u32) -> Self {
        assert!(c_max >= 1, "counter bound must be positive");
        CounterAugmentation { reset, c_max, counted: Player::System }
    }
}

/// Game with a counter folded into its states.
#[derive(Clone, Debug)]
pub struct CounterProduct {
    pub game: Game,
    /// `origin[product state] = (base state, counter value)`.
    pub origin: Vec<(StateId, u32)>,
    /// Product states dropped as unreachable from the initial states.
    pub pruned: usize,
    /// `cnt_k` proposition for each counter value `k`.
    pub counter_props: Vec<PropId>,
}

impl CounterProduct {
    pub fn find(&self, base: StateId, counter: u32) -> Option<StateId> {
        self.origin.iter().position(|&o| o == (base, counter)).map(|i| StateId(i as u32))
    }
}

/// Builds `S × {0, …, c_max − 1}`. A counted move resets the counter when the
/// successor satisfies `reset` and increments it otherwise; other moves leave
/// it unchanged. Edges into counter value `c_max` are dropped. Initial
/// states are `I × {0}`; the unreachable part is pruned.
pub fn counter_augment(g: &Game, ca: &CounterAugmentation) -> Result<CounterProduct, SynthError> {
    if ca.reset.mentions_next() {
        return Err(crate::formula::FormulaError::NextInInitial(ca.reset.to_string()).into());
    }
    let reset: BoundFormula = ca.reset.bind(g)?;
    let c_max = ca.c_max;
    let n = g.num_states() as u32;

    let mut b = GameBuilder::new();
    for name in g.ap_names() {
        b.add_prop(name.clone());
    }
    let counter_props: Vec<PropId> = (0..c_max).map(|k| b.add_prop(format!("cnt_{k}"))).collect();
    for info in g.actions() {
        b.add_action(info.name.clone(), info.owner);
    }
    // Product id = counter * |S| + base.
    for c in 0..c_max {
        for s in g.states() {
            let labels = g.labels(s).iter().copied().chain([counter_props[c as usize]]);
            b.add_state(g.player(s), labels);
        }
    }
    let id = |s: StateId, c: u32| StateId(c * n + s.0);
    let resets: Vec<bool> = g.states().map(|s| reset.eval(g.labels(s), &[])).collect();
    for c in 0..c_max {
        for s in g.states() {
            for e in g.outgoing(s) {
                let next = if g.player(s) != ca.counted {
                    c
                } else if resets[e.target.index()] {
                    0
                } else {
                    c + 1
                };
                if next < c_max {
                    b.add_transition(id(s, c), e.action, id(e.target, next));
                }
            }
        }
    }
    for &s in g.initial() {
        b.add_initial(id(s, 0));
    }
    let full = b.build()?;
    let Pruned { game, origin, removed } = full.prune_unreachable();
    let origin = origin.iter().map(|p| (StateId(p.0 % n), p.0 / n)).collect();
    Ok(CounterProduct { game, origin, pruned: removed, counter_props })
}
