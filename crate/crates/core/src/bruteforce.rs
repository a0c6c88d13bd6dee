//! Exhaustive checks for small games: whether a strategy is winning, and
//! enumeration of every deterministic memoryless winning strategy.
//!
//! Strategies are enumerated on the states they reach. Two strategies that
//! agree on their own reachable states induce the same runs, so each class is
//! visited once.

use std::fmt;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::game::{ActionId, Game, StateId};
use crate::strategy::MemorylessStrategy;
use crate::synth::BoundSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Losing {
    ViolatesInitial(StateId),
    /// A reachable edge falsifies `φ₁`.
    Violation {
        from: StateId,
        to: StateId,
    },
    /// A reachable state has no permitted action.
    DeadEnd(StateId),
}

impl fmt::Display for Losing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Losing::ViolatesInitial(s) => write!(f, "initial state {s} violates phi0"),
            Losing::Violation { from, to } => write!(f, "edge {from} -> {to} violates phi1"),
            Losing::DeadEnd(s) => write!(f, "dead end at {s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("game has {system_states} system states, over the enumeration limit of {limit}")]
pub struct LimitExceeded {
    pub system_states: usize,
    pub limit: usize,
}

/// Checks every state reachable under `mu` (non-deterministic allowed).
pub fn check_winning(g: &Game, spec: &BoundSpec, mu: &MemorylessStrategy) -> Result<(), Losing> {
    for &s in g.initial() {
        if !spec.initial_ok(g, s) {
            return Err(Losing::ViolatesInitial(s));
        }
    }
    let mut seen = vec![false; g.num_states()];
    let mut stack: Vec<StateId> = g.initial().to_vec();
    for &s in &stack {
        seen[s.index()] = true;
    }
    while let Some(s) = stack.pop() {
        let mut moved = false;
        for e in g.outgoing(s) {
            if g.is_system(s) && !mu.allows(s, e.action) {
                continue;
            }
            moved = true;
            if !spec.edge_ok(g, s, e.target) {
                return Err(Losing::Violation { from: s, to: e.target });
            }
            if !seen[e.target.index()] {
                seen[e.target.index()] = true;
                stack.push(e.target);
            }
        }
        if !moved {
            return Err(Losing::DeadEnd(s));
        }
    }
    Ok(())
}

/// Calls `visit` with every deterministic memoryless winning strategy,
/// defined exactly on its reachable system states. Returns the number
/// visited.
pub fn for_each_winning_strategy(
    g: &Game,
    spec: &BoundSpec,
    limit: usize,
    mut visit: impl FnMut(&MemorylessStrategy) -> ControlFlow<()>,
) -> Result<usize, LimitExceeded> {
    let system_states = g.num_system_states();
    if system_states > limit {
        return Err(LimitExceeded { system_states, limit });
    }
    if g.initial().iter().any(|&s| !spec.initial_ok(g, s)) {
        return Ok(0);
    }
    let mut search =
        Search { g, spec, choice: vec![None; g.num_states()], seen: vec![false; g.num_states()], count: 0 };
    let frontier = g.initial().to_vec();
    let _ = search.extend(frontier, &mut visit);
    Ok(search.count)
}

struct Search<'a> {
    g: &'a Game,
    spec: &'a BoundSpec,
    choice: Vec<Option<ActionId>>,
    seen: Vec<bool>,
    count: usize,
}

impl Search<'_> {
    /// Explores `frontier` under the current partial strategy, branching at
    /// the first unseen system state.
    fn extend(
        &mut self,
        mut frontier: Vec<StateId>,
        visit: &mut impl FnMut(&MemorylessStrategy) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let g = self.g;
        let mut marked = Vec::new();
        let result = loop {
            let Some(s) = frontier.pop() else {
                self.count += 1;
                let mut mu = MemorylessStrategy::empty(g.num_states());
                for (i, a) in self.choice.iter().enumerate() {
                    if let Some(a) = a {
                        mu.set(StateId(i as u32), [*a]);
                    }
                }
                break visit(&mu);
            };
            if self.seen[s.index()] {
                continue;
            }
            self.seen[s.index()] = true;
            marked.push(s);
            if g.is_system(s) {
                let mut flow = ControlFlow::Continue(());
                for e in g.outgoing(s) {
                    if !self.spec.edge_ok(g, s, e.target) {
                        continue;
                    }
                    self.choice[s.index()] = Some(e.action);
                    let mut next = frontier.clone();
                    next.push(e.target);
                    flow = self.extend(next, visit);
                    if flow.is_break() {
                        break;
                    }
                }
                self.choice[s.index()] = None;
                break flow;
            }
            if g.is_dead_end(s) || g.outgoing(s).iter().any(|e| !self.spec.edge_ok(g, s, e.target)) {
                break ControlFlow::Continue(());
            }
            frontier.extend(g.outgoing(s).iter().map(|e| e.target));
        };
        for s in marked {
            self.seen[s.index()] = false;
        }
        result
    }
}

/// A deterministic winning strategy that plays, at some state it reaches, an
/// action `mu_p` forbids. `None` means `mu_p` includes every memoryless
/// winning strategy.
pub fn find_excluded(
    g: &Game,
    spec: &BoundSpec,
    mu_p: &MemorylessStrategy,
    limit: usize,
) -> Result<Option<MemorylessStrategy>, LimitExceeded> {
    let mut witness = None;
    for_each_winning_strategy(g, spec, limit, |mu| {
        let excluded = mu.defined_states().any(|(s, acts)| !mu_p.allows(s, acts[0]));
        if excluded {
            witness = Some(mu.clone());
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(witness)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub winning: Result<(), Losing>,
    /// `None` when maximality was not checked (over the limit).
    pub excluded: Option<Option<MemorylessStrategy>>,
    pub skipped: Option<LimitExceeded>,
}

impl VerifyReport {
    pub fn is_maximal(&self) -> Option<bool> {
        self.excluded.as_ref().map(|w| w.is_none())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.winning {
            Ok(()) => writeln!(f, "winning: yes")?,
            Err(why) => writeln!(f, "winning: no ({why})")?,
        }
        match (&self.excluded, &self.skipped) {
            (Some(None), _) => writeln!(f, "maximal: yes"),
            (Some(Some(_)), _) => writeln!(f, "maximal: no, witness strategy emitted"),
            (None, Some(e)) => writeln!(f, "maximal: skipped ({e})"),
            (None, None) => writeln!(f, "maximal: skipped"),
        }
    }
}

/// Winning check plus, within `limit`, the maximality search.
pub fn verify(g: &Game, spec: &BoundSpec, mu: &MemorylessStrategy, limit: usize) -> VerifyReport {
    let winning = check_winning(g, spec, mu);
    match find_excluded(g, spec, mu, limit) {
        Ok(w) => VerifyReport { winning, excluded: Some(w), skipped: None },
        Err(e) => VerifyReport { winning, excluded: None, skipped: Some(e) },
    }
}
