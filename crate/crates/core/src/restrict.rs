//! Restricting a game to a permissive strategy, and lifting strategies of
//! the restricted game back to the original.

use thiserror::Error;

use crate::game::{Game, StateId};
use crate::strategy::MemorylessStrategy;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RestrictError {
    #[error("strategy covers {strategy} states but the game has {game}")]
    SizeMismatch { strategy: usize, game: usize },
    #[error("system state {0} is reachable in the restricted game but has no allowed action")]
    DeadEnd(StateId),
}

/// Bijection between the states of `Ĝ` and the states of `G` they came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateMap {
    to_original: Vec<StateId>,
    to_restricted: Vec<Option<StateId>>,
}

impl StateMap {
    pub fn new(to_original: Vec<StateId>, original_states: usize) -> Self {
        let mut to_restricted = vec![None; original_states];
        for (i, &s) in to_original.iter().enumerate() {
            assert!(to_restricted[s.index()].is_none(), "state map is not injective");
            to_restricted[s.index()] = Some(StateId(i as u32));
        }
        StateMap { to_original, to_restricted }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n as u32).map(StateId).collect(), n)
    }

    /// `Ĝ` state → `G` state.
    pub fn original(&self, restricted: StateId) -> StateId {
        self.to_original[restricted.index()]
    }

    /// `G` state → `Ĝ` state, if kept.
    pub fn restricted(&self, original: StateId) -> Option<StateId> {
        self.to_restricted.get(original.index()).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.to_original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_original.is_empty()
    }

    pub fn original_len(&self) -> usize {
        self.to_restricted.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.to_original.iter().enumerate().map(|(i, &s)| (StateId(i as u32), s))
    }
}

/// Builds `Ĝ`: keeps the system edges `mu_p` allows and every environment
/// edge, then prunes what is no longer reachable from `I`.
pub fn apply_strategy(g: &Game, mu_p: &MemorylessStrategy) -> Result<(Game, StateMap), RestrictError> {
    if mu_p.num_states() != g.num_states() {
        return Err(RestrictError::SizeMismatch { strategy: mu_p.num_states(), game: g.num_states() });
    }
    let keep_edge = |s: StateId, e: crate::game::Edge| !g.is_system(s) || mu_p.allows(s, e.action);
    let reach = g.reachable_by(keep_edge);
    let (ghat, origin) = g.subgame(&reach, keep_edge);
    if let Some(s) = ghat.system_states().find(|&s| ghat.is_dead_end(s)) {
        return Err(RestrictError::DeadEnd(origin[s.index()]));
    }
    let map = StateMap::new(origin, g.num_states());
    Ok((ghat, map))
}

/// Plays `mu_hat`'s choice at every original state that has a counterpart
/// in `Ĝ`; undefined elsewhere.
pub fn lift_strategy(map: &StateMap, mu_hat: &MemorylessStrategy) -> MemorylessStrategy {
    let mut mu = MemorylessStrategy::empty(map.original_len());
    for (hat, orig) in map.pairs() {
        if mu_hat.is_defined(hat) {
            mu.set(orig, mu_hat.choice(hat).iter().copied());
        }
    }
    mu
}
