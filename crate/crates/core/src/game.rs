//! Explicit turn-based two-player deterministic games.
//!
//! States, actions and atomic propositions are dense integer ids. Transitions
//! are stored in compressed-row form: the outgoing edges of state `s` occupy a
//! contiguous range of a flat edge array, sorted by action id. That edge index
//! doubles as the index of the `(s, a)` pair in Q-tables and reward tables.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropId(pub u32);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PropId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Whose turn it is at a state, or who owns an action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    System,
    Environment,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::System => Player::Environment,
            Player::Environment => Player::System,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::System => f.write_str("system"),
            Player::Environment => f.write_str("environment"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionInfo {
    pub name: String,
    pub owner: Player,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub action: ActionId,
    pub target: StateId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("action {action} is not available at state {state}")]
    UndefinedTransition { state: StateId, action: ActionId },
    #[error("state {0} has no permitted action")]
    DeadEnd(StateId),
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("unknown action {0}")]
    UnknownAction(ActionId),
    #[error("unknown proposition {0:?}")]
    UnknownProp(PropId),
    #[error("state {state} belongs to {player} but action {action} is owned by {owner}")]
    Partition { state: StateId, player: Player, action: ActionId, owner: Player },
    #[error("transition ({state}, {action}) has more than one successor")]
    Nondeterministic { state: StateId, action: ActionId },
    #[error("game has no initial states")]
    NoInitialStates,
    #[error("invalid game: {0}")]
    Invalid(ValidationReport),
}

/// A finding of [`validate_game`] or [`Game::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Ids are not the contiguous range `[0, n)` or appear twice.
    NonDenseIds {
        kind: &'static str,
        id: u32,
    },
    UnknownReference {
        kind: &'static str,
        id: String,
    },
    /// An action owned by one player is available at the other player's state.
    Partition {
        state: StateId,
        action: ActionId,
    },
    Nondeterministic {
        state: StateId,
        action: ActionId,
        successors: Vec<StateId>,
    },
    Unreachable {
        state: StateId,
    },
    DeadEnd {
        state: StateId,
    },
    NoInitialStates,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonDenseIds { kind, id } => {
                write!(f, "{kind} id {id} is duplicated or outside the dense range")
            }
            Violation::UnknownReference { kind, id } => write!(f, "unknown {kind} {id}"),
            Violation::Partition { state, action } => {
                write!(f, "action {action} at {state} belongs to the other player")
            }
            Violation::Nondeterministic { state, action, successors } => {
                write!(f, "({state}, {action}) has successors {successors:?}")
            }
            Violation::Unreachable { state } => write!(f, "{state} is unreachable from I"),
            Violation::DeadEnd { state } => write!(f, "{state} has no available action"),
            Violation::NoInitialStates => f.write_str("no initial states"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violations that prevent building a [`Game`] at all. Unreachable states
    /// are pruned instead, and dead ends are judged after pruning.
    pub fn hard_errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !matches!(v, Violation::Unreachable { .. } | Violation::DeadEnd { .. }))
    }

    pub fn count(&self, pred: impl Fn(&Violation) -> bool) -> usize {
        self.violations.iter().filter(|v| pred(v)).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("well-formed");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// An explicit two-player deterministic game with labeling.
///
/// Immutable once built. Dead-end states are representable (synthesis
/// produces them transiently) but [`Game::validate`] flags them.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    players: Vec<Player>,
    initial: Vec<StateId>,
    actions: Vec<ActionInfo>,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    labels: Vec<Vec<PropId>>,
    ap_names: Vec<String>,
}

impl Game {
    pub fn num_states(&self) -> usize {
        self.players.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.players.len() as u32).map(StateId)
    }

    pub fn system_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&s| self.player(s) == Player::System)
    }

    pub fn num_system_states(&self) -> usize {
        self.players.iter().filter(|&&p| p == Player::System).count()
    }

    pub fn player(&self, s: StateId) -> Player {
        self.players[s.index()]
    }

    pub fn is_system(&self, s: StateId) -> bool {
        self.player(s) == Player::System
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.initial.binary_search(&s).is_ok()
    }

    pub fn action(&self, a: ActionId) -> &ActionInfo {
        &self.actions[a.index()]
    }

    pub fn actions(&self) -> &[ActionInfo] {
        &self.actions
    }

    pub fn labels(&self, s: StateId) -> &[PropId] {
        &self.labels[s.index()]
    }

    pub fn has_label(&self, s: StateId, p: PropId) -> bool {
        self.labels[s.index()].binary_search(&p).is_ok()
    }

    pub fn ap_names(&self) -> &[String] {
        &self.ap_names
    }

    pub fn prop_by_name(&self, name: &str) -> Option<PropId> {
        self.ap_names.iter().position(|n| n == name).map(|i| PropId(i as u32))
    }

    /// Outgoing edges of `s`, sorted by action id. These are `A(s)` with `T`.
    pub fn outgoing(&self, s: StateId) -> &[Edge] {
        &self.edges[self.edge_range(s)]
    }

    /// Range of global edge indices belonging to `s`.
    pub fn edge_range(&self, s: StateId) -> Range<usize> {
        self.offsets[s.index()]..self.offsets[s.index() + 1]
    }

    pub fn edge(&self, index: usize) -> Edge {
        self.edges[index]
    }

    /// Global index of the `(s, a)` pair, if `a ∈ A(s)`.
    pub fn edge_index(&self, s: StateId, a: ActionId) -> Option<usize> {
        let range = self.edge_range(s);
        let start = range.start;
        self.edges[range].binary_search_by_key(&a, |e| e.action).ok().map(|i| start + i)
    }

    pub fn available(&self, s: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.outgoing(s).iter().map(|e| e.action)
    }

    pub fn is_dead_end(&self, s: StateId) -> bool {
        self.offsets[s.index()] == self.offsets[s.index() + 1]
    }

    pub fn dead_ends(&self) -> Vec<StateId> {
        self.states().filter(|&s| self.is_dead_end(s)).collect()
    }

    /// The unique successor `T(s, a)`.
    pub fn step(&self, s: StateId, a: ActionId) -> Result<StateId, GameError> {
        if s.index() >= self.num_states() {
            return Err(GameError::UnknownState(s));
        }
        self.edge_index(s, a)
            .map(|i| self.edges[i].target)
            .ok_or(GameError::UndefinedTransition { state: s, action: a })
    }

    /// States reachable from `I`.
    pub fn reachable(&self) -> Vec<bool> {
        self.reachable_by(|_, _| true)
    }

    /// States reachable from `I` using only edges accepted by `allow`.
    pub fn reachable_by(&self, mut allow: impl FnMut(StateId, Edge) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::new();
        for &s in &self.initial {
            if !seen[s.index()] {
                seen[s.index()] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &e in self.outgoing(s) {
                if !seen[e.target.index()] && allow(s, e) {
                    seen[e.target.index()] = true;
                    queue.push_back(e.target);
                }
            }
        }
        seen
    }

    /// Checks the invariants a built game can still violate: reachability
    /// and dead ends. Partition and determinism hold by construction.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.initial.is_empty() {
            report.violations.push(Violation::NoInitialStates);
        }
        let reach = self.reachable();
        for s in self.states() {
            if !reach[s.index()] {
                report.violations.push(Violation::Unreachable { state: s });
            }
            if self.is_dead_end(s) {
                report.violations.push(Violation::DeadEnd { state: s });
            }
        }
        report
    }

    /// Keeps only `keep` states (and edges between them) and renumbers them
    /// densely in increasing old-id order. Returns the new→old id table.
    pub fn subgame(&self, keep: &[bool], mut keep_edge: impl FnMut(StateId, Edge) -> bool) -> (Game, Vec<StateId>) {
        let mut new_id = vec![u32::MAX; self.num_states()];
        let mut old_ids = Vec::new();
        for s in self.states() {
            if keep[s.index()] {
                new_id[s.index()] = old_ids.len() as u32;
                old_ids.push(s);
            }
        }
        let mut offsets = Vec::with_capacity(old_ids.len() + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for &s in &old_ids {
            for &e in self.outgoing(s) {
                if keep[e.target.index()] && keep_edge(s, e) {
                    edges.push(Edge { action: e.action, target: StateId(new_id[e.target.index()]) });
                }
            }
            offsets.push(edges.len());
        }
        let initial = self.initial.iter().filter(|s| keep[s.index()]).map(|s| StateId(new_id[s.index()])).collect();
        let game = Game {
            players: old_ids.iter().map(|&s| self.player(s)).collect(),
            initial,
            actions: self.actions.clone(),
            offsets,
            edges,
            labels: old_ids.iter().map(|&s| self.labels[s.index()].clone()).collect(),
            ap_names: self.ap_names.clone(),
        };
        (game, old_ids)
    }

    /// Removes states unreachable from `I`.
    pub fn prune_unreachable(&self) -> Pruned {
        let reach = self.reachable();
        let (game, origin) = self.subgame(&reach, |_, _| true);
        let removed = self.num_states() - game.num_states();
        Pruned { game, origin, removed }
    }
}

/// Result of reachability pruning.
#[derive(Clone, Debug)]
pub struct Pruned {
    pub game: Game,
    /// `origin[new] = old`.
    pub origin: Vec<StateId>,
    pub removed: usize,
}

/// Incremental constructor for [`Game`].
#[derive(Clone, Debug, Default)]
pub struct GameBuilder {
    players: Vec<Player>,
    labels: Vec<Vec<PropId>>,
    initial: Vec<StateId>,
    actions: Vec<ActionInfo>,
    transitions: Vec<(StateId, ActionId, StateId)>,
    ap_names: Vec<String>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_prop(&mut self, name: impl Into<String>) -> PropId {
        self.ap_names.push(name.into());
        PropId(self.ap_names.len() as u32 - 1)
    }

    pub fn add_action(&mut self, name: impl Into<String>, owner: Player) -> ActionId {
        self.actions.push(ActionInfo { name: name.into(), owner });
        ActionId(self.actions.len() as u32 - 1)
    }

    pub fn add_state(&mut self, player: Player, labels: impl IntoIterator<Item = PropId>) -> StateId {
        let mut labels: Vec<PropId> = labels.into_iter().collect();
        labels.sort_unstable();
        labels.dedup();
        self.players.push(player);
        self.labels.push(labels);
        StateId(self.players.len() as u32 - 1)
    }

    pub fn add_initial(&mut self, s: StateId) {
        self.initial.push(s);
    }

    pub fn add_transition(&mut self, from: StateId, action: ActionId, to: StateId) {
        self.transitions.push((from, action, to));
    }

    pub fn num_states(&self) -> usize {
        self.players.len()
    }

    /// Builds the game, rejecting out-of-range ids, partition violations and
    /// non-determinism. Dead ends and unreachable states are kept.
    pub fn build(self) -> Result<Game, GameError> {
        let n = self.players.len();
        for &(from, action, to) in &self.transitions {
            for s in [from, to] {
                if s.index() >= n {
                    return Err(GameError::UnknownState(s));
                }
            }
            let Some(info) = self.actions.get(action.index()) else {
                return Err(GameError::UnknownAction(action));
            };
            let player = self.players[from.index()];
            if info.owner != player {
                return Err(GameError::Partition { state: from, player, action, owner: info.owner });
            }
        }
        for labels in &self.labels {
            if let Some(&p) = labels.iter().find(|p| p.index() >= self.ap_names.len()) {
                return Err(GameError::UnknownProp(p));
            }
        }
        let mut initial = self.initial;
        if let Some(&s) = initial.iter().find(|s| s.index() >= n) {
            return Err(GameError::UnknownState(s));
        }
        initial.sort_unstable();
        initial.dedup();

        let mut transitions = self.transitions;
        transitions.sort_unstable();
        transitions.dedup();
        for w in transitions.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(GameError::Nondeterministic { state: w[0].0, action: w[0].1 });
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for &(from, _, _) in &transitions {
            offsets[from.index() + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let edges = transitions.iter().map(|&(_, action, target)| Edge { action, target }).collect();
        Ok(Game {
            players: self.players,
            initial,
            actions: self.actions,
            offsets,
            edges,
            labels: self.labels,
            ap_names: self.ap_names,
        })
    }
}

/// A finite run prefix `s₀ a₀ s₁ a₁ …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Run {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
}

impl Run {
    pub fn singleton(s: StateId) -> Self {
        Run { states: vec![s], actions: Vec::new() }
    }

    pub fn last(&self) -> StateId {
        *self.states.last().expect("run has at least one state")
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// True iff every step obeys `T`.
    pub fn is_valid(&self, g: &Game) -> bool {
        self.states.len() == self.actions.len() + 1
            && self.actions.iter().enumerate().all(|(i, &a)| g.step(self.states[i], a) == Ok(self.states[i + 1]))
    }

    /// Attaches the instantaneous rewards observed along the run: the oracle
    /// is queried at system steps and 0 is recorded at environment steps.
    pub fn observe<T: num_traits::Zero + Copy>(
        &self,
        g: &Game,
        mut reward: impl FnMut(StateId, ActionId) -> T,
    ) -> RunTrace<T> {
        let movers: Vec<Player> = self.states[..self.actions.len()].iter().map(|&s| g.player(s)).collect();
        let rewards = self
            .actions
            .iter()
            .zip(&movers)
            .enumerate()
            .map(|(i, (&a, &p))| match p {
                Player::System => reward(self.states[i], a),
                Player::Environment => T::zero(),
            })
            .collect();
        RunTrace { run: self.clone(), movers, rewards }
    }
}

/// A run prefix together with who moved at each step and the instantaneous
/// reward observed at that step.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace<T> {
    pub run: Run,
    pub movers: Vec<Player>,
    pub rewards: Vec<T>,
}

/// Lists every violation of the game invariants in a raw game document.
pub fn validate_game(doc: &crate::io::GameDoc) -> ValidationReport {
    crate::io::validate_doc(doc)
}
