//! File formats: game JSON, strategy JSON, state-map JSON and CSV tables.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{ActionId, Game, GameBuilder, GameError, Player, StateId, ValidationReport, Violation};
use crate::restrict::StateMap;
use crate::strategy::MemorylessStrategy;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub id: u32,
    pub player: Player,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub id: u32,
    pub owner: Player,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub from: u32,
    pub action: u32,
    pub to: u32,
}

/// The on-disk game format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub states: Vec<StateDoc>,
    pub initial: Vec<u32>,
    pub actions: Vec<ActionDoc>,
    pub transitions: Vec<TransitionDoc>,
    pub ap: Vec<String>,
}

/// A game loaded from a document, after reachability pruning.
#[derive(Clone, Debug)]
pub struct LoadedGame {
    pub game: Game,
    /// Ids of removed unreachable states, in the document's numbering.
    pub pruned: Vec<StateId>,
    /// `origin[new id] = document id`.
    pub origin: Vec<StateId>,
}

fn dense_check(ids: impl Iterator<Item = u32>, n: usize, kind: &'static str, out: &mut Vec<Violation>) {
    let mut seen = vec![false; n];
    for id in ids {
        if (id as usize) >= n || std::mem::replace(&mut seen[id as usize], true) {
            out.push(Violation::NonDenseIds { kind, id });
        }
    }
}

/// Every violation of the game invariants in `doc`.
pub fn validate_doc(doc: &GameDoc) -> ValidationReport {
    let mut v = Vec::new();
    let n = doc.states.len();
    dense_check(doc.states.iter().map(|s| s.id), n, "state", &mut v);
    dense_check(doc.actions.iter().map(|a| a.id), doc.actions.len(), "action", &mut v);
    let aps: HashSet<&str> = doc.ap.iter().map(String::as_str).collect();
    for s in &doc.states {
        for l in &s.labels {
            if !aps.contains(l.as_str()) {
                v.push(Violation::UnknownReference { kind: "proposition", id: l.clone() });
            }
        }
    }
    let player: HashMap<u32, Player> = doc.states.iter().map(|s| (s.id, s.player)).collect();
    let owner: HashMap<u32, Player> = doc.actions.iter().map(|a| (a.id, a.owner)).collect();
    if doc.initial.is_empty() {
        v.push(Violation::NoInitialStates);
    }
    for &i in &doc.initial {
        if !player.contains_key(&i) {
            v.push(Violation::UnknownReference { kind: "initial state", id: i.to_string() });
        }
    }
    let mut succ: BTreeMap<(u32, u32), Vec<StateId>> = BTreeMap::new();
    let mut out_degree = vec![0usize; n];
    for t in &doc.transitions {
        let (Some(&p), Some(&o)) = (player.get(&t.from), owner.get(&t.action)) else {
            let id = if player.contains_key(&t.from) { t.action } else { t.from };
            let kind = if player.contains_key(&t.from) { "action" } else { "state" };
            v.push(Violation::UnknownReference { kind, id: id.to_string() });
            continue;
        };
        if !player.contains_key(&t.to) {
            v.push(Violation::UnknownReference { kind: "state", id: t.to.to_string() });
            continue;
        }
        if p != o {
            v.push(Violation::Partition { state: StateId(t.from), action: ActionId(t.action) });
        }
        let targets = succ.entry((t.from, t.action)).or_default();
        if !targets.contains(&StateId(t.to)) {
            targets.push(StateId(t.to));
        }
        if (t.from as usize) < n {
            out_degree[t.from as usize] += 1;
        }
    }
    for (&(from, action), targets) in &succ {
        if targets.len() > 1 {
            let mut successors = targets.clone();
            successors.sort();
            v.push(Violation::Nondeterministic { state: StateId(from), action: ActionId(action), successors });
        }
    }
    // Reachability and dead ends only make sense once ids resolve.
    if v.is_empty() {
        let mut reach = vec![false; n];
        let mut stack: Vec<u32> = doc.initial.clone();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for t in &doc.transitions {
            adj[t.from as usize].push(t.to);
        }
        while let Some(s) = stack.pop() {
            if !std::mem::replace(&mut reach[s as usize], true) {
                stack.extend(adj[s as usize].iter().copied());
            }
        }
        for s in 0..n {
            if !reach[s] {
                v.push(Violation::Unreachable { state: StateId(s as u32) });
            }
            if out_degree[s] == 0 {
                v.push(Violation::DeadEnd { state: StateId(s as u32) });
            }
        }
    }
    ValidationReport { violations: v }
}

impl GameDoc {
    pub fn from_game(g: &Game) -> Self {
        let states = g
            .states()
            .map(|s| StateDoc {
                id: s.0,
                player: g.player(s),
                labels: g.labels(s).iter().map(|p| g.ap_names()[p.index()].clone()).collect(),
            })
            .collect();
        let actions = g
            .actions()
            .iter()
            .enumerate()
            .map(|(i, a)| ActionDoc { id: i as u32, owner: a.owner, name: a.name.clone() })
            .collect();
        let transitions = g
            .states()
            .flat_map(|s| {
                g.outgoing(s).iter().map(move |e| TransitionDoc { from: s.0, action: e.action.0, to: e.target.0 })
            })
            .collect();
        GameDoc {
            states,
            initial: g.initial().iter().map(|s| s.0).collect(),
            actions,
            transitions,
            ap: g.ap_names().to_vec(),
        }
    }

    /// Builds a game, pruning unreachable states. Fails on any other
    /// violation, including dead ends that survive pruning.
    pub fn to_game(&self) -> Result<LoadedGame, GameError> {
        let report = validate_doc(self);
        if report.hard_errors().next().is_some() {
            return Err(GameError::Invalid(report));
        }
        let mut b = GameBuilder::new();
        let ap: HashMap<&str, crate::game::PropId> =
            self.ap.iter().map(|name| (name.as_str(), b.add_prop(name.clone()))).collect();
        let mut actions: Vec<&ActionDoc> = self.actions.iter().collect();
        actions.sort_by_key(|a| a.id);
        for a in actions {
            b.add_action(a.name.clone(), a.owner);
        }
        let mut states: Vec<&StateDoc> = self.states.iter().collect();
        states.sort_by_key(|s| s.id);
        for s in states {
            b.add_state(s.player, s.labels.iter().map(|l| ap[l.as_str()]));
        }
        for &i in &self.initial {
            b.add_initial(StateId(i));
        }
        for t in &self.transitions {
            b.add_transition(StateId(t.from), ActionId(t.action), StateId(t.to));
        }
        let full = b.build()?;
        let pruned_game = full.prune_unreachable();
        let dead: Vec<Violation> = pruned_game
            .game
            .dead_ends()
            .into_iter()
            .map(|s| Violation::DeadEnd { state: pruned_game.origin[s.index()] })
            .collect();
        if !dead.is_empty() {
            return Err(GameError::Invalid(ValidationReport { violations: dead }));
        }
        let kept: HashSet<StateId> = pruned_game.origin.iter().copied().collect();
        let pruned = full.states().filter(|s| !kept.contains(s)).collect();
        Ok(LoadedGame { game: pruned_game.game, pruned, origin: pruned_game.origin })
    }
}

pub fn game_to_json(g: &Game) -> String {
    let mut s = serde_json::to_string_pretty(&GameDoc::from_game(g)).expect("game serializes");
    s.push('\n');
    s
}

pub fn parse_game_doc(text: &str) -> Result<GameDoc, FormatError> {
    if text.trim().is_empty() {
        return Err(FormatError::Invalid("empty game file".into()));
    }
    Ok(serde_json::from_str(text)?)
}

pub fn game_from_json(text: &str) -> Result<LoadedGame, FormatError> {
    Ok(parse_game_doc(text)?.to_game()?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyDoc {
    #[serde(rename = "type")]
    kind: String,
    allowed: BTreeMap<u32, Vec<u32>>,
}

pub fn strategy_to_json(mu: &MemorylessStrategy) -> String {
    let doc = StrategyDoc {
        kind: "memoryless".into(),
        allowed: mu.defined_states().map(|(s, acts)| (s.0, acts.iter().map(|a| a.0).collect())).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("strategy serializes");
    s.push('\n');
    s
}

/// Parses a strategy for a game with `num_states` states.
pub fn strategy_from_json(text: &str, num_states: usize) -> Result<MemorylessStrategy, FormatError> {
    let doc: StrategyDoc = serde_json::from_str(text)?;
    if doc.kind != "memoryless" {
        return Err(FormatError::Invalid(format!("unsupported strategy type `{}`", doc.kind)));
    }
    let mut mu = MemorylessStrategy::empty(num_states);
    for (s, acts) in doc.allowed {
        if s as usize >= num_states {
            return Err(FormatError::Invalid(format!("strategy mentions unknown state {s}")));
        }
        mu.set(StateId(s), acts.into_iter().map(ActionId));
    }
    Ok(mu)
}

pub fn state_map_to_json(map: &StateMap) -> String {
    let doc: BTreeMap<u32, u32> = map.pairs().map(|(h, g)| (h.0, g.0)).collect();
    let mut s = serde_json::to_string_pretty(&doc).expect("map serializes");
    s.push('\n');
    s
}

pub fn state_map_from_json(text: &str, original_states: usize) -> Result<StateMap, FormatError> {
    let doc: BTreeMap<u32, u32> = serde_json::from_str(text)?;
    let n = doc.len();
    let mut to_original = Vec::with_capacity(n);
    for (i, (h, g)) in doc.into_iter().enumerate() {
        if h as usize != i || g as usize >= original_states {
            return Err(FormatError::Invalid(format!("bad state map entry {h}: {g}")));
        }
        to_original.push(StateId(g));
    }
    let mut seen = HashSet::new();
    if !to_original.iter().all(|s| seen.insert(*s)) {
        return Err(FormatError::Invalid("state map is not injective".into()));
    }
    Ok(StateMap::new(to_original, original_states))
}

/// CSV with a header row; `rows` must already be in stable id order.
pub fn write_csv<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Parses `state,action,reward` rows into a map over `(s, a)` pairs.
pub fn parse_reward_csv(text: &str) -> Result<HashMap<(StateId, ActionId), f64>, FormatError> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("state")) {
            continue;
        }
        let err = |msg: &str| FormatError::Csv { line: i + 1, msg: msg.to_string() };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [s, a, r] = fields.as_slice() else {
            return Err(err("expected state,action,reward"));
        };
        let s: u32 = s.parse().map_err(|_| err("bad state id"))?;
        let a: u32 = a.parse().map_err(|_| err("bad action id"))?;
        let r: f64 = r.parse().map_err(|_| err("bad reward"))?;
        if !r.is_finite() || r < 0.0 {
            return Err(err("rewards must be finite and non-negative"));
        }
        out.insert((StateId(s), ActionId(a)), r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::g0;

    #[test]
    fn g0_document_validates() {
        let doc = GameDoc::from_game(&g0());
        assert!(validate_doc(&doc).is_empty());
    }

    #[test]
    fn flags_nondeterminism_and_partition() {
        let mut doc = GameDoc::from_game(&g0());
        doc.transitions.push(TransitionDoc { from: 0, action: 0, to: 1 });
        let report = validate_doc(&doc);
        assert_eq!(
            report.violations,
            vec![Violation::Nondeterministic {
                state: StateId(0),
                action: ActionId(0),
                successors: vec![StateId(0), StateId(1)],
            }]
        );

        let mut doc = GameDoc::from_game(&g0());
        doc.states[1].player = Player::Environment;
        let report = validate_doc(&doc);
        assert!(report.violations.contains(&Violation::Partition { state: StateId(1), action: ActionId(2) }));
        assert!(doc.to_game().is_err());
    }

    #[test]
    fn unreachable_states_are_pruned_on_load() {
        let mut doc = GameDoc::from_game(&g0());
        doc.initial = vec![1];
        let loaded = doc.to_game().unwrap();
        assert_eq!(loaded.pruned, vec![StateId(0)]);
        assert_eq!(loaded.game.num_states(), 1);
    }

    #[test]
    fn reachable_dead_end_is_an_input_error() {
        let mut doc = GameDoc::from_game(&g0());
        doc.transitions.retain(|t| t.from != 1);
        assert!(matches!(doc.to_game(), Err(GameError::Invalid(_))));
    }

    #[test]
    fn empty_file_is_malformed() {
        assert!(matches!(game_from_json(""), Err(FormatError::Invalid(_))));
        assert!(matches!(game_from_json("{"), Err(FormatError::Json(_))));
    }

    #[test]
    fn strategy_and_map_round_trip() {
        let mut mu = MemorylessStrategy::empty(3);
        mu.set(StateId(0), [ActionId(4), ActionId(1)]);
        mu.set(StateId(2), [ActionId(0)]);
        let text = strategy_to_json(&mu);
        assert!(text.contains("\"type\": \"memoryless\""));
        assert_eq!(strategy_from_json(&text, 3).unwrap(), mu);
        assert!(strategy_from_json(&text, 2).is_err());

        let map = StateMap::new(vec![StateId(3), StateId(0)], 5);
        assert_eq!(state_map_from_json(&state_map_to_json(&map), 5).unwrap(), map);
    }

    #[test]
    fn reward_csv() {
        let table = parse_reward_csv("state,action,reward\n0,1,2.5\n3,0,0\n").unwrap();
        assert_eq!(table[&(StateId(0), ActionId(1))], 2.5);
        assert!(parse_reward_csv("0,1,-1\n").is_err());
    }
}
