//! Maximally permissive strategies for safety specifications `φ₀ ∧ □φ₁`.
//!
//! `φ₀` is an assertion over the initial label and `φ₁` an assertion over
//! the label pair of every transition. The winning region is the greatest
//! fixed point of the safe-predecessor operator, computed by backward
//! elimination with per-state surviving-out-degree counters, so each edge is
//! touched a constant number of times.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{BoundFormula, Formula, FormulaError};
use crate::game::{ActionId, Game, GameError, Player, StateId};
use crate::strategy::MemorylessStrategy;

/// `φ₀ ∧ □φ₁`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetySpec {
    pub phi0: Formula,
    pub phi1: Formula,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("specification is unrealizable: initial state {state} {reason}")]
    Unrealizable { state: StateId, reason: Unrealizable },
    #[error("line {line}: {msg}")]
    SpecSyntax { line: usize, msg: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unrealizable {
    ViolatesInitialAssertion,
    OutsideWinningRegion,
}

impl fmt::Display for Unrealizable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unrealizable::ViolatesInitialAssertion => f.write_str("violates phi0"),
            Unrealizable::OutsideWinningRegion => f.write_str("is outside the winning region"),
        }
    }
}

impl SafetySpec {
    pub fn new(phi0: Formula, phi1: Formula) -> Self {
        SafetySpec { phi0, phi1 }
    }

    pub fn trivial() -> Self {
        SafetySpec::new(Formula::Const(true), Formula::Const(true))
    }

    pub fn bind(&self, g: &Game) -> Result<BoundSpec, SynthError> {
        if self.phi0.mentions_next() {
            return Err(FormulaError::NextInInitial(self.phi0.to_string()).into());
        }
        Ok(BoundSpec { phi0: self.phi0.bind(g)?, phi1: self.phi1.bind(g)? })
    }
}

/// Text form: one `phi0:` and one `phi1:` line, `#` comments. A missing
/// line means `true`.
impl FromStr for SafetySpec {
    type Err = SynthError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut phi0 = None;
        let mut phi1 = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |msg: String| SynthError::SpecSyntax { line: i + 1, msg };
            let (key, body) = line.split_once(':').ok_or_else(|| syntax("expected `phi0:` or `phi1:`".into()))?;
            let slot = match key.trim() {
                "phi0" => &mut phi0,
                "phi1" => &mut phi1,
                other => return Err(syntax(format!("unknown key `{other}`"))),
            };
            if slot.is_some() {
                return Err(syntax(format!("duplicate `{}`", key.trim())));
            }
            *slot = Some(Formula::parse(body).map_err(|e| syntax(e.to_string()))?);
        }
        Ok(SafetySpec::new(phi0.unwrap_or(Formula::Const(true)), phi1.unwrap_or(Formula::Const(true))))
    }
}

impl fmt::Display for SafetySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "phi0: {}", self.phi0)?;
        writeln!(f, "phi1: {}", self.phi1)
    }
}

#[derive(Clone, Debug)]
pub struct BoundSpec {
    pub phi0: BoundFormula,
    pub phi1: BoundFormula,
}

impl BoundSpec {
    pub fn initial_ok(&self, g: &Game, s: StateId) -> bool {
        self.phi0.eval(g.labels(s), &[])
    }

    pub fn edge_ok(&self, g: &Game, from: StateId, to: StateId) -> bool {
        self.phi1.eval(g.labels(from), g.labels(to))
    }
}

/// Why a state left the winning region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elimination {
    /// No available action at all.
    DeadEnd,
    /// System state whose every action violates `φ₁` or leads to a losing state.
    NoSafeAction,
    /// Environment state with an action that violates `φ₁`.
    EnvironmentViolates(ActionId),
    /// Environment state with an action into a losing state.
    EnvironmentEscapes(ActionId),
}

/// The greatest set of states from which the system can keep every run
/// inside `□φ₁`, with the actions that keep it there.
#[derive(Clone, Debug)]
pub struct WinningRegion {
    member: Vec<bool>,
    allowed: Vec<Vec<ActionId>>,
    reason: Vec<Option<Elimination>>,
    /// Number of edge visits performed by the solver.
    pub edge_work: usize,
}

impl WinningRegion {
    pub fn contains(&self, s: StateId) -> bool {
        self.member[s.index()]
    }

    pub fn members(&self) -> &[bool] {
        &self.member
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Surviving actions at a winning system state; empty elsewhere.
    pub fn allowed(&self, s: StateId) -> &[ActionId] {
        &self.allowed[s.index()]
    }

    pub fn elimination(&self, s: StateId) -> Option<Elimination> {
        self.reason[s.index()]
    }

    pub fn strategy(&self) -> MemorylessStrategy {
        let mut mu = MemorylessStrategy::empty(self.member.len());
        for (i, actions) in self.allowed.iter().enumerate() {
            if !actions.is_empty() {
                mu.set(StateId(i as u32), actions.iter().copied());
            }
        }
        mu
    }
}

/// Computes the winning region of `□φ₁` on `g`.
///
/// Edges violating `φ₁` are deleted first. A system state then loses when
/// its surviving out-degree reaches zero; an environment state loses as soon
/// as one of its actions violates `φ₁` or leads to a losing state. States
/// without any action lose.
pub fn solve_safety(g: &Game, spec: &SafetySpec) -> Result<WinningRegion, SynthError> {
    let bound = spec.bind(g)?;
    Ok(solve_bound(g, &bound))
}

pub fn solve_bound(g: &Game, spec: &BoundSpec) -> WinningRegion {
    let n = g.num_states();
    let m = g.num_edges();
    let mut work = 0usize;

    let mut alive = vec![false; m];
    let mut degree = vec![0u32; n];
    let mut member = vec![true; n];
    let mut reason: Vec<Option<Elimination>> = vec![None; n];
    let mut queue = VecDeque::new();
    let mut in_offsets = vec![0usize; n + 1];

    for s in g.states() {
        let range = g.edge_range(s);
        if range.is_empty() {
            member[s.index()] = false;
            reason[s.index()] = Some(Elimination::DeadEnd);
            queue.push_back(s);
            continue;
        }
        for i in range {
            work += 1;
            let e = g.edge(i);
            in_offsets[e.target.index() + 1] += 1;
            if spec.edge_ok(g, s, e.target) {
                alive[i] = true;
                degree[s.index()] += 1;
            } else if g.player(s) == Player::Environment && member[s.index()] {
                member[s.index()] = false;
                reason[s.index()] = Some(Elimination::EnvironmentViolates(e.action));
                queue.push_back(s);
            }
        }
        if g.is_system(s) && degree[s.index()] == 0 && member[s.index()] {
            member[s.index()] = false;
            reason[s.index()] = Some(Elimination::NoSafeAction);
            queue.push_back(s);
        }
    }

    // Incoming edge lists in compressed-row form.
    for i in 0..n {
        in_offsets[i + 1] += in_offsets[i];
    }
    let mut fill = in_offsets.clone();
    let mut incoming = vec![(StateId(0), 0usize); m];
    for s in g.states() {
        for i in g.edge_range(s) {
            work += 1;
            let t = g.edge(i).target.index();
            incoming[fill[t]] = (s, i);
            fill[t] += 1;
        }
    }

    while let Some(dead) = queue.pop_front() {
        for &(pred, i) in &incoming[in_offsets[dead.index()]..in_offsets[dead.index() + 1]] {
            if !alive[i] {
                continue;
            }
            work += 1;
            alive[i] = false;
            if !member[pred.index()] {
                continue;
            }
            match g.player(pred) {
                Player::System => {
                    degree[pred.index()] -= 1;
                    if degree[pred.index()] == 0 {
                        member[pred.index()] = false;
                        reason[pred.index()] = Some(Elimination::NoSafeAction);
                        queue.push_back(pred);
                    }
                }
                Player::Environment => {
                    member[pred.index()] = false;
                    reason[pred.index()] = Some(Elimination::EnvironmentEscapes(g.edge(i).action));
                    queue.push_back(pred);
                }
            }
        }
    }

    let allowed = g
        .states()
        .map(|s| {
            if member[s.index()] && g.is_system(s) {
                g.edge_range(s).filter(|&i| alive[i]).map(|i| g.edge(i).action).collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    WinningRegion { member, allowed, reason, edge_work: work }
}

/// The memoryless maximally permissive strategy `μ_p^max`.
///
/// Fails when some initial state violates `φ₀` or lies outside the winning
/// region.
pub fn maximally_permissive(g: &Game, spec: &SafetySpec) -> Result<MemorylessStrategy, SynthError> {
    let bound = spec.bind(g)?;
    let region = solve_bound(g, &bound);
    check_realizable(g, &bound, &region)?;
    Ok(region.strategy())
}

pub fn check_realizable(g: &Game, spec: &BoundSpec, region: &WinningRegion) -> Result<(), SynthError> {
    for &s in g.initial() {
        if !spec.initial_ok(g, s) {
            return Err(SynthError::Unrealizable { state: s, reason: Unrealizable::ViolatesInitialAssertion });
        }
        if !region.contains(s) {
            return Err(SynthError::Unrealizable { state: s, reason: Unrealizable::OutsideWinningRegion });
        }
    }
    Ok(())
}
