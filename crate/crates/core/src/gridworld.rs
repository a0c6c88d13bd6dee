//! Pursuit-evasion on an N×N grid: the two robots move in turns, the system
//! must never share a cell with the environment, and is rewarded for being
//! diagonal to it.
//!
//! Cells are numbered row-major, `cell = row·N + col`. The environment's
//! position is labeled `x_i`, the system's `y_j`, and the turn `t_1`
//! (system to move) or `t_0`. "Up" increases the row.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counter::{counter_augment, CounterAugmentation, CounterProduct};
use crate::formula::Formula;
use crate::game::{ActionId, Game, GameBuilder, Player, StateId};
use crate::learn::RewardOracle;
use crate::synth::{SafetySpec, SynthError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid side must be at least 2, got {0}")]
    TooSmall(u32),
    #[error("cell {cell} is outside the {n}x{n} grid")]
    OutOfRange { cell: u32, n: u32 },
    #[error("both robots start in cell {0}")]
    SameStart(u32),
    #[error("example 3 needs counter_max and liveness_targets")]
    MissingCounter,
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n: u32,
    /// With both starts set, `I` is that single state; otherwise `I` is every
    /// non-collision placement with `first_mover` to move.
    pub system_start: Option<u32>,
    pub env_start: Option<u32>,
    pub first_mover: Player,
    pub liveness_targets: Option<(u32, u32)>,
    pub counter_max: Option<u32>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 3,
            system_start: None,
            env_start: None,
            first_mover: Player::System,
            liveness_targets: None,
            counter_max: None,
        }
    }
}

impl GridConfig {
    pub fn example1(n: u32) -> Self {
        GridConfig { n, ..GridConfig::default() }
    }

    /// Targets are the corners `N²−N` and `N−1`.
    pub fn example3(n: u32, counter_max: u32) -> Self {
        GridConfig {
            n,
            liveness_targets: Some((n * n - n, n - 1)),
            counter_max: Some(counter_max),
            ..GridConfig::default()
        }
    }

    fn check(&self) -> Result<(), GridError> {
        let n = self.n;
        if n < 2 {
            return Err(GridError::TooSmall(n));
        }
        let cells = [self.system_start, self.env_start]
            .into_iter()
            .flatten()
            .chain(self.liveness_targets.into_iter().flat_map(|(a, b)| [a, b]));
        for cell in cells {
            if cell >= n * n {
                return Err(GridError::OutOfRange { cell, n });
            }
        }
        if let (Some(a), Some(b)) = (self.system_start, self.env_start) {
            if a == b {
                return Err(GridError::SameStart(a));
            }
        }
        Ok(())
    }
}

/// Where both robots are and whose turn it is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub env: u32,
    pub sys: u32,
    pub turn: Player,
}

/// Move directions in action-id order; the system additionally has `stay`.
pub const DIRECTIONS: [(&str, i32, i32); 4] = [("up", 1, 0), ("down", -1, 0), ("left", 0, -1), ("right", 0, 1)];

#[derive(Clone, Debug)]
pub struct GridGame {
    pub n: u32,
    pub game: Game,
    pub spec: SafetySpec,
    /// `placement[s]` for every state of `game`.
    pub placement: Vec<Placement>,
    /// States of the full product dropped as unreachable.
    pub pruned: usize,
}

impl GridGame {
    pub fn find(&self, p: Placement) -> Option<StateId> {
        self.placement.iter().position(|&q| q == p).map(|i| StateId(i as u32))
    }
}

/// Example 3: a grid game with a counter on system moves.
#[derive(Clone, Debug)]
pub struct CounterGridGame {
    pub base: GridGame,
    pub product: CounterProduct,
    pub spec: SafetySpec,
    pub c_max: u32,
}

impl CounterGridGame {
    pub fn game(&self) -> &Game {
        &self.product.game
    }

    pub fn placement(&self, s: StateId) -> (Placement, u32) {
        let (base, c) = self.product.origin[s.index()];
        (self.base.placement[base.index()], c)
    }
}

pub fn step_cell(n: u32, cell: u32, dr: i32, dc: i32) -> Option<u32> {
    let (r, c) = ((cell / n) as i32 + dr, (cell % n) as i32 + dc);
    (r >= 0 && c >= 0 && r < n as i32 && c < n as i32).then(|| r as u32 * n + c as u32)
}

/// 4-neighbours of `cell` (no staying).
pub fn neighbours(n: u32, cell: u32) -> impl Iterator<Item = u32> {
    DIRECTIONS.iter().filter_map(move |&(_, dr, dc)| step_cell(n, cell, dr, dc))
}

pub fn is_adjacent(n: u32, a: u32, b: u32) -> bool {
    neighbours(n, a).any(|c| c == b)
}

pub fn is_diagonal(n: u32, a: u32, b: u32) -> bool {
    let (ra, ca) = ((a / n) as i32, (a % n) as i32);
    let (rb, cb) = ((b / n) as i32, (b % n) as i32);
    (ra - rb).abs() == 1 && (ca - cb).abs() == 1
}

/// `φ₀ = ⋀ᵢ (¬xᵢ ∨ ¬yᵢ)`.
pub fn collision_free(n: u32) -> Formula {
    Formula::And(
        (0..n * n)
            .map(|i| {
                Formula::Or(vec![
                    Formula::not(Formula::prop(format!("x_{i}"))),
                    Formula::not(Formula::prop(format!("y_{i}"))),
                ])
            })
            .collect(),
    )
}

/// `φ₁ = ⋀ᵢ (○xᵢ → ¬○yᵢ)`.
pub fn next_collision_free(n: u32) -> Formula {
    Formula::And(
        (0..n * n)
            .map(|i| Formula::implies(Formula::next(format!("x_{i}")), Formula::not(Formula::next(format!("y_{i}")))))
            .collect(),
    )
}

/// Example 1. The full product `Pos × Pos × {0,1}` (collision placements
/// included, so the solver sees the environment's winning moves) pruned to
/// what `I` reaches.
pub fn build_example1(cfg: &GridConfig) -> Result<GridGame, GridError> {
    cfg.check()?;
    let n = cfg.n;
    let cells = n * n;
    let mut b = GameBuilder::new();
    let xs: Vec<_> = (0..cells).map(|i| b.add_prop(format!("x_{i}"))).collect();
    let ys: Vec<_> = (0..cells).map(|i| b.add_prop(format!("y_{i}"))).collect();
    let t0 = b.add_prop("t_0");
    let t1 = b.add_prop("t_1");

    let mut sys_moves: Vec<(ActionId, i32, i32)> =
        DIRECTIONS.iter().map(|&(name, dr, dc)| (b.add_action(format!("{name}_s"), Player::System), dr, dc)).collect();
    sys_moves.push((b.add_action("stay_s", Player::System), 0, 0));
    let env_moves: Vec<(ActionId, i32, i32)> = DIRECTIONS
        .iter()
        .map(|&(name, dr, dc)| (b.add_action(format!("{name}_e"), Player::Environment), dr, dc))
        .collect();

    // id = (turn · cells + env) · cells + sys, turn 1 = system.
    let id = |p: Placement| {
        let t = u32::from(p.turn == Player::System);
        StateId((t * cells + p.env) * cells + p.sys)
    };
    let mut placement = Vec::with_capacity(2 * (cells * cells) as usize);
    for turn in [Player::Environment, Player::System] {
        for env in 0..cells {
            for sys in 0..cells {
                let tl = if turn == Player::System { t1 } else { t0 };
                let s = b.add_state(turn, [xs[env as usize], ys[sys as usize], tl]);
                debug_assert_eq!(s, id(Placement { env, sys, turn }));
                placement.push(Placement { env, sys, turn });
            }
        }
    }
    for &p in &placement {
        let from = id(p);
        match p.turn {
            Player::System => {
                for &(a, dr, dc) in &sys_moves {
                    if let Some(sys) = step_cell(n, p.sys, dr, dc) {
                        b.add_transition(from, a, id(Placement { sys, turn: Player::Environment, ..p }));
                    }
                }
            }
            Player::Environment => {
                for &(a, dr, dc) in &env_moves {
                    if let Some(env) = step_cell(n, p.env, dr, dc) {
                        b.add_transition(from, a, id(Placement { env, turn: Player::System, ..p }));
                    }
                }
            }
        }
    }
    match (cfg.system_start, cfg.env_start) {
        (Some(sys), Some(env)) => b.add_initial(id(Placement { env, sys, turn: cfg.first_mover })),
        _ => {
            for env in 0..cells {
                for sys in 0..cells {
                    let fits = env != sys
                        && cfg.system_start.is_none_or(|c| c == sys)
                        && cfg.env_start.is_none_or(|c| c == env);
                    if fits {
                        b.add_initial(id(Placement { env, sys, turn: cfg.first_mover }));
                    }
                }
            }
        }
    }
    let full = b.build().map_err(SynthError::from)?;
    let pruned = full.prune_unreachable();
    let placement = pruned.origin.iter().map(|s| placement[s.index()]).collect();
    Ok(GridGame {
        n,
        game: pruned.game,
        spec: SafetySpec::new(collision_free(n), next_collision_free(n)),
        placement,
        pruned: pruned.removed,
    })
}

/// Example 3: Example 1 with a counter on system moves, reset whenever the
/// system arrives at either liveness target. The safety spec is unchanged;
/// the bound lives in the product's missing edges.
pub fn build_example3(cfg: &GridConfig) -> Result<CounterGridGame, GridError> {
    let (Some(c_max), Some((a, b))) = (cfg.counter_max, cfg.liveness_targets) else {
        return Err(GridError::MissingCounter);
    };
    if c_max == 0 {
        return Err(GridError::MissingCounter);
    }
    let base = build_example1(cfg)?;
    let reset = Formula::Or(vec![Formula::prop(format!("y_{a}")), Formula::prop(format!("y_{b}"))]);
    let product = counter_augment(&base.game, &CounterAugmentation::new(reset, c_max))?;
    let spec = base.spec.clone();
    Ok(CounterGridGame { base, product, spec, c_max })
}

/// `R(s, a) = 1` when the robots are diagonal to each other after the move.
///
/// Positions are decoded from the `x_i`/`y_j` labels, so the oracle works on
/// any game derived from a grid game (restricted, counter-augmented).
#[derive(Clone, Debug)]
pub struct DiagonalReward {
    n: u32,
    /// `(env, sys)` per state.
    pos: Vec<(u32, u32)>,
    succ: Vec<Vec<(ActionId, StateId)>>,
}

impl DiagonalReward {
    pub fn new(g: &Game, n: u32) -> Self {
        let mut kind = vec![None; g.ap_names().len()];
        for (i, name) in g.ap_names().iter().enumerate() {
            let parsed =
                name.strip_prefix("x_").map(|c| (true, c)).or_else(|| name.strip_prefix("y_").map(|c| (false, c)));
            if let Some((is_env, c)) = parsed {
                if let Ok(cell) = c.parse::<u32>() {
                    kind[i] = Some((is_env, cell));
                }
            }
        }
        let pos = g
            .states()
            .map(|s| {
                let (mut env, mut sys) = (u32::MAX, u32::MAX);
                for p in g.labels(s) {
                    match kind[p.index()] {
                        Some((true, c)) => env = c,
                        Some((false, c)) => sys = c,
                        None => {}
                    }
                }
                (env, sys)
            })
            .collect();
        let succ = g.states().map(|s| g.outgoing(s).iter().map(|e| (e.action, e.target)).collect()).collect();
        DiagonalReward { n, pos, succ }
    }

    pub fn diagonal_at(&self, s: StateId) -> bool {
        let (e, y) = self.pos[s.index()];
        e != u32::MAX && y != u32::MAX && is_diagonal(self.n, e, y)
    }
}

impl RewardOracle<f64> for DiagonalReward {
    fn reward(&self, s: StateId, a: ActionId) -> f64 {
        let next = self.succ[s.index()].iter().find(|&&(b, _)| b == a).map(|&(_, t)| t);
        match next {
            Some(t) if self.diagonal_at(t) => 1.0,
            _ => 0.0,
        }
    }
}

impl RewardOracle<f32> for DiagonalReward {
    fn reward(&self, s: StateId, a: ActionId) -> f32 {
        RewardOracle::<f64>::reward(self, s, a) as f32
    }
}

/// Example 2's requirement in GR(1) form: if the environment visits both
/// corners infinitely often, the system must never collide and visit them
/// infinitely often too. Text only; its permissive synthesis is not provided.
pub fn example2_formula(n: u32) -> String {
    let (a, b) = (n * n - n, n - 1);
    format!(
        "([]<>x_{a} & []<>x_{b}) -> ({phi0} & [](({phi1})) & []<>(y_{a} | y_{b}))",
        phi0 = collision_free(n),
        phi1 = next_collision_free(n),
    )
}
