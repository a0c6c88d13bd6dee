//! Maximin-Q learning on an alternating zero-sum game.
//!
//! One table holds the action values of both players. The system maximizes,
//! the environment minimizes, and both explore ε-greedily on that table. Each
//! step applies one temporal-difference update
//! `q(s,a) ← q(s,a) + α (r + γ_step v(s') − q(s,a))` with `γ_step = γ` after a
//! system move and 1 after an environment move.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Game, Player, StateId};
use crate::learn::reward::RewardOracle;
use crate::learn::value::{QTable, ValueFunction};
use crate::Scalar;

/// PRNG stream ids derived from the run seed.
pub const LEARNER_STREAM: u64 = 1;
pub const EPISODE_STREAM: u64 = 2;

/// Per-pair step size as a function of the number of earlier updates `n`
/// of that pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSize {
    /// `h / (h + n)`.
    Harmonic { half_life: f64 },
    /// `1 / (1 + n)^ω`.
    Polynomial { exponent: f64 },
    /// Fixed `α`; not Robbins–Monro, but exact on deterministic games when 1.
    Constant { alpha: f64 },
}

impl StepSize {
    pub fn alpha(&self, n: u32) -> f64 {
        let n = n as f64;
        match *self {
            StepSize::Harmonic { half_life } => half_life / (half_life + n),
            StepSize::Polynomial { exponent } => (1.0 + n).powf(-exponent),
            StepSize::Constant { alpha } => alpha,
        }
    }

    /// Whether `Σα = ∞` and `Σα² < ∞`.
    pub fn robbins_monro(&self) -> bool {
        match *self {
            StepSize::Harmonic { half_life } => half_life > 0.0,
            StepSize::Polynomial { exponent } => exponent > 0.5 && exponent <= 1.0,
            StepSize::Constant { .. } => false,
        }
    }
}

/// ε decays linearly from `start` to `end` over the first `fraction` of the
/// iteration budget, then stays at `end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub start: f64,
    pub end: f64,
    pub fraction: f64,
}

impl Exploration {
    pub fn epsilon(&self, iteration: u64, budget: u64) -> f64 {
        let horizon = (self.fraction * budget as f64).max(1.0);
        let t = (iteration as f64 / horizon).min(1.0);
        self.start + (self.end - self.start) * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentPolicy {
    /// ε-greedy minimizer on the shared table.
    EpsilonGreedyMin,
    /// Uniformly random environment moves, for ablations.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub gamma: f64,
    pub step_size: StepSize,
    pub exploration: Exploration,
    pub environment: EnvironmentPolicy,
    pub max_iterations: u64,
    pub episode_length: u64,
    /// Iterations per `max |ΔV|` measurement.
    pub window: u64,
    pub threshold: f64,
    /// Consecutive windows below `threshold` required to stop.
    pub patience: u32,
    pub seed: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            gamma: 0.9,
            step_size: StepSize::Harmonic { half_life: 1000.0 },
            exploration: Exploration { start: 1.0, end: 0.05, fraction: 0.5 },
            environment: EnvironmentPolicy::EpsilonGreedyMin,
            max_iterations: 20_000_000,
            episode_length: 100,
            window: 10_000,
            threshold: 1e-9,
            patience: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceLog {
    /// `(iteration at window end, max |ΔV| over the window)`.
    pub windows: Vec<(u64, f64)>,
    /// Iteration at which the stopping rule fired, if it did.
    pub converged_at: Option<u64>,
    pub iterations: u64,
}

impl ConvergenceLog {
    pub fn to_csv(&self) -> String {
        crate::io::write_csv(
            &["iteration", "max_delta_v"],
            self.windows.iter().map(|(i, d)| vec![i.to_string(), format!("{d:e}")]),
        )
    }
}

#[derive(Clone, Debug)]
pub struct Learned<T> {
    pub q: QTable<T>,
    pub v: ValueFunction<T>,
    pub log: ConvergenceLog,
    /// Updates applied to each pair.
    pub visits: Vec<u32>,
}

/// Callback receiving the iteration count and the current table.
pub type Observer<'a, T> = &'a mut dyn FnMut(u64, &QTable<T>);

/// Runs maximin-Q on `ghat`, querying `oracle` only at the system
/// transitions it actually takes.
///
/// Episodes last `episode_length` steps and restart from a uniformly random
/// initial state of `ghat`. Every `window` iterations the full value function
/// is recomputed and `max |ΔV|` logged; learning stops after `patience`
/// consecutive windows below `threshold` or at `max_iterations`. When
/// `observer` is given it is called with the table at each window end.
pub fn maximin_q_learn<T: Scalar>(
    ghat: &Game,
    oracle: &impl RewardOracle<T>,
    cfg: &LearnConfig,
    mut observer: Option<Observer<'_, T>>,
) -> Learned<T> {
    assert!(!ghat.initial().is_empty(), "game has no initial states");
    let gamma = T::from_f64(cfg.gamma).expect("gamma representable");
    let mut q = QTable::zeros(ghat, gamma);
    let mut visits = vec![0u32; ghat.num_edges()];
    let mut log = ConvergenceLog::default();

    let mut learner_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    learner_rng.set_stream(LEARNER_STREAM);
    let mut episode_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    episode_rng.set_stream(EPISODE_STREAM);

    let initial = ghat.initial();
    let pick_start = |rng: &mut ChaCha8Rng| initial[rng.random_range(0..initial.len())];
    let mut state = pick_start(&mut episode_rng);
    let mut steps_in_episode = 0u64;
    let mut last_v = q.values(ghat);
    let mut quiet = 0u32;
    let window = cfg.window.max(1);

    let mut iteration = 0u64;
    while iteration < cfg.max_iterations {
        if steps_in_episode == cfg.episode_length || ghat.is_dead_end(state) {
            state = pick_start(&mut episode_rng);
            steps_in_episode = 0;
        }
        let range = ghat.edge_range(state);
        assert!(!range.is_empty(), "dead end {state} in learning game");
        let epsilon = cfg.exploration.epsilon(iteration, cfg.max_iterations);
        let player = ghat.player(state);
        let explore = match (player, cfg.environment) {
            (Player::Environment, EnvironmentPolicy::Uniform) => true,
            _ => learner_rng.random_bool(epsilon.clamp(0.0, 1.0)),
        };
        let edge =
            if explore { range.start + learner_rng.random_range(0..range.len()) } else { best_edge(&q, range, player) };
        let e = ghat.edge(edge);
        let (reward, disc) = match player {
            Player::System => (oracle.reward(state, e.action), gamma),
            Player::Environment => (T::zero(), T::one()),
        };
        let target = reward + disc * q.state_value(ghat, e.target);
        let alpha = T::from_f64(cfg.step_size.alpha(visits[edge])).expect("alpha representable");
        let old = q.edge(edge);
        *q.edge_mut(edge) = old + alpha * (target - old);
        visits[edge] = visits[edge].saturating_add(1);

        state = e.target;
        steps_in_episode += 1;
        iteration += 1;

        if iteration.is_multiple_of(window) {
            let v = q.values(ghat);
            let delta = v.sup_distance(&last_v).to_f64().unwrap_or(f64::INFINITY);
            log.windows.push((iteration, delta));
            last_v = v;
            if let Some(obs) = observer.as_mut() {
                obs(iteration, &q);
            }
            if delta < cfg.threshold {
                quiet += 1;
                if quiet >= cfg.patience {
                    log.converged_at = Some(iteration);
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    log.iterations = iteration;
    let v = q.values(ghat);
    Learned { q, v, log, visits }
}

fn best_edge<T: Scalar>(q: &QTable<T>, range: std::ops::Range<usize>, player: Player) -> usize {
    let mut best = range.start;
    for i in range {
        let better = match player {
            Player::System => q.edge(i) > q.edge(best),
            Player::Environment => q.edge(i) < q.edge(best),
        };
        if better {
            best = i;
        }
    }
    best
}

/// The iteration at which a fixed-seed run's `max |ΔV|` last exceeded
/// `threshold`; the learning-iterations figure reported in summaries.
pub fn settled_at(log: &ConvergenceLog, threshold: f64) -> u64 {
    log.windows.iter().rev().find(|(_, d)| *d >= threshold).map(|(i, _)| *i).unwrap_or(0)
}

/// Initial-state id of the episode-start stream for documentation and tests.
pub fn episode_starts(ghat: &Game, seed: u64, count: usize) -> Vec<StateId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EPISODE_STREAM);
    let initial = ghat.initial();
    (0..count).map(|_| initial[rng.random_range(0..initial.len())]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ActionId, GameBuilder};

    fn self_loop() -> Game {
        let mut b = GameBuilder::new();
        let a = b.add_action("loop", Player::System);
        let s = b.add_state(Player::System, []);
        b.add_initial(s);
        b.add_transition(s, a, s);
        b.build().unwrap()
    }

    #[test]
    fn self_loop_learns_geometric_value() {
        let g = self_loop();
        let cfg = LearnConfig { max_iterations: 200_000, seed: 3, ..LearnConfig::default() };
        let learned = maximin_q_learn::<f64>(&g, &|_: StateId, _: ActionId| 1.0, &cfg, None);
        assert!((learned.q.edge(0) - 10.0).abs() < 1e-6, "q = {}", learned.q.edge(0));
        assert!(learned.log.converged_at.is_some());
    }

    #[test]
    fn schedules() {
        let h = StepSize::Harmonic { half_life: 10.0 };
        assert_eq!(h.alpha(0), 1.0);
        assert_eq!(h.alpha(10), 0.5);
        assert!(h.robbins_monro());
        let p = StepSize::Polynomial { exponent: 0.85 };
        assert_eq!(p.alpha(0), 1.0);
        assert!(p.robbins_monro());
        assert!(!StepSize::Constant { alpha: 1.0 }.robbins_monro());
        let e = Exploration { start: 1.0, end: 0.05, fraction: 0.5 };
        assert_eq!(e.epsilon(0, 100), 1.0);
        assert!((e.epsilon(25, 100) - 0.525).abs() < 1e-12);
        assert!((e.epsilon(50, 100) - 0.05).abs() < 1e-12);
        assert!((e.epsilon(99, 100) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let g = self_loop();
        let cfg = LearnConfig { max_iterations: 5_000, window: 1_000, seed: 11, ..LearnConfig::default() };
        let a = maximin_q_learn::<f64>(&g, &|_: StateId, _: ActionId| 0.5, &cfg, None);
        let b = maximin_q_learn::<f64>(&g, &|_: StateId, _: ActionId| 0.5, &cfg, None);
        assert_eq!(a.q, b.q);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn f32_tables_work() {
        let g = self_loop();
        let cfg = LearnConfig { max_iterations: 100_000, ..LearnConfig::default() };
        let learned = maximin_q_learn::<f32>(&g, &|_: StateId, _: ActionId| 1.0f32, &cfg, None);
        assert!((learned.q.edge(0) - 10.0).abs() < 1e-3);
    }
}
