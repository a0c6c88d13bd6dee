//! Maximally permissive safety synthesis for two-player turn-based games,
//! restriction of the game to the permissive envelope, and maximin-Q
//! learning inside it.
//!
//! The pipeline: build a [`game::Game`], solve a [`synth::SafetySpec`] for its
//! maximally permissive strategy, prune the game with
//! [`restrict::apply_strategy`], learn on the restricted game with
//! [`learn::maximin_q_learn`], and lift the greedy strategy back.

pub mod bruteforce;
pub mod cli;
pub mod counter;
pub mod formula;
pub mod game;
pub mod gridworld;
pub mod io;
pub mod learn;
pub mod restrict;
pub mod strategy;
pub mod synth;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar for Q-tables and value functions.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub use counter::{counter_augment, CounterAugmentation, CounterProduct};
pub use formula::Formula;
pub use game::{ActionId, Game, GameBuilder, GameError, Player, PropId, Run, RunTrace, StateId};
pub use restrict::{apply_strategy, lift_strategy, StateMap};
pub use strategy::{induced_runs, strategy_includes, FiniteMemoryStrategy, MemorylessStrategy};
pub use synth::{maximally_permissive, solve_safety, SafetySpec, WinningRegion};

pub type QTable64 = learn::QTable<f64>;
pub type QTable32 = learn::QTable<f32>;
pub type ValueFunction64 = learn::ValueFunction<f64>;
pub type ValueFunction32 = learn::ValueFunction<f32>;
pub type RewardTable64 = learn::RewardTable<f64>;
pub type RunTrace64 = game::RunTrace<f64>;
