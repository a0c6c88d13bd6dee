//! Rewards, value functions and maximin-Q learning on a restricted game.

pub mod maximin_q;
pub mod reward;
pub mod value;

pub use maximin_q::{maximin_q_learn, ConvergenceLog, EnvironmentPolicy, Exploration, LearnConfig, Learned, StepSize};
pub use reward::{discounted_reward, worst_case_reward, RewardBounds, RewardOracle, RewardTable};
pub use value::{greedy_strategy, maximin_value_iteration, QTable, Solved, ValueFunction};
