//! The DQN curriculum agent.

mod dqn;
mod replay;
mod schedule;

pub use dqn::{argmax, n_step_target, DqnAgent, DqnConfig};
pub use replay::{Observation, ReplayBuffer, Transition};
pub use schedule::EpsilonSchedule;
