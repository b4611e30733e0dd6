//! Learned training curricula.
//!
//! A trainee model is trained on data split into noise bins. At every step a
//! curriculum picks the bin the next minibatch comes from. The learned
//! curriculum is a DQN agent that observes the trainee's likelihoods on a
//! fixed prototype batch and is rewarded by dev-set likelihood improvements;
//! a zoo of fixed and heuristic curricula provides the baselines.

pub mod agent;
pub mod corpus;
pub mod curricula;
pub mod error;
pub mod learner;
pub mod neural;
pub mod orchestrator;
pub mod seed;

pub use error::{Error, Result};
