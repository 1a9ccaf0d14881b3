//! Deep Q-learning agent: value network, replay buffer, ε-greedy action
//! selection over masked actions, and the training loop.

mod agent;
mod network;
mod replay;

pub use agent::{
    evaluate, greedy_action, greedy_episode, select_action, train, write_log_csv, AgentConfig,
    TrainingLogRow, TrainingOutcome,
};
pub use network::{DenseLayer, Gradients, ValueNetwork};
pub use replay::{Replay, ReplayBuffer, Transition};
