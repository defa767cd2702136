//! Interactive reinforcement learning for UAV grid navigation.
//!
//! A tabular Q-learning agent flies a 10x10 grid while an external trainer
//! may override its actions (policy shaping) and replace its rewards
//! (reward shaping). Trainer advice arrives as text phrases matched against
//! a bilingual command dictionary by edit distance.

pub mod advice;
pub mod command;
pub mod error;
pub mod experiment;
pub mod gridworld;
pub mod qlearning;
pub mod reward;
pub mod rng;

pub use advice::{
    maybe_policy_advice, maybe_reward_advice, run_episode, step_once, AdviceConfig, AdviceEvent, AdviceInbox,
    AdviceKind, AdviceSource, AgentRngs, EpisodeLog, HumanTrainer, LoopSettings, SimulatedTrainer, StepRecord, Trainer,
    DEFAULT_STEP_CAP,
};
pub use command::{levenshtein, CommandClass, Dictionary, Domain, MatchResult};
pub use error::{Error, Result};
pub use experiment::{Condition, ExperimentConfig, Report, ReportFormat, RunSummary};
pub use gridworld::{Action, Altitude, Cell, GridState, Heading, Scenario, StepOutcome};
pub use qlearning::{select_action, update_q, Hyperparams, QTable};
pub use reward::RewardClass;
