//! Model-free agent: a reset/step view of one seat, order-plus actions,
//! windowed local observations, mixed epsilon-greedy and Boltzmann
//! exploration, experience replay and a target network.

mod env;
mod explore;
mod replay;
mod train;

pub use env::{
    draw_episode, episode_policies, order_plus, BaselineSeat, BeerEnv, EnvConfig, EnvMode, Episode, StepOutcome,
    FEATURE_LABELS,
};
pub use explore::{argmax, select_action, LinearSchedule};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    evaluate, rollout_baseline, rollout_greedy, td_targets, train, write_curve_csv, AgentBundle, CurveRecord,
    EvalReport, TrainConfig, TrainOutcome,
};
