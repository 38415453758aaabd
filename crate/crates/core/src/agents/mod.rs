//! Learning agents and baselines.

mod actor_critic;
mod baselines;
pub mod net;
mod replay;

pub use actor_critic::{
    softmax_expectation, softmax_target_value, td3_target_value, ActorCritic, AgentHyperparams,
    AgentKind, TrainDiagnostics,
};
pub use baselines::{
    encode_point, exhaustive_search, ExhaustiveGrid, ExhaustiveResult, RandomPolicy, TIE_TOLERANCE,
};
pub use net::{Activation, Adam, DenseNet, RunningNorm};
pub use replay::{ReplayBuffer, Transition};
