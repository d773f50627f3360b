//! Deterministic simulator of a remote data mirroring network, built as a benchmark environment
//! for self-adaptive managers.
//!
//! The [`Simulation`] is the managed system. It exposes monitoring through [`Probe`] and
//! adaptation through [`Effector`], and injects one of seven environmental scenarios
//! ([`ScenarioId`]). Managers implement [`AdaptationManager`] and are driven by [`run`], or attach
//! from another process over the line protocol in [`wire`].

pub mod config;
pub mod management;
pub mod managers;
pub mod network;
pub mod rng;
pub mod satisfaction;
pub mod scenario;
pub mod simulation;
pub mod trace;
pub mod wire;

pub use crate::config::{load_config, Config, ConfigError, ManagerParams, SimulationProperties};
pub use crate::management::{
    CommandKind, CommandLog, Effector, EffectorCommand, InterfaceError, ManagedSystem, Probe,
};
pub use crate::managers::{
    Action, AdaptationManager, KnowledgeBase, ManagerDecision, ManagerError, ManagerKind, NullManager,
    RandomManager, ReplayManager, ThresholdRuleManager,
};
pub use crate::network::{build_network, Interval, MirrorNetwork, Monitorables, NetworkParams, Topology, TopologyRanges};
pub use crate::satisfaction::{evaluate_satisfaction, normalize, Normalized, SatisfactionSummary, SatisfactionThresholds};
pub use crate::scenario::{DisturbanceConfig, DisturbanceProfile, DisturbanceWindow, EffectSet, ScenarioId, ScenarioState};
pub use crate::simulation::{run, RunError, RunOutput, Simulation, SimulationError};
pub use crate::trace::{read_trace_csv, trace_to_csv, write_trace_csv, TraceRecord, TRACE_HEADER};

/// Replays a command log against a fresh simulation of `config`.
pub fn replay(config: &Config, log: &CommandLog) -> Result<RunOutput, RunError> {
    run(&mut ReplayManager::new(log.clone()), config)
}
