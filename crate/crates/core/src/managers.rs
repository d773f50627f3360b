//! Baseline managing systems.
//!
//! A manager gets one MAPE iteration per timestep through [`AdaptationManager::adapt`], with
//! probe and effector access to whatever [`ManagedSystem`] it is attached to.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::config::Config;
use crate::management::{CommandLog, InterfaceError, ManagedSystem};
use crate::network::{MirrorNetwork, Topology};
use crate::rng::{stream_rng, SimRng, MANAGER_STREAM};
use crate::satisfaction::{mean_normalized, normalize, Normalized, SatisfactionThresholds};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManagerError {
    #[error("unknown manager {0:?} (expected null, random or threshold)")]
    UnknownManager(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Interface(#[from] InterfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    NoOp,
    SwitchTopology(Topology),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManagerDecision {
    pub action: Action,
    pub rationale: &'static str,
}

impl ManagerDecision {
    pub const fn noop(rationale: &'static str) -> Self {
        ManagerDecision {
            action: Action::NoOp,
            rationale,
        }
    }

    pub const fn switch(topology: Topology, rationale: &'static str) -> Self {
        ManagerDecision {
            action: Action::SwitchTopology(topology),
            rationale,
        }
    }
}

pub trait AdaptationManager {
    fn name(&self) -> &str;

    /// One MAPE iteration, invoked before `timestep` executes.
    fn adapt(&mut self, timestep: u32, system: &mut dyn ManagedSystem) -> Result<ManagerDecision, ManagerError>;
}

fn execute(decision: ManagerDecision, system: &mut dyn ManagedSystem) -> Result<ManagerDecision, ManagerError> {
    if let Action::SwitchTopology(topology) = decision.action {
        system.set_current_topology(topology)?;
    }
    Ok(decision)
}

/// Never adapts.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullManager;

impl NullManager {
    pub fn decide(&self) -> ManagerDecision {
        ManagerDecision::noop("null")
    }
}

impl AdaptationManager for NullManager {
    fn name(&self) -> &str {
        "null"
    }

    fn adapt(&mut self, _timestep: u32, _system: &mut dyn ManagedSystem) -> Result<ManagerDecision, ManagerError> {
        Ok(self.decide())
    }
}

/// Switches to the other topology with a fixed probability each step.
#[derive(Debug, Clone)]
pub struct RandomManager {
    rng: SimRng,
    switch_probability: f64,
}

impl RandomManager {
    pub fn new(seed: u64, switch_probability: f64) -> Result<Self, ManagerError> {
        if !(0.0..=1.0).contains(&switch_probability) {
            return Err(ManagerError::InvalidParameter(format!(
                "switch probability {switch_probability} outside [0, 1]"
            )));
        }
        Ok(RandomManager {
            rng: stream_rng(seed, MANAGER_STREAM),
            switch_probability,
        })
    }

    pub fn decide(&mut self, current: Topology) -> ManagerDecision {
        if self.rng.random_bool(self.switch_probability) {
            ManagerDecision::switch(current.other(), "coin")
        } else {
            ManagerDecision::noop("coin")
        }
    }
}

impl AdaptationManager for RandomManager {
    fn name(&self) -> &str {
        "random"
    }

    fn adapt(&mut self, _timestep: u32, system: &mut dyn ManagedSystem) -> Result<ManagerDecision, ManagerError> {
        let current = system.get_current_topology()?;
        let decision = self.decide(current);
        execute(decision, system)
    }
}

/// Sliding window of normalized observations, most recent last.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    window: VecDeque<Normalized>,
    capacity: usize,
    last_adaptation: Option<u32>,
}

impl KnowledgeBase {
    pub fn new(capacity: usize) -> Self {
        KnowledgeBase {
            window: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
            last_adaptation: None,
        }
    }

    pub fn observe(&mut self, observation: Normalized) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(observation);
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn means(&self) -> Option<Normalized> {
        mean_normalized(self.window.iter()).ok()
    }

    pub fn last_adaptation(&self) -> Option<u32> {
        self.last_adaptation
    }

    pub fn record_adaptation(&mut self, timestep: u32) {
        self.last_adaptation = Some(timestep);
    }
}

/// Rule-based manager: moves to RT when reliability suffers under MST, and back to MST when
/// cost or performance suffers under RT. Reliability takes precedence.
///
/// When both topologies are disturbed (S3, S6) it oscillates between them.
#[derive(Debug, Clone)]
pub struct ThresholdRuleManager {
    network: MirrorNetwork,
    thresholds: SatisfactionThresholds,
    knowledge: KnowledgeBase,
    cooldown: u32,
}

impl ThresholdRuleManager {
    pub fn new(network: MirrorNetwork, thresholds: SatisfactionThresholds, window: usize, cooldown: u32) -> Self {
        ThresholdRuleManager {
            network,
            thresholds,
            knowledge: KnowledgeBase::new(window),
            cooldown,
        }
    }

    pub fn from_config(config: &Config) -> Self {
        ThresholdRuleManager::new(
            config.network,
            config.properties.thresholds,
            config.manager.window,
            config.manager.cooldown,
        )
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        &self.knowledge
    }

    /// Analyze and plan over the current knowledge.
    pub fn decide(&self, current: Topology, timestep: u32) -> ManagerDecision {
        let Some(means) = self.knowledge.means() else {
            return ManagerDecision::noop("no_observations");
        };
        let t = &self.thresholds;
        let planned = if t.reliability_violated(means.active_links_pct) && current == Topology::Mst {
            ManagerDecision::switch(Topology::Rt, "reliability_violated")
        } else if current == Topology::Rt && t.cost_violated(means.bandwidth_pct) {
            ManagerDecision::switch(Topology::Mst, "cost_violated")
        } else if current == Topology::Rt && t.performance_violated(means.write_time_pct) {
            ManagerDecision::switch(Topology::Mst, "performance_violated")
        } else {
            return ManagerDecision::noop("within_thresholds");
        };
        match self.knowledge.last_adaptation() {
            Some(last) if timestep.saturating_sub(last) <= self.cooldown => ManagerDecision::noop("cooldown"),
            _ => planned,
        }
    }
}

impl AdaptationManager for ThresholdRuleManager {
    fn name(&self) -> &str {
        "threshold"
    }

    fn adapt(&mut self, timestep: u32, system: &mut dyn ManagedSystem) -> Result<ManagerDecision, ManagerError> {
        if timestep > 0 {
            let m = system.get_monitorables()?;
            self.knowledge.observe(normalize(&m, &self.network));
        }
        let current = system.get_current_topology()?;
        let decision = self.decide(current, timestep);
        if let Action::SwitchTopology(_) = decision.action {
            self.knowledge.record_adaptation(timestep);
        }
        execute(decision, system)
    }
}

/// Re-issues a recorded command log at the timesteps it was originally issued.
#[derive(Debug, Clone)]
pub struct ReplayManager {
    log: CommandLog,
}

impl ReplayManager {
    pub fn new(log: CommandLog) -> Self {
        ReplayManager { log }
    }
}

impl AdaptationManager for ReplayManager {
    fn name(&self) -> &str {
        "replay"
    }

    fn adapt(&mut self, timestep: u32, system: &mut dyn ManagedSystem) -> Result<ManagerDecision, ManagerError> {
        for command in self.log.issued_at(timestep) {
            command.issue(system)?;
        }
        Ok(ManagerDecision::noop("replay"))
    }
}

/// Bundled managers selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManagerKind {
    Null,
    Random,
    Threshold,
}

impl ManagerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ManagerKind::Null => "null",
            ManagerKind::Random => "random",
            ManagerKind::Threshold => "threshold",
        }
    }

    pub fn build(self, config: &Config) -> Result<Box<dyn AdaptationManager + Send>, ManagerError> {
        Ok(match self {
            ManagerKind::Null => Box::new(NullManager),
            ManagerKind::Random => Box::new(RandomManager::new(
                config.properties.seed,
                config.manager.switch_probability,
            )?),
            ManagerKind::Threshold => Box::new(ThresholdRuleManager::from_config(config)),
        })
    }
}

impl fmt::Display for ManagerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManagerKind {
    type Err = ManagerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "null" => Ok(ManagerKind::Null),
            "random" => Ok(ManagerKind::Random),
            "threshold" => Ok(ManagerKind::Threshold),
            _ => Err(ManagerError::UnknownManager(s.to_owned())),
        }
    }
}
