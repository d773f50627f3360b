//! Probe and effector boundary between the managed system and a managing system.
//!
//! [`Probe`] has one method per monitoring function and [`Effector`] one per adaptation function.
//! Both are implemented in-process by [`crate::Simulation`] and remotely by
//! [`crate::wire::RemoteSystem`], so a manager written against [`ManagedSystem`] runs unchanged
//! over either.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Monitorables, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterfaceError {
    #[error("timestep {requested} is in the past (next timestep is {current})")]
    PastTimestep { requested: u32, current: u32 },
    #[error("timestep {requested} is beyond the final timestep {last}")]
    BeyondRun { requested: u32, last: u32 },
    #[error("active links {value} outside [0, {total_links}]")]
    ActiveLinksOutOfRange { value: i64, total_links: u32 },
    #[error("{field} must be finite and non-negative, got {value}")]
    InvalidValue { field: &'static str, value: f64 },
    #[error("the run has already finished")]
    RunFinished,
    #[error("remote error {code}: {detail}")]
    Remote { code: String, detail: String },
    #[error("transport failure: {0}")]
    Transport(String),
}

/// Read-only monitoring functions.
///
/// Methods take `&mut self` because remote implementations perform I/O; they never change the
/// simulation state.
pub trait Probe {
    /// Topology in effect at the most recently completed timestep.
    fn get_current_topology(&mut self) -> Result<Topology, InterfaceError>;
    /// Bandwidth consumption in GBps, rounded half-up.
    fn get_bandwidth_consumption(&mut self) -> Result<u64, InterfaceError>;
    fn get_active_links(&mut self) -> Result<u32, InterfaceError>;
    /// Time to write in milliseconds, rounded half-up.
    fn get_time_to_write(&mut self) -> Result<u64, InterfaceError>;
    /// Unrounded monitorables of the latest timestep (all zero before the first step).
    fn get_monitorables(&mut self) -> Result<Monitorables, InterfaceError>;
}

/// Adaptation functions. Scalar overrides replace the sampled base value of the next timestep
/// only; scenario disturbances still apply on top of them.
pub trait Effector {
    fn set_network_topology(&mut self, timestep: u32, topology: Topology) -> Result<(), InterfaceError>;
    fn set_active_links(&mut self, active_links: i64) -> Result<(), InterfaceError>;
    fn set_time_to_write(&mut self, time_to_write: f64) -> Result<(), InterfaceError>;
    fn set_bandwidth_consumption(&mut self, bandwidth_consumption: f64) -> Result<(), InterfaceError>;
    /// Same as `set_network_topology` targeting the next timestep.
    fn set_current_topology(&mut self, topology: Topology) -> Result<(), InterfaceError>;
}

pub trait ManagedSystem: Probe + Effector {}

impl<T: Probe + Effector + ?Sized> ManagedSystem for T {}

pub(crate) fn round_half_up(value: f64) -> u64 {
    value.max(0.0).round() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandKind {
    SetNetworkTopology { topology: Topology, target_timestep: u32 },
    SetActiveLinks { value: u32 },
    SetTimeToWrite { value: f64 },
    SetBandwidthConsumption { value: f64 },
    SetCurrentTopology { topology: Topology },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectorCommand {
    /// Timestep that was about to execute when the command arrived.
    pub issued_at: u32,
    #[serde(flatten)]
    pub kind: CommandKind,
}

impl EffectorCommand {
    /// Timestep at which the command takes effect.
    pub fn target_timestep(&self) -> u32 {
        match self.kind {
            CommandKind::SetNetworkTopology { target_timestep, .. } => target_timestep,
            _ => self.issued_at,
        }
    }

    /// Re-issues the command through `effector`.
    pub fn issue(&self, effector: &mut (impl Effector + ?Sized)) -> Result<(), InterfaceError> {
        match self.kind {
            CommandKind::SetNetworkTopology {
                topology,
                target_timestep,
            } => effector.set_network_topology(target_timestep, topology),
            CommandKind::SetActiveLinks { value } => effector.set_active_links(i64::from(value)),
            CommandKind::SetTimeToWrite { value } => effector.set_time_to_write(value),
            CommandKind::SetBandwidthConsumption { value } => effector.set_bandwidth_consumption(value),
            CommandKind::SetCurrentTopology { topology } => effector.set_current_topology(topology),
        }
    }
}

/// Append-only record of accepted effector commands, in arrival order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommandLog {
    entries: Vec<EffectorCommand>,
}

impl CommandLog {
    pub(crate) fn push(&mut self, command: EffectorCommand) {
        debug_assert!(self.entries.last().is_none_or(|last| last.issued_at <= command.issued_at));
        self.entries.push(command);
    }

    pub fn entries(&self) -> &[EffectorCommand] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Commands issued while `timestep` was the next timestep.
    pub fn issued_at(&self, timestep: u32) -> impl Iterator<Item = &EffectorCommand> {
        self.entries.iter().filter(move |c| c.issued_at == timestep)
    }
}
