//! Line-oriented JSON protocol that lets a managing system in another process drive a simulation.
//!
//! One UTF-8 JSON object per line. Every message carries a `seq` that strictly increases within
//! its direction of a session; replies name the request they answer in `re`. The server speaks
//! first with `hello`, then announces each timestep with `step_start`. Within a timestep the client
//! may send any number of probe and effector requests, each answered by exactly one reply, and
//! ends the timestep with `step`. After the final `step_complete` the server sends
//! `run_complete` and closes the session.
//!
//! ```text
//! S: {"seq":1,"type":"hello","protocol":1,"session":{...}}
//! S: {"seq":2,"type":"step_start","timestep":0}
//! C: {"seq":1,"type":"get_monitorables"}
//! S: {"seq":3,"type":"monitorables","re":1,"monitorables":{"active_links":0,...}}
//! C: {"seq":2,"type":"set_network_topology","timestep":0,"topology":"RT"}
//! S: {"seq":4,"type":"ack","re":2}
//! C: {"seq":3,"type":"step"}
//! S: {"seq":5,"type":"step_complete","re":3,"timestep":0,"record":{...}}
//! S: {"seq":6,"type":"step_start","timestep":1}
//! ```
//!
//! A malformed line or a non-increasing `seq` gets an `error` reply and ends the session. A
//! rejected effector value gets an `error` reply with code `rejected` and the session continues.

mod client;
mod server;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::network::{build_network, Interval, MirrorNetwork, Monitorables, NetworkParams, Topology};
use crate::satisfaction::{SatisfactionSummary, SatisfactionThresholds};
use crate::scenario::ScenarioId;
use crate::trace::TraceRecord;

pub use client::{RemoteRun, RemoteSystem};
pub use server::{serve_session, serve_tcp, SessionReport, SessionStatus};

pub const PROTOCOL_VERSION: u32 = 1;

/// Static facts about the session's simulation, sent in `hello`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub num_mirrors: u32,
    pub total_links: u32,
    pub alpha: f64,
    pub bandwidth_per_link_range: Interval<f64>,
    pub unit_write_time_range: Interval<f64>,
    pub scenario: ScenarioId,
    pub seed: u64,
    pub timesteps: u32,
    pub thresholds: SatisfactionThresholds,
}

impl SessionInfo {
    pub fn from_config(config: &Config) -> Self {
        SessionInfo {
            num_mirrors: config.network.num_mirrors(),
            total_links: config.network.total_links(),
            alpha: config.network.alpha(),
            bandwidth_per_link_range: config.network.bandwidth_per_link_range(),
            unit_write_time_range: config.network.unit_write_time_range(),
            scenario: config.properties.scenario,
            seed: config.properties.seed,
            timesteps: config.properties.timesteps,
            thresholds: config.properties.thresholds,
        }
    }

    /// Rebuilds the network description on the client side.
    pub fn network(&self) -> Option<MirrorNetwork> {
        build_network(
            self.num_mirrors,
            &NetworkParams {
                bandwidth_per_link_range: self.bandwidth_per_link_range,
                unit_write_time_range: self.unit_write_time_range,
                alpha: self.alpha,
            },
        )
        .ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    GetCurrentTopology,
    GetActiveLinks,
    GetBandwidthConsumption,
    GetTimeToWrite,
    GetMonitorables,
    SetNetworkTopology { timestep: u32, topology: Topology },
    SetActiveLinks { value: i64 },
    SetTimeToWrite { value: f64 },
    SetBandwidthConsumption { value: f64 },
    SetCurrentTopology { topology: Topology },
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub request: Request,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Line is not a valid client message. Fatal.
    Malformed,
    /// `seq` did not increase. Fatal.
    BadSequence,
    /// Effector value or timestep refused. The session continues.
    Rejected,
    /// Request arrived after the run finished.
    RunFinished,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Malformed => "malformed",
            ErrorCode::BadSequence => "bad_sequence",
            ErrorCode::Rejected => "rejected",
            ErrorCode::RunFinished => "run_finished",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerBody {
    Hello {
        protocol: u32,
        session: SessionInfo,
    },
    StepStart {
        timestep: u32,
    },
    Topology {
        re: u64,
        topology: Topology,
    },
    Value {
        re: u64,
        value: u64,
    },
    Monitorables {
        re: u64,
        monitorables: Monitorables,
    },
    Ack {
        re: u64,
    },
    StepComplete {
        re: u64,
        timestep: u32,
        record: TraceRecord,
    },
    RunComplete {
        timesteps: u32,
        summary: SatisfactionSummary,
    },
    Error {
        re: Option<u64>,
        code: ErrorCode,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub body: ServerBody,
}
