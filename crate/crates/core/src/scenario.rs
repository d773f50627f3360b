//! Environmental scenarios S0-S6 as topology-conditional disturbances.
//!
//! Each scenario maps both topologies to an [`EffectSet`] of multiplicative factor intervals.
//! While the disturbance window is open, one factor is drawn from each interval of the set that
//! matches the current topology. The active-link factor is applied first, bandwidth and write
//! time are rescaled to the disturbed link count, and then their own factors apply.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Interval, MirrorNetwork, Monitorables, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    S0,
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 7] = [
        ScenarioId::S0,
        ScenarioId::S1,
        ScenarioId::S2,
        ScenarioId::S3,
        ScenarioId::S4,
        ScenarioId::S5,
        ScenarioId::S6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::S0 => "S0",
            ScenarioId::S1 => "S1",
            ScenarioId::S2 => "S2",
            ScenarioId::S3 => "S3",
            ScenarioId::S4 => "S4",
            ScenarioId::S5 => "S5",
            ScenarioId::S6 => "S6",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?} (expected S0..S6)")]
    UnknownScenario(String),
    #[error("{scenario} {field} interval [{lower}, {upper}] must be positive with lower <= upper")]
    InvalidFactor {
        scenario: String,
        field: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("disturbance window [{start}, {end}] is inverted")]
    InvertedWindow { start: u32, end: u32 },
}

impl FromStr for ScenarioId {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ScenarioError::UnknownScenario(s.to_owned()))
    }
}

/// Multiplier intervals for the three monitorables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSet {
    pub active_links_factor: Interval<f64>,
    pub bandwidth_factor: Interval<f64>,
    pub write_time_factor: Interval<f64>,
}

const ONE: Interval<f64> = Interval::point(1.0);

fn product(a: Interval<f64>, b: Interval<f64>) -> Interval<f64> {
    Interval::new(a.lower() * b.lower(), a.upper() * b.upper())
}

impl EffectSet {
    pub const IDENTITY: EffectSet = EffectSet {
        active_links_factor: ONE,
        bandwidth_factor: ONE,
        write_time_factor: ONE,
    };

    pub fn reduce_links(factor: Interval<f64>) -> Self {
        EffectSet {
            active_links_factor: factor,
            ..EffectSet::IDENTITY
        }
    }

    pub fn inflate_cost(factor: Interval<f64>) -> Self {
        EffectSet {
            bandwidth_factor: factor,
            write_time_factor: factor,
            ..EffectSet::IDENTITY
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == EffectSet::IDENTITY
    }

    /// Field-wise product of the factor intervals (all bounds are positive).
    pub fn compose(&self, other: &EffectSet) -> EffectSet {
        EffectSet {
            active_links_factor: product(self.active_links_factor, other.active_links_factor),
            bandwidth_factor: product(self.bandwidth_factor, other.bandwidth_factor),
            write_time_factor: product(self.write_time_factor, other.write_time_factor),
        }
    }

    fn fields(&self) -> [(&'static str, Interval<f64>); 3] {
        [
            ("active_links_factor", self.active_links_factor),
            ("bandwidth_factor", self.bandwidth_factor),
            ("write_time_factor", self.write_time_factor),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceProfile {
    pub mst: EffectSet,
    pub rt: EffectSet,
}

impl DisturbanceProfile {
    pub const IDENTITY: DisturbanceProfile = DisturbanceProfile {
        mst: EffectSet::IDENTITY,
        rt: EffectSet::IDENTITY,
    };

    pub fn for_topology(&self, topology: Topology) -> &EffectSet {
        match topology {
            Topology::Mst => &self.mst,
            Topology::Rt => &self.rt,
        }
    }

    pub fn compose(&self, other: &DisturbanceProfile) -> DisturbanceProfile {
        DisturbanceProfile {
            mst: self.mst.compose(&other.mst),
            rt: self.rt.compose(&other.rt),
        }
    }
}

/// Partial replacement of an [`EffectSet`]; absent fields keep the default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectSetOverride {
    pub active_links_factor: Option<Interval<f64>>,
    pub bandwidth_factor: Option<Interval<f64>>,
    pub write_time_factor: Option<Interval<f64>>,
}

impl EffectSetOverride {
    fn apply(&self, base: EffectSet) -> EffectSet {
        EffectSet {
            active_links_factor: self.active_links_factor.unwrap_or(base.active_links_factor),
            bandwidth_factor: self.bandwidth_factor.unwrap_or(base.bandwidth_factor),
            write_time_factor: self.write_time_factor.unwrap_or(base.write_time_factor),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    pub mst: Option<EffectSetOverride>,
    pub rt: Option<EffectSetOverride>,
}

/// Scenario parameters: the two base factor intervals plus per-scenario overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceConfig {
    /// Active-link reduction used by S1, S3-S6.
    pub link_reduction: Interval<f64>,
    /// Bandwidth and write-time inflation used by S2-S6.
    pub inflation: Interval<f64>,
    pub overrides: BTreeMap<ScenarioId, ProfileOverride>,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        DisturbanceConfig {
            link_reduction: Interval::new(0.4, 0.7),
            inflation: Interval::new(1.3, 1.6),
            overrides: BTreeMap::new(),
        }
    }
}

impl DisturbanceConfig {
    /// Checks every profile this configuration can produce.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for id in ScenarioId::ALL {
            scenario_profile(id, self)?;
        }
        Ok(())
    }
}

fn validate_profile(id: ScenarioId, profile: &DisturbanceProfile) -> Result<(), ScenarioError> {
    for (topology, set) in [("MST", &profile.mst), ("RT", &profile.rt)] {
        for (field, interval) in set.fields() {
            if !interval.is_positive() {
                return Err(ScenarioError::InvalidFactor {
                    scenario: format!("{id}/{topology}"),
                    field,
                    lower: interval.lower(),
                    upper: interval.upper(),
                });
            }
        }
    }
    Ok(())
}

/// Builds the disturbance profile of a scenario.
///
/// Composite scenarios (S3, S6) are composed from their parts after the parts' overrides are
/// applied, then receive their own overrides.
pub fn scenario_profile(id: ScenarioId, config: &DisturbanceConfig) -> Result<DisturbanceProfile, ScenarioError> {
    let reduction = EffectSet::reduce_links(config.link_reduction);
    let inflation = EffectSet::inflate_cost(config.inflation);
    let defaults = match id {
        ScenarioId::S0 => DisturbanceProfile::IDENTITY,
        ScenarioId::S1 => DisturbanceProfile {
            mst: reduction,
            rt: EffectSet::IDENTITY,
        },
        ScenarioId::S2 => DisturbanceProfile {
            mst: EffectSet::IDENTITY,
            rt: inflation,
        },
        ScenarioId::S3 => scenario_profile(ScenarioId::S1, config)?.compose(&scenario_profile(ScenarioId::S2, config)?),
        ScenarioId::S4 => DisturbanceProfile {
            mst: reduction.compose(&inflation),
            rt: EffectSet::IDENTITY,
        },
        ScenarioId::S5 => DisturbanceProfile {
            mst: EffectSet::IDENTITY,
            rt: inflation.compose(&reduction),
        },
        ScenarioId::S6 => scenario_profile(ScenarioId::S4, config)?.compose(&scenario_profile(ScenarioId::S5, config)?),
    };
    let profile = match config.overrides.get(&id) {
        Some(o) => DisturbanceProfile {
            mst: o.mst.map_or(defaults.mst, |m| m.apply(defaults.mst)),
            rt: o.rt.map_or(defaults.rt, |r| r.apply(defaults.rt)),
        },
        None => defaults,
    };
    validate_profile(id, &profile)?;
    Ok(profile)
}

/// Initial topology of a scenario. S3 and S6 flip a fair coin.
pub fn initial_topology<R: Rng + ?Sized>(id: ScenarioId, rng: &mut R) -> Topology {
    match id {
        ScenarioId::S0 | ScenarioId::S1 | ScenarioId::S4 => Topology::Mst,
        ScenarioId::S2 | ScenarioId::S5 => Topology::Rt,
        ScenarioId::S3 | ScenarioId::S6 => {
            if rng.random_bool(0.5) {
                Topology::Mst
            } else {
                Topology::Rt
            }
        }
    }
}

/// Inclusive range of timesteps during which disturbances are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisturbanceWindow {
    pub start: u32,
    pub end: u32,
}

impl DisturbanceWindow {
    pub fn new(start: u32, end: u32) -> Result<Self, ScenarioError> {
        if start > end {
            return Err(ScenarioError::InvertedWindow { start, end });
        }
        Ok(DisturbanceWindow { start, end })
    }

    pub fn contains(&self, timestep: u32) -> bool {
        self.start <= timestep && timestep <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub scenario: ScenarioId,
    pub profile: DisturbanceProfile,
    /// `None` means the whole run is disturbed.
    pub window: Option<DisturbanceWindow>,
}

impl ScenarioState {
    pub fn new(
        scenario: ScenarioId,
        config: &DisturbanceConfig,
        window: Option<DisturbanceWindow>,
    ) -> Result<Self, ScenarioError> {
        Ok(ScenarioState {
            scenario,
            profile: scenario_profile(scenario, config)?,
            window,
        })
    }

    pub fn is_active(&self, timestep: u32) -> bool {
        self.window.is_none_or(|w| w.contains(timestep))
    }
}

/// Applies the scenario's disturbance for `current_topology` at `timestep`.
///
/// Returns `base` untouched when the window is closed or the matching effect set is the identity;
/// otherwise draws the link, bandwidth and write-time factors in that order.
pub fn apply_disturbance<R: Rng + ?Sized>(
    state: &ScenarioState,
    current_topology: Topology,
    base: &Monitorables,
    network: &MirrorNetwork,
    timestep: u32,
    rng: &mut R,
) -> Monitorables {
    let effects = state.profile.for_topology(current_topology);
    if !state.is_active(timestep) || effects.is_identity() {
        return *base;
    }
    let f_links = effects.active_links_factor.sample(rng);
    let f_bw = effects.bandwidth_factor.sample(rng);
    let f_wt = effects.write_time_factor.sample(rng);

    let scaled = (f64::from(base.active_links) * f_links).round();
    let active_links = scaled.clamp(0.0, f64::from(network.total_links())) as u32;
    // Bandwidth and write time are proportional to the active-link count.
    let link_ratio = if base.active_links == 0 {
        1.0
    } else {
        f64::from(active_links) / f64::from(base.active_links)
    };
    Monitorables {
        active_links,
        bandwidth_consumption: base.bandwidth_consumption * link_ratio * f_bw,
        time_to_write: base.time_to_write * link_ratio * f_wt,
    }
}
