//! JSON configuration file.
//!
//! Every key is optional; missing keys take the defaults below.
//!
//! ```json
//! {
//!   "number_of_mirrors": 25,
//!   "timesteps": 100,
//!   "scenario": "S0",
//!   "seed": 0,
//!   "alpha": 1.0,
//!   "bandwidth_per_link_range": [20.0, 30.0],
//!   "unit_write_time_range": [10.0, 20.0],
//!   "mst_active_links_range_pct": [35.0, 50.0],
//!   "rt_active_links_range_pct": [60.0, 90.0],
//!   "thresholds": { "bandwidth_pct": 40.0, "write_time_pct": 45.0, "active_links_pct": 35.0 },
//!   "disturbances": {
//!     "link_reduction": [0.4, 0.7],
//!     "inflation": [1.3, 1.6],
//!     "scenarios": { "S1": { "mst": { "active_links_factor": [0.5, 0.5] } } }
//!   },
//!   "disturbance_window": [0, 99],
//!   "initial_topology": "MST",
//!   "manager": { "window": 5, "cooldown": 3, "switch_probability": 0.1 },
//!   "site_failure_rate_per_year": 1.0
//! }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{build_network, Interval, MirrorNetwork, NetworkError, NetworkParams, Topology, TopologyRanges};
use crate::satisfaction::SatisfactionThresholds;
use crate::scenario::{DisturbanceConfig, DisturbanceWindow, ProfileOverride, ScenarioError, ScenarioId};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

impl ConfigError {
    fn invalid(field: &'static str, message: impl ToString) -> Self {
        ConfigError::Invalid {
            field,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationProperties {
    pub timesteps: u32,
    pub scenario: ScenarioId,
    pub seed: u64,
    pub thresholds: SatisfactionThresholds,
    pub disturbance_window: Option<DisturbanceWindow>,
}

impl Default for SimulationProperties {
    fn default() -> Self {
        SimulationProperties {
            timesteps: 100,
            scenario: ScenarioId::S0,
            seed: 0,
            thresholds: SatisfactionThresholds::default(),
            disturbance_window: None,
        }
    }
}

/// Parameters of the bundled reference managers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManagerParams {
    /// Sliding-window length of the threshold manager.
    pub window: usize,
    /// Timesteps after a switch during which the threshold manager will not switch again.
    pub cooldown: u32,
    /// Per-step switch probability of the random manager.
    pub switch_probability: f64,
}

impl Default for ManagerParams {
    fn default() -> Self {
        ManagerParams {
            window: 5,
            cooldown: 3,
            switch_probability: 0.1,
        }
    }
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub network: MirrorNetwork,
    pub ranges: TopologyRanges,
    pub properties: SimulationProperties,
    pub disturbances: DisturbanceConfig,
    /// Replaces the scenario's initial topology when set.
    pub initial_topology: Option<Topology>,
    pub manager: ManagerParams,
    /// Accepted for S6 but not used by the simulation.
    pub site_failure_rate_per_year: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        let network = build_network(25, &NetworkParams::default()).expect("default network is valid");
        Config {
            ranges: TopologyRanges::default_for(&network),
            network,
            properties: SimulationProperties::default(),
            disturbances: DisturbanceConfig::default(),
            initial_topology: None,
            manager: ManagerParams::default(),
            site_failure_rate_per_year: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdsFile {
    bandwidth_pct: Option<f64>,
    write_time_pct: Option<f64>,
    active_links_pct: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbancesFile {
    link_reduction: Option<Interval<f64>>,
    inflation: Option<Interval<f64>>,
    #[serde(default)]
    scenarios: BTreeMap<ScenarioId, ProfileOverride>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManagerFile {
    window: Option<usize>,
    cooldown: Option<u32>,
    switch_probability: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    number_of_mirrors: Option<u32>,
    timesteps: Option<u32>,
    scenario: Option<ScenarioId>,
    seed: Option<u64>,
    alpha: Option<f64>,
    bandwidth_per_link_range: Option<Interval<f64>>,
    unit_write_time_range: Option<Interval<f64>>,
    mst_active_links_range_pct: Option<Interval<f64>>,
    rt_active_links_range_pct: Option<Interval<f64>>,
    thresholds: Option<ThresholdsFile>,
    disturbances: Option<DisturbancesFile>,
    disturbance_window: Option<(u32, u32)>,
    initial_topology: Option<Topology>,
    manager: Option<ManagerFile>,
    site_failure_rate_per_year: Option<f64>,
}

fn network_error(e: NetworkError) -> ConfigError {
    let field = match e {
        NetworkError::TooFewMirrors(_) | NetworkError::TooManyMirrors(_) => "number_of_mirrors",
        NetworkError::InvalidAlpha(_) => "alpha",
        NetworkError::InvalidRange { name: "unit_write_time", .. } => "unit_write_time_range",
        NetworkError::InvalidRange { name: "bandwidth_per_link", .. } => "bandwidth_per_link_range",
        _ => "active_links_range_pct",
    };
    ConfigError::invalid(field, e)
}

impl ConfigFile {
    fn into_config(self) -> Result<Config, ConfigError> {
        let defaults = NetworkParams::default();
        let params = NetworkParams {
            bandwidth_per_link_range: self.bandwidth_per_link_range.unwrap_or(defaults.bandwidth_per_link_range),
            unit_write_time_range: self.unit_write_time_range.unwrap_or(defaults.unit_write_time_range),
            alpha: self.alpha.unwrap_or(defaults.alpha),
        };
        let network = build_network(self.number_of_mirrors.unwrap_or(25), &params).map_err(network_error)?;
        let ranges = TopologyRanges::from_percentages(
            &network,
            self.mst_active_links_range_pct.unwrap_or(Interval::new(35.0, 50.0)),
            self.rt_active_links_range_pct.unwrap_or(Interval::new(60.0, 90.0)),
        )
        .map_err(network_error)?;

        let t = self.thresholds.unwrap_or_default();
        let dt = SatisfactionThresholds::default();
        let thresholds = SatisfactionThresholds {
            max_bandwidth_pct: t.bandwidth_pct.unwrap_or(dt.max_bandwidth_pct),
            max_write_time_pct: t.write_time_pct.unwrap_or(dt.max_write_time_pct),
            min_active_links_pct: t.active_links_pct.unwrap_or(dt.min_active_links_pct),
        };
        let disturbance_window = self
            .disturbance_window
            .map(|(start, end)| DisturbanceWindow::new(start, end))
            .transpose()
            .map_err(|e| ConfigError::invalid("disturbance_window", e))?;

        let d = self.disturbances.unwrap_or_default();
        let dd = DisturbanceConfig::default();
        let disturbances = DisturbanceConfig {
            link_reduction: d.link_reduction.unwrap_or(dd.link_reduction),
            inflation: d.inflation.unwrap_or(dd.inflation),
            overrides: d.scenarios,
        };

        let m = self.manager.unwrap_or_default();
        let dm = ManagerParams::default();
        let config = Config {
            network,
            ranges,
            properties: SimulationProperties {
                timesteps: self.timesteps.unwrap_or(100),
                scenario: self.scenario.unwrap_or(ScenarioId::S0),
                seed: self.seed.unwrap_or(0),
                thresholds,
                disturbance_window,
            },
            disturbances,
            initial_topology: self.initial_topology,
            manager: ManagerParams {
                window: m.window.unwrap_or(dm.window),
                cooldown: m.cooldown.unwrap_or(dm.cooldown),
                switch_probability: m.switch_probability.unwrap_or(dm.switch_probability),
            },
            site_failure_rate_per_year: self.site_failure_rate_per_year,
        };
        config.validate()?;
        Ok(config)
    }
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Config, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_data() {
                ConfigError::Schema {
                    path,
                    message: inner.to_string(),
                }
            } else {
                ConfigError::Syntax {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                }
            }
        })?;
        file.into_config()
    }

    /// Checks the cross-field invariants. Call again after mutating a loaded config.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.properties;
        if p.timesteps < 1 {
            return Err(ConfigError::invalid("timesteps", "must be at least 1"));
        }
        if let Some(w) = p.disturbance_window {
            if w.end >= p.timesteps {
                return Err(ConfigError::invalid(
                    "disturbance_window",
                    format!("[{}, {}] must lie within [0, {})", w.start, w.end, p.timesteps),
                ));
            }
        }
        if !p.thresholds.is_valid() {
            return Err(ConfigError::invalid("thresholds", "each threshold must lie in (0, 100]"));
        }
        self.ranges
            .validate(self.network.total_links())
            .map_err(network_error)?;
        self.disturbances
            .validate()
            .map_err(|e: ScenarioError| ConfigError::invalid("disturbances", e))?;
        if self.manager.window == 0 {
            return Err(ConfigError::invalid("manager.window", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.manager.switch_probability) {
            return Err(ConfigError::invalid("manager.switch_probability", "must lie in [0, 1]"));
        }
        if let Some(rate) = self.site_failure_rate_per_year {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(ConfigError::invalid("site_failure_rate_per_year", "must be non-negative"));
            }
        }
        Ok(())
    }
}

impl Config {
    /// Renders the configuration in the file format. Active-link ranges are written as
    /// percentages of the total link count.
    pub fn to_json(&self) -> serde_json::Value {
        let total = f64::from(self.network.total_links());
        let pct = |r: Interval<u32>| [f64::from(r.lower()) * 100.0 / total, f64::from(r.upper()) * 100.0 / total];
        let p = &self.properties;
        let mut doc = serde_json::json!({
            "number_of_mirrors": self.network.num_mirrors(),
            "timesteps": p.timesteps,
            "scenario": p.scenario,
            "seed": p.seed,
            "alpha": self.network.alpha(),
            "bandwidth_per_link_range": self.network.bandwidth_per_link_range(),
            "unit_write_time_range": self.network.unit_write_time_range(),
            "mst_active_links_range_pct": pct(self.ranges.mst_active_links),
            "rt_active_links_range_pct": pct(self.ranges.rt_active_links),
            "thresholds": p.thresholds,
            "disturbances": {
                "link_reduction": self.disturbances.link_reduction,
                "inflation": self.disturbances.inflation,
                "scenarios": self.disturbances.overrides,
            },
            "manager": self.manager,
        });
        let obj = doc.as_object_mut().expect("json! object");
        if let Some(w) = p.disturbance_window {
            obj.insert("disturbance_window".into(), serde_json::json!([w.start, w.end]));
        }
        if let Some(t) = self.initial_topology {
            obj.insert("initial_topology".into(), serde_json::json!(t));
        }
        if let Some(rate) = self.site_failure_rate_per_year {
            obj.insert("site_failure_rate_per_year".into(), serde_json::json!(rate));
        }
        doc
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    Config::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let config = Config::from_json_str("{}").unwrap();
        assert_eq!(config, Config::default());
        assert_eq!(config.network.num_mirrors(), 25);
        assert_eq!(config.network.total_links(), 300);
        assert_eq!(config.properties.timesteps, 100);
        assert_eq!(config.properties.scenario, ScenarioId::S0);
        assert_eq!(config.network.alpha(), 1.0);
    }

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let json: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```json"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!"))
            .collect::<Vec<_>>()
            .join("\n");
        let config = Config::from_json_str(&json).unwrap();
        assert_eq!(config.properties.disturbance_window, Some(DisturbanceWindow { start: 0, end: 99 }));
        assert_eq!(config.initial_topology, Some(Topology::Mst));
        assert!(config.disturbances.overrides.contains_key(&ScenarioId::S1));
    }

    #[test]
    fn error_classes() {
        assert!(matches!(
            Config::from_json_str(r#"{"number_of_mirrors": 1}"#),
            Err(ConfigError::Invalid {
                field: "number_of_mirrors",
                ..
            })
        ));
        assert!(matches!(Config::from_json_str("{ not json"), Err(ConfigError::Syntax { .. })));
        match Config::from_json_str(r#"{"thresholds": {"bandwidth_pct": "lots"}}"#) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "thresholds.bandwidth_pct"),
            other => panic!("unexpected {other:?}"),
        }
        match Config::from_json_str(r#"{"scenario": "S9"}"#) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "scenario"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Config::from_json_str(r#"{"mirrors": 3}"#),
            Err(ConfigError::Schema { .. })
        ));
        assert!(matches!(
            Config::from_json_str(r#"{"timesteps": 10, "disturbance_window": [5, 10]}"#),
            Err(ConfigError::Invalid {
                field: "disturbance_window",
                ..
            })
        ));
        assert!(matches!(
            Config::from_json_str(r#"{"alpha": 0}"#),
            Err(ConfigError::Invalid { field: "alpha", .. })
        ));
        assert!(matches!(
            Config::from_json_str(r#"{"mst_active_links_range_pct": [40, 70]}"#),
            Err(ConfigError::Invalid { .. })
        ));
    }

    #[test]
    fn json_rendering_reloads() {
        let default = Config::default();
        assert_eq!(Config::from_json_str(&default.to_json().to_string()).unwrap(), default);

        let mut custom = Config::from_json_str(
            r#"{"number_of_mirrors": 10, "timesteps": 40, "scenario": "S5", "disturbance_window": [5, 30],
                "initial_topology": "RT", "disturbances": {"scenarios": {"S5": {"rt": {"bandwidth_factor": [2, 3]}}}}}"#,
        )
        .unwrap();
        custom.properties.seed = 99;
        assert_eq!(Config::from_json_str(&custom.to_json().to_string()).unwrap(), custom);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_config("/nonexistent/rdmsim.json"),
            Err(ConfigError::Io { .. })
        ));
    }
}
