//! The timestep loop.
//!
//! Each [`Simulation::step`] runs, in order: apply topology commands due at this timestep; sample
//! base monitorables for the current topology and apply pending scalar overrides; apply the
//! scenario disturbance; normalize and record; advance the timestep.

use thiserror::Error;

use crate::config::Config;
use crate::management::{round_half_up, CommandKind, CommandLog, Effector, EffectorCommand, InterfaceError, Probe};
use crate::managers::{AdaptationManager, ManagerError};
use crate::network::{
    compute_bandwidth, compute_writing_time, sample_base_monitorables, MirrorNetwork, Monitorables, Topology,
    TopologyRanges,
};
use crate::rng::{stream_rng, SimRng, DISTURBANCE_STREAM, ENVIRONMENT_STREAM, TOPOLOGY_STREAM};
use crate::satisfaction::{evaluate_satisfaction, normalize, SatisfactionSummary, SatisfactionThresholds};
use crate::scenario::{apply_disturbance, initial_topology, ScenarioState};
use crate::trace::{TopologyChange, TraceRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("all {0} timesteps have already run")]
    Finished(u32),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Overrides {
    active_links: Option<u32>,
    time_to_write: Option<f64>,
    bandwidth_consumption: Option<f64>,
}

/// One simulation instance: the managed system.
#[derive(Debug, Clone)]
pub struct Simulation {
    network: MirrorNetwork,
    ranges: TopologyRanges,
    scenario: ScenarioState,
    thresholds: SatisfactionThresholds,
    timesteps: u32,
    topology: Topology,
    next_timestep: u32,
    latest: Monitorables,
    environment_rng: SimRng,
    disturbance_rng: SimRng,
    /// (target timestep, topology) in issue order.
    pending_topology: Vec<(u32, Topology)>,
    overrides: Overrides,
    log: CommandLog,
    trace: Vec<TraceRecord>,
}

impl Simulation {
    pub fn new(config: &Config) -> Simulation {
        let props = &config.properties;
        let scenario = ScenarioState::new(props.scenario, &config.disturbances, props.disturbance_window)
            .expect("validated config yields a valid scenario profile");
        let mut topology_rng = stream_rng(props.seed, TOPOLOGY_STREAM);
        let scenario_topology = initial_topology(props.scenario, &mut topology_rng);
        Simulation {
            network: config.network,
            ranges: config.ranges,
            scenario,
            thresholds: props.thresholds,
            timesteps: props.timesteps,
            topology: config.initial_topology.unwrap_or(scenario_topology),
            next_timestep: 0,
            latest: Monitorables::default(),
            environment_rng: stream_rng(props.seed, ENVIRONMENT_STREAM),
            disturbance_rng: stream_rng(props.seed, DISTURBANCE_STREAM),
            pending_topology: Vec::new(),
            overrides: Overrides::default(),
            log: CommandLog::default(),
            trace: Vec::with_capacity(props.timesteps as usize),
        }
    }

    pub fn network(&self) -> &MirrorNetwork {
        &self.network
    }

    pub fn thresholds(&self) -> &SatisfactionThresholds {
        &self.thresholds
    }

    pub fn timesteps(&self) -> u32 {
        self.timesteps
    }

    /// The timestep the next call to [`step`](Self::step) will execute.
    pub fn next_timestep(&self) -> u32 {
        self.next_timestep
    }

    pub fn is_finished(&self) -> bool {
        self.next_timestep >= self.timesteps
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn monitorables(&self) -> Monitorables {
        self.latest
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn command_log(&self) -> &CommandLog {
        &self.log
    }

    pub fn summary(&self) -> Option<SatisfactionSummary> {
        evaluate_satisfaction(&self.trace, &self.thresholds).ok()
    }

    pub fn step(&mut self) -> Result<&TraceRecord, SimulationError> {
        if self.is_finished() {
            return Err(SimulationError::Finished(self.timesteps));
        }
        let t = self.next_timestep;

        let previous = self.topology;
        let mut due = Vec::new();
        self.pending_topology.retain(|&(target, topology)| {
            if target == t {
                due.push(topology);
            }
            target != t
        });
        if let Some(&topology) = due.last() {
            self.topology = topology;
        }
        let adaptation = (self.topology != previous).then_some(TopologyChange {
            from: previous,
            to: self.topology,
        });

        let sample = sample_base_monitorables(self.topology, &self.network, &self.ranges, &mut self.environment_rng);
        let mut base = sample.monitorables;
        let overrides = std::mem::take(&mut self.overrides);
        if let Some(links) = overrides.active_links {
            let alpha = self.network.alpha();
            base = Monitorables {
                active_links: links,
                bandwidth_consumption: compute_bandwidth(links, alpha, sample.bandwidth_per_link)
                    .expect("network alpha is valid"),
                time_to_write: compute_writing_time(links, alpha, sample.unit_write_time)
                    .expect("network alpha is valid"),
            };
        }
        if let Some(bw) = overrides.bandwidth_consumption {
            base.bandwidth_consumption = bw;
        }
        if let Some(wt) = overrides.time_to_write {
            base.time_to_write = wt;
        }

        let monitorables = apply_disturbance(
            &self.scenario,
            self.topology,
            &base,
            &self.network,
            t,
            &mut self.disturbance_rng,
        );
        self.latest = monitorables;
        self.trace.push(TraceRecord {
            timestep: t,
            topology: self.topology,
            monitorables,
            normalized: normalize(&monitorables, &self.network),
            adaptation,
        });
        self.next_timestep += 1;
        Ok(self.trace.last().expect("record was just pushed"))
    }

    fn accept(&mut self, kind: CommandKind) {
        self.log.push(EffectorCommand {
            issued_at: self.next_timestep,
            kind,
        });
    }

    fn check_running(&self) -> Result<(), InterfaceError> {
        if self.is_finished() {
            Err(InterfaceError::RunFinished)
        } else {
            Ok(())
        }
    }

    fn schedule_topology(&mut self, target: u32, topology: Topology) -> Result<(), InterfaceError> {
        self.check_running()?;
        if target < self.next_timestep {
            return Err(InterfaceError::PastTimestep {
                requested: target,
                current: self.next_timestep,
            });
        }
        if target >= self.timesteps {
            return Err(InterfaceError::BeyondRun {
                requested: target,
                last: self.timesteps - 1,
            });
        }
        self.pending_topology.push((target, topology));
        Ok(())
    }
}

fn check_non_negative(field: &'static str, value: f64) -> Result<(), InterfaceError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(InterfaceError::InvalidValue { field, value })
    }
}

impl Probe for Simulation {
    fn get_current_topology(&mut self) -> Result<Topology, InterfaceError> {
        Ok(self.topology)
    }

    fn get_bandwidth_consumption(&mut self) -> Result<u64, InterfaceError> {
        Ok(round_half_up(self.latest.bandwidth_consumption))
    }

    fn get_active_links(&mut self) -> Result<u32, InterfaceError> {
        Ok(self.latest.active_links)
    }

    fn get_time_to_write(&mut self) -> Result<u64, InterfaceError> {
        Ok(round_half_up(self.latest.time_to_write))
    }

    fn get_monitorables(&mut self) -> Result<Monitorables, InterfaceError> {
        Ok(self.latest)
    }
}

impl Effector for Simulation {
    fn set_network_topology(&mut self, timestep: u32, topology: Topology) -> Result<(), InterfaceError> {
        self.schedule_topology(timestep, topology)?;
        self.accept(CommandKind::SetNetworkTopology {
            topology,
            target_timestep: timestep,
        });
        Ok(())
    }

    fn set_active_links(&mut self, active_links: i64) -> Result<(), InterfaceError> {
        self.check_running()?;
        let total_links = self.network.total_links();
        let links = u32::try_from(active_links)
            .ok()
            .filter(|&l| l <= total_links)
            .ok_or(InterfaceError::ActiveLinksOutOfRange {
                value: active_links,
                total_links,
            })?;
        self.overrides.active_links = Some(links);
        self.accept(CommandKind::SetActiveLinks { value: links });
        Ok(())
    }

    fn set_time_to_write(&mut self, time_to_write: f64) -> Result<(), InterfaceError> {
        self.check_running()?;
        check_non_negative("time_to_write", time_to_write)?;
        self.overrides.time_to_write = Some(time_to_write);
        self.accept(CommandKind::SetTimeToWrite { value: time_to_write });
        Ok(())
    }

    fn set_bandwidth_consumption(&mut self, bandwidth_consumption: f64) -> Result<(), InterfaceError> {
        self.check_running()?;
        check_non_negative("bandwidth_consumption", bandwidth_consumption)?;
        self.overrides.bandwidth_consumption = Some(bandwidth_consumption);
        self.accept(CommandKind::SetBandwidthConsumption {
            value: bandwidth_consumption,
        });
        Ok(())
    }

    fn set_current_topology(&mut self, topology: Topology) -> Result<(), InterfaceError> {
        self.schedule_topology(self.next_timestep, topology)?;
        self.accept(CommandKind::SetCurrentTopology { topology });
        Ok(())
    }
}

#[derive(Debug, Error)]
#[error("manager {manager} failed at timestep {timestep}: {source}")]
pub struct RunError {
    pub manager: String,
    pub timestep: u32,
    #[source]
    pub source: ManagerError,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub summary: SatisfactionSummary,
    pub log: CommandLog,
}

/// Runs a full experiment: before every timestep the manager gets one MAPE iteration with probe
/// and effector access, then the simulation steps.
pub fn run(manager: &mut dyn AdaptationManager, config: &Config) -> Result<RunOutput, RunError> {
    let mut sim = Simulation::new(config);
    while !sim.is_finished() {
        let t = sim.next_timestep();
        manager.adapt(t, &mut sim).map_err(|source| RunError {
            manager: manager.name().to_owned(),
            timestep: t,
            source,
        })?;
        sim.step().expect("loop stops before the final timestep");
    }
    let summary = sim.summary().expect("timesteps >= 1 so the trace is nonempty");
    Ok(RunOutput {
        summary,
        trace: sim.trace,
        log: sim.log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioId;

    fn config(scenario: ScenarioId, seed: u64) -> Config {
        let mut c = Config::default();
        c.properties.scenario = scenario;
        c.properties.seed = seed;
        c
    }

    #[test]
    fn s0_records_are_in_range() {
        for seed in 0..10 {
            let mut sim = Simulation::new(&config(ScenarioId::S0, seed));
            while !sim.is_finished() {
                let r = *sim.step().unwrap();
                assert_eq!(r.topology, Topology::Mst);
                assert!((35.0..=50.0).contains(&r.normalized.active_links_pct));
                assert!(r.normalized.bandwidth_pct.is_finite() && r.normalized.write_time_pct.is_finite());
            }
            assert_eq!(sim.trace().len(), 100);
            assert!(matches!(sim.step(), Err(SimulationError::Finished(100))));
        }
    }

    #[test]
    fn probes_before_first_step() {
        let mut sim = Simulation::new(&config(ScenarioId::S2, 1));
        assert_eq!(sim.get_current_topology().unwrap(), Topology::Rt);
        assert_eq!(sim.get_monitorables().unwrap(), Monitorables::default());
    }

    #[test]
    fn topology_command_applies_on_target_step() {
        let mut sim = Simulation::new(&config(ScenarioId::S0, 3));
        sim.step().unwrap();
        sim.set_network_topology(2, Topology::Rt).unwrap();
        assert_eq!(sim.step().unwrap().topology, Topology::Mst);
        assert_eq!(sim.get_current_topology().unwrap(), Topology::Mst);
        let r = *sim.step().unwrap();
        assert_eq!(r.topology, Topology::Rt);
        assert_eq!(
            r.adaptation,
            Some(TopologyChange {
                from: Topology::Mst,
                to: Topology::Rt
            })
        );
        assert_eq!(sim.get_current_topology().unwrap(), Topology::Rt);
        assert!((60.0..=90.0).contains(&r.normalized.active_links_pct));
    }

    #[test]
    fn same_target_last_issued_wins() {
        let mut sim = Simulation::new(&config(ScenarioId::S0, 3));
        sim.set_network_topology(1, Topology::Rt).unwrap();
        sim.set_network_topology(1, Topology::Mst).unwrap();
        sim.step().unwrap();
        assert_eq!(sim.step().unwrap().topology, Topology::Mst);
        assert_eq!(sim.command_log().len(), 2);
    }

    #[test]
    fn setting_current_topology_again_is_logged_but_invisible() {
        let mut sim = Simulation::new(&config(ScenarioId::S0, 3));
        sim.set_current_topology(Topology::Mst).unwrap();
        let r = *sim.step().unwrap();
        assert_eq!(r.topology, Topology::Mst);
        assert_eq!(r.adaptation, None);
        assert_eq!(sim.command_log().len(), 1);
    }

    #[test]
    fn effector_rejections() {
        let mut sim = Simulation::new(&config(ScenarioId::S0, 3));
        sim.step().unwrap();
        sim.step().unwrap();
        assert_eq!(
            sim.set_network_topology(1, Topology::Rt),
            Err(InterfaceError::PastTimestep {
                requested: 1,
                current: 2
            })
        );
        assert!(matches!(
            sim.set_network_topology(100, Topology::Rt),
            Err(InterfaceError::BeyondRun { .. })
        ));
        assert!(matches!(
            sim.set_active_links(301),
            Err(InterfaceError::ActiveLinksOutOfRange { .. })
        ));
        assert!(matches!(
            sim.set_active_links(-1),
            Err(InterfaceError::ActiveLinksOutOfRange { .. })
        ));
        assert!(matches!(
            sim.set_bandwidth_consumption(-1.0),
            Err(InterfaceError::InvalidValue { .. })
        ));
        assert!(matches!(
            sim.set_time_to_write(f64::NAN),
            Err(InterfaceError::InvalidValue { .. })
        ));
        assert!(sim.command_log().is_empty());
    }

    #[test]
    fn overrides_last_one_step() {
        let mut sim = Simulation::new(&config(ScenarioId::S0, 5));
        sim.set_active_links(200).unwrap();
        sim.set_time_to_write(500.0).unwrap();
        let r = *sim.step().unwrap();
        assert_eq!(r.monitorables.active_links, 200);
        assert_eq!(r.monitorables.time_to_write, 500.0);
        // bandwidth follows the overridden link count
        let per_link = r.monitorables.bandwidth_consumption / 200.0;
        assert!((20.0..=30.0).contains(&per_link));
        assert_eq!(sim.get_time_to_write().unwrap(), 500);
        let r = *sim.step().unwrap();
        assert!((105..=150).contains(&r.monitorables.active_links));
    }

    #[test]
    fn override_is_still_disturbed() {
        let mut c = config(ScenarioId::S1, 5);
        c.disturbances.link_reduction = crate::network::Interval::point(0.5);
        let mut sim = Simulation::new(&c);
        sim.set_active_links(200).unwrap();
        assert_eq!(sim.step().unwrap().monitorables.active_links, 100);
    }

    #[test]
    fn probe_rounding() {
        let mut sim = Simulation::new(&config(ScenarioId::S0, 5));
        sim.set_bandwidth_consumption(2100.6).unwrap();
        sim.step().unwrap();
        assert_eq!(sim.get_bandwidth_consumption().unwrap(), 2101);
        assert_eq!(sim.get_monitorables().unwrap().bandwidth_consumption, 2100.6);
    }

    #[test]
    fn lockstep_determinism() {
        let mut a = Simulation::new(&config(ScenarioId::S6, 11));
        let mut b = Simulation::new(&config(ScenarioId::S6, 11));
        while !a.is_finished() {
            assert_eq!(a.step().unwrap(), b.step().unwrap());
        }
    }

    #[test]
    fn finished_simulation_rejects_commands() {
        let mut c = config(ScenarioId::S0, 1);
        c.properties.timesteps = 1;
        let mut sim = Simulation::new(&c);
        sim.step().unwrap();
        assert_eq!(sim.set_current_topology(Topology::Rt), Err(InterfaceError::RunFinished));
        assert_eq!(sim.set_active_links(3), Err(InterfaceError::RunFinished));
    }
}
