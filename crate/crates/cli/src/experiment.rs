//! Batch runs: every scenario x seed with one manager, then a roll-up table.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use rdmsim::{
    run as run_simulation, write_trace_csv, CommandLog, Config, SatisfactionSummary, SatisfactionThresholds,
    ScenarioId, TraceRecord,
};
use serde::Serialize;

use crate::{CliError, OutputFormat, RunArgs};

pub const ROLLUP_FILE: &str = "rollup.csv";
pub const ROLLUP_HEADER: &str = "scenario,seed,manager,mean_bandwidth_pct,mean_write_time_pct,mean_active_links_pct,mc_satisfied,mp_satisfied,mr_satisfied,adaptations";

/// Per-run summary document.
#[derive(Debug, Serialize)]
pub struct SummaryDocument<'a> {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub manager: &'a str,
    pub timesteps: u32,
    pub timesteps_completed: usize,
    pub complete: bool,
    pub adaptations: usize,
    pub thresholds: SatisfactionThresholds,
    #[serde(flatten)]
    pub summary: Option<SatisfactionSummary>,
}

pub struct RunArtifacts<'a> {
    pub stem: String,
    pub config: &'a Config,
    pub manager: &'a str,
    pub trace: &'a [TraceRecord],
    pub log: &'a CommandLog,
    pub summary: Option<SatisfactionSummary>,
    pub complete: bool,
}

impl RunArtifacts<'_> {
    pub fn adaptations(&self) -> usize {
        self.trace.iter().filter(|r| r.adaptation.is_some()).count()
    }

    pub fn write(&self, dir: &Path, formats: &[OutputFormat]) -> anyhow::Result<()> {
        if formats.contains(&OutputFormat::Csv) {
            let path = dir.join(format!("{}.trace.csv", self.stem));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trace_csv(self.trace, BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
        }
        if formats.contains(&OutputFormat::Json) {
            let p = &self.config.properties;
            let doc = SummaryDocument {
                scenario: p.scenario,
                seed: p.seed,
                manager: self.manager,
                timesteps: p.timesteps,
                timesteps_completed: self.trace.len(),
                complete: self.complete,
                adaptations: self.adaptations(),
                thresholds: p.thresholds,
                summary: self.summary,
            };
            write_json(&dir.join(format!("{}.summary.json", self.stem)), &doc)?;
            write_json(&dir.join(format!("{}.commands.json", self.stem)), self.log)?;
        }
        Ok(())
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct RollupRow {
    scenario: ScenarioId,
    seed: u64,
    summary: SatisfactionSummary,
    adaptations: usize,
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let base = args.experiment.base_config()?;
    let scenarios = args.experiment.scenarios(&base);
    let seeds = args.experiment.seeds(&base);
    let jobs: Vec<Config> = scenarios
        .iter()
        .flat_map(|&scenario| {
            let base = &base;
            seeds.iter().map(move |&seed| {
                let mut c = base.clone();
                c.properties.scenario = scenario;
                c.properties.seed = seed;
                c
            })
        })
        .collect();
    for job in &jobs {
        job.validate().map_err(CliError::config)?;
        args.manager.build(job).map_err(CliError::manager)?;
    }

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::io)?;
    let manager_name = args.manager.as_str();
    let rows = jobs
        .par_iter()
        .map(|config| {
            let mut manager = args.manager.build(config).map_err(CliError::manager)?;
            let out = run_simulation(manager.as_mut(), config).map_err(CliError::manager)?;
            let p = &config.properties;
            let artifacts = RunArtifacts {
                stem: format!("{}_{}_seed{}", p.scenario, manager_name, p.seed),
                config,
                manager: manager_name,
                trace: &out.trace,
                log: &out.log,
                summary: Some(out.summary),
                complete: true,
            };
            artifacts.write(&args.out, &args.format).map_err(CliError::io)?;
            Ok(RollupRow {
                scenario: p.scenario,
                seed: p.seed,
                summary: out.summary,
                adaptations: artifacts.adaptations(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let path: PathBuf = args.out.join(ROLLUP_FILE);
    write_rollup(&path, manager_name, &rows)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::io)?;
    eprintln!("wrote {} runs to {}", rows.len(), args.out.display());
    Ok(())
}

fn write_rollup(path: &Path, manager: &str, rows: &[RollupRow]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{ROLLUP_HEADER}")?;
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            r.scenario,
            r.seed,
            manager,
            s.mean_bandwidth_pct,
            s.mean_write_time_pct,
            s.mean_active_links_pct,
            s.mc_satisfied,
            s.mp_satisfied,
            s.mr_satisfied,
            r.adaptations
        )?;
    }
    out.flush()
}
