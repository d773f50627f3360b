//! Long-format plot data: one row per (timestep, normalized series).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};

use anyhow::Context;
use rdmsim::trace::TraceRow;
use rdmsim::{load_config, read_trace_csv, SatisfactionThresholds};

use crate::{CliError, PlotArgs};

pub const PLOT_HEADER: &str = "timestep,series,value,threshold";

pub fn write_plot_data<W: Write>(rows: &[TraceRow], thresholds: &SatisfactionThresholds, mut out: W) -> io::Result<()> {
    writeln!(out, "{PLOT_HEADER}")?;
    for row in rows {
        let t = row.record.timestep;
        for (series, value, threshold) in [
            ("bandwidth_pct", &row.bandwidth_pct, thresholds.max_bandwidth_pct),
            ("write_time_pct", &row.write_time_pct, thresholds.max_write_time_pct),
            ("active_links_pct", &row.active_links_pct, thresholds.min_active_links_pct),
        ] {
            writeln!(out, "{t},{series},{value},{threshold:.6}")?;
        }
    }
    out.flush()
}

pub fn run(args: &PlotArgs) -> Result<(), CliError> {
    let thresholds = match &args.config {
        Some(path) => load_config(path).map_err(CliError::config)?.properties.thresholds,
        None => SatisfactionThresholds::default(),
    };
    let file = File::open(&args.trace)
        .with_context(|| format!("opening {}", args.trace.display()))
        .map_err(CliError::io)?;
    let rows = read_trace_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", args.trace.display()))
        .map_err(CliError::config)?;
    let written = match &args.out {
        Some(path) => File::create(path).and_then(|f| write_plot_data(&rows, &thresholds, BufWriter::new(f))),
        None => write_plot_data(&rows, &thresholds, io::stdout().lock()),
    };
    written.context("writing plot data").map_err(CliError::io)
}
