//! Per-timestep trace records and their CSV form.
//!
//! Real values are written with six decimal places so identical runs produce identical bytes.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Monitorables, Topology};
use crate::satisfaction::Normalized;

pub const TRACE_HEADER: &str = "timestep,topology,active_links,bandwidth_gbps,time_to_write_ms,active_links_pct,bandwidth_pct,write_time_pct,adaptation";

/// Topology switch that took effect at a timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyChange {
    pub from: Topology,
    pub to: Topology,
}

impl fmt::Display for TopologyChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for TopologyChange {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TraceError::Field {
            line: 0,
            column: "adaptation",
            value: s.to_owned(),
        };
        let (from, to) = s.split_once("->").ok_or_else(bad)?;
        Ok(TopologyChange {
            from: from.parse().map_err(|_| bad())?,
            to: to.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestep: u32,
    pub topology: Topology,
    pub monitorables: Monitorables,
    pub normalized: Normalized,
    pub adaptation: Option<TopologyChange>,
}

impl TraceRecord {
    pub fn to_csv_row(&self) -> String {
        let m = &self.monitorables;
        let n = &self.normalized;
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.timestep,
            self.topology,
            m.active_links,
            m.bandwidth_consumption,
            m.time_to_write,
            n.active_links_pct,
            n.bandwidth_pct,
            n.write_time_pct,
            self.adaptation.map(|a| a.to_string()).unwrap_or_default()
        )
    }
}

pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    out.flush()
}

pub fn trace_to_csv(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace CSV is ASCII")
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("missing or unexpected trace header")]
    Header,
    #[error("line {line}: expected 9 columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: bad {column} value {value:?}")]
    Field {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: timestep {found} does not follow {previous}")]
    NonConsecutive { line: usize, previous: u32, found: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One parsed trace line, keeping the raw text of the three percentage columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub record: TraceRecord,
    pub active_links_pct: String,
    pub bandwidth_pct: String,
    pub write_time_pct: String,
}

fn field<T: FromStr>(line: usize, column: &'static str, value: &str) -> Result<T, TraceError> {
    value.parse().map_err(|_| TraceError::Field {
        line,
        column,
        value: value.to_owned(),
    })
}

/// Parses a trace CSV, checking the header and that timesteps are consecutive from 0.
pub fn read_trace_csv<R: BufRead>(input: R) -> Result<Vec<TraceRow>, TraceError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some(TRACE_HEADER) {
        return Err(TraceError::Header);
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(TraceError::Columns {
                line: line_no,
                found: cols.len(),
            });
        }
        let timestep: u32 = field(line_no, "timestep", cols[0])?;
        let expected = rows.last().map_or(0, |r| r.record.timestep + 1);
        if timestep != expected {
            return Err(TraceError::NonConsecutive {
                line: line_no,
                previous: expected.wrapping_sub(1),
                found: timestep,
            });
        }
        let adaptation = if cols[8].is_empty() {
            None
        } else {
            Some(cols[8].parse::<TopologyChange>().map_err(|_| TraceError::Field {
                line: line_no,
                column: "adaptation",
                value: cols[8].to_owned(),
            })?)
        };
        let record = TraceRecord {
            timestep,
            topology: field(line_no, "topology", cols[1])?,
            monitorables: Monitorables {
                active_links: field(line_no, "active_links", cols[2])?,
                bandwidth_consumption: field(line_no, "bandwidth_gbps", cols[3])?,
                time_to_write: field(line_no, "time_to_write_ms", cols[4])?,
            },
            normalized: Normalized {
                active_links_pct: field(line_no, "active_links_pct", cols[5])?,
                bandwidth_pct: field(line_no, "bandwidth_pct", cols[6])?,
                write_time_pct: field(line_no, "write_time_pct", cols[7])?,
            },
            adaptation,
        };
        rows.push(TraceRow {
            record,
            active_links_pct: cols[5].to_owned(),
            bandwidth_pct: cols[6].to_owned(),
            write_time_pct: cols[7].to_owned(),
        });
    }
    Ok(rows)
}
