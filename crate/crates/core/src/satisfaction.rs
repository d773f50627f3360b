//! Normalization of monitorables and evaluation of the three quality objectives.
//!
//! Percentages are taken against the largest undisturbed value a timestep can produce: all links
//! active, for active links; all links at the upper per-link bound, for bandwidth and write time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{MirrorNetwork, Monitorables};
use crate::trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionThresholds {
    /// Minimization of cost: mean bandwidth percent must not exceed this.
    #[serde(rename = "bandwidth_pct")]
    pub max_bandwidth_pct: f64,
    /// Maximization of performance: mean write-time percent must not exceed this.
    #[serde(rename = "write_time_pct")]
    pub max_write_time_pct: f64,
    /// Maximization of reliability: mean active-links percent must reach at least this.
    #[serde(rename = "active_links_pct")]
    pub min_active_links_pct: f64,
}

impl Default for SatisfactionThresholds {
    fn default() -> Self {
        SatisfactionThresholds {
            max_bandwidth_pct: 40.0,
            max_write_time_pct: 45.0,
            min_active_links_pct: 35.0,
        }
    }
}

impl SatisfactionThresholds {
    pub fn is_valid(&self) -> bool {
        [self.max_bandwidth_pct, self.max_write_time_pct, self.min_active_links_pct]
            .iter()
            .all(|&p| p > 0.0 && p <= 100.0)
    }

    pub fn cost_violated(&self, bandwidth_pct: f64) -> bool {
        bandwidth_pct > self.max_bandwidth_pct
    }

    pub fn performance_violated(&self, write_time_pct: f64) -> bool {
        write_time_pct > self.max_write_time_pct
    }

    pub fn reliability_violated(&self, active_links_pct: f64) -> bool {
        active_links_pct < self.min_active_links_pct
    }
}

/// Monitorables as percentages of their normalization basis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Normalized {
    pub bandwidth_pct: f64,
    pub write_time_pct: f64,
    pub active_links_pct: f64,
}

pub fn normalize(monitorables: &Monitorables, network: &MirrorNetwork) -> Normalized {
    Normalized {
        bandwidth_pct: 100.0 * monitorables.bandwidth_consumption / network.max_bandwidth(),
        write_time_pct: 100.0 * monitorables.time_to_write / network.max_write_time(),
        active_links_pct: 100.0 * f64::from(monitorables.active_links) / f64::from(network.total_links()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionSummary {
    pub mean_bandwidth_pct: f64,
    pub mean_write_time_pct: f64,
    pub mean_active_links_pct: f64,
    pub mc_satisfied: bool,
    pub mp_satisfied: bool,
    pub mr_satisfied: bool,
}

impl SatisfactionSummary {
    pub fn from_means(means: Normalized, thresholds: &SatisfactionThresholds) -> Self {
        SatisfactionSummary {
            mean_bandwidth_pct: means.bandwidth_pct,
            mean_write_time_pct: means.write_time_pct,
            mean_active_links_pct: means.active_links_pct,
            mc_satisfied: !thresholds.cost_violated(means.bandwidth_pct),
            mp_satisfied: !thresholds.performance_violated(means.write_time_pct),
            mr_satisfied: !thresholds.reliability_violated(means.active_links_pct),
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.mc_satisfied && self.mp_satisfied && self.mr_satisfied
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("cannot evaluate satisfaction of an empty trace")]
pub struct EmptyTrace;

/// Arithmetic mean of each normalized series.
pub fn mean_normalized<'a>(series: impl IntoIterator<Item = &'a Normalized>) -> Result<Normalized, EmptyTrace> {
    let (mut n, mut sum) = (0usize, Normalized::default());
    for p in series {
        n += 1;
        sum.bandwidth_pct += p.bandwidth_pct;
        sum.write_time_pct += p.write_time_pct;
        sum.active_links_pct += p.active_links_pct;
    }
    if n == 0 {
        return Err(EmptyTrace);
    }
    let n = n as f64;
    Ok(Normalized {
        bandwidth_pct: sum.bandwidth_pct / n,
        write_time_pct: sum.write_time_pct / n,
        active_links_pct: sum.active_links_pct / n,
    })
}

/// Means over every record of the trace, compared inclusively against the thresholds.
pub fn evaluate_satisfaction(
    trace: &[TraceRecord],
    thresholds: &SatisfactionThresholds,
) -> Result<SatisfactionSummary, EmptyTrace> {
    let means = mean_normalized(trace.iter().map(|r| &r.normalized))?;
    Ok(SatisfactionSummary::from_means(means, thresholds))
}
