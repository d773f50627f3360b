//! Static description of the mirror network and the closed-form monitorables.
//!
//! The network is fully connected, so `m` mirrors always yield `m(m-1)/2` links. Topologies are
//! not modelled as explicit graphs: each topology owns a range of active-link counts that is
//! sampled every timestep, and bandwidth and write time follow from the active-link count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("a network needs at least 2 mirrors, got {0}")]
    TooFewMirrors(u32),
    #[error("{0} mirrors exceed the supported link count")]
    TooManyMirrors(u32),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("{name} range [{lower}, {upper}] must be positive with lower <= upper")]
    InvalidRange {
        name: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("{name} active-link range [{lower}, {upper}] must lie within [1, {total_links}]")]
    LinkRangeOutOfBounds {
        name: &'static str,
        lower: u32,
        upper: u32,
        total_links: u32,
    },
    #[error("RT range lower bound {rt_lower} is below MST range upper bound {mst_upper}")]
    RangesOverlap { mst_upper: u32, rt_lower: u32 },
}

/// Closed interval `[lower, upper]`. Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T>(T, T);

impl<T: Copy> Interval<T> {
    pub const fn new(lower: T, upper: T) -> Self {
        Interval(lower, upper)
    }

    pub const fn point(value: T) -> Self {
        Interval(value, value)
    }

    pub fn lower(&self) -> T {
        self.0
    }

    pub fn upper(&self) -> T {
        self.1
    }
}

impl Interval<f64> {
    pub fn contains(&self, value: f64) -> bool {
        self.0 <= value && value <= self.1
    }

    /// Both bounds finite and strictly positive, lower <= upper.
    pub fn is_positive(&self) -> bool {
        self.0.is_finite() && self.1.is_finite() && self.0 > 0.0 && self.0 <= self.1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.0..=self.1)
    }

    fn validate(&self, name: &'static str) -> Result<(), NetworkError> {
        if self.is_positive() {
            Ok(())
        } else {
            Err(NetworkError::InvalidRange {
                name,
                lower: self.0,
                upper: self.1,
            })
        }
    }
}

impl Interval<u32> {
    pub fn contains(&self, value: u32) -> bool {
        self.0 <= value && value <= self.1
    }
}

/// Realization strategy for mirroring data across the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Topology {
    /// Minimum spanning tree: fewest links, cheaper and faster, less reliable.
    #[serde(rename = "MST", alias = "mst")]
    Mst,
    /// Redundant topology: many simultaneous link paths, reliable but costly and slower.
    #[serde(rename = "RT", alias = "rt")]
    Rt,
}

impl Topology {
    pub fn other(self) -> Topology {
        match self {
            Topology::Mst => Topology::Rt,
            Topology::Rt => Topology::Mst,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Mst => "MST",
            Topology::Rt => "RT",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown topology {0:?} (expected MST or RT)")]
pub struct UnknownTopology(pub String);

impl FromStr for Topology {
    type Err = UnknownTopology;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MST" => Ok(Topology::Mst),
            "RT" => Ok(Topology::Rt),
            _ => Err(UnknownTopology(s.to_owned())),
        }
    }
}

/// Tunable physical parameters of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// GigaBytes per second carried by one active link.
    pub bandwidth_per_link_range: Interval<f64>,
    /// Milliseconds to write one data unit over one active link.
    pub unit_write_time_range: Interval<f64>,
    /// Fraction of the active links that forms the communication path.
    pub alpha: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            bandwidth_per_link_range: Interval::new(20.0, 30.0),
            unit_write_time_range: Interval::new(10.0, 20.0),
            alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorNetwork {
    num_mirrors: u32,
    total_links: u32,
    bandwidth_per_link_range: Interval<f64>,
    unit_write_time_range: Interval<f64>,
    alpha: f64,
}

/// Builds a fully connected network of `num_mirrors` mirrors.
pub fn build_network(num_mirrors: u32, params: &NetworkParams) -> Result<MirrorNetwork, NetworkError> {
    if num_mirrors < 2 {
        return Err(NetworkError::TooFewMirrors(num_mirrors));
    }
    let links = u64::from(num_mirrors) * (u64::from(num_mirrors) - 1) / 2;
    let total_links = u32::try_from(links).map_err(|_| NetworkError::TooManyMirrors(num_mirrors))?;
    check_alpha(params.alpha)?;
    params.bandwidth_per_link_range.validate("bandwidth_per_link")?;
    params.unit_write_time_range.validate("unit_write_time")?;
    Ok(MirrorNetwork {
        num_mirrors,
        total_links,
        bandwidth_per_link_range: params.bandwidth_per_link_range,
        unit_write_time_range: params.unit_write_time_range,
        alpha: params.alpha,
    })
}

impl MirrorNetwork {
    pub fn num_mirrors(&self) -> u32 {
        self.num_mirrors
    }

    pub fn total_links(&self) -> u32 {
        self.total_links
    }

    pub fn bandwidth_per_link_range(&self) -> Interval<f64> {
        self.bandwidth_per_link_range
    }

    pub fn unit_write_time_range(&self) -> Interval<f64> {
        self.unit_write_time_range
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> NetworkParams {
        NetworkParams {
            bandwidth_per_link_range: self.bandwidth_per_link_range,
            unit_write_time_range: self.unit_write_time_range,
            alpha: self.alpha,
        }
    }

    /// Highest bandwidth a single timestep can consume without disturbance.
    pub fn max_bandwidth(&self) -> f64 {
        f64::from(self.total_links) * self.bandwidth_per_link_range.upper()
    }

    /// Highest write time a single timestep can take without disturbance.
    pub fn max_write_time(&self) -> f64 {
        f64::from(self.total_links) * self.unit_write_time_range.upper()
    }
}

/// Active-link ranges for each topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyRanges {
    pub mst_active_links: Interval<u32>,
    pub rt_active_links: Interval<u32>,
}

impl TopologyRanges {
    pub fn new(
        mst_active_links: Interval<u32>,
        rt_active_links: Interval<u32>,
        total_links: u32,
    ) -> Result<Self, NetworkError> {
        let ranges = TopologyRanges {
            mst_active_links,
            rt_active_links,
        };
        ranges.validate(total_links)?;
        Ok(ranges)
    }

    /// Converts percentage-of-total-links ranges into link counts, rounding half-up.
    pub fn from_percentages(
        network: &MirrorNetwork,
        mst_pct: Interval<f64>,
        rt_pct: Interval<f64>,
    ) -> Result<Self, NetworkError> {
        let total = network.total_links();
        let to_links = |pct: f64| (pct / 100.0 * f64::from(total)).round().max(0.0) as u32;
        let convert = |name: &'static str, r: Interval<f64>| {
            if !(r.lower().is_finite() && r.upper().is_finite() && r.lower() <= r.upper()) {
                return Err(NetworkError::InvalidRange {
                    name,
                    lower: r.lower(),
                    upper: r.upper(),
                });
            }
            Ok(Interval::new(to_links(r.lower()), to_links(r.upper())))
        };
        TopologyRanges::new(convert("mst", mst_pct)?, convert("rt", rt_pct)?, total)
    }

    /// Defaults: MST uses 35-50% of the links, RT uses 60-90%.
    pub fn default_for(network: &MirrorNetwork) -> Self {
        TopologyRanges::from_percentages(network, Interval::new(35.0, 50.0), Interval::new(60.0, 90.0))
            .expect("default percentage ranges are valid for any network")
    }

    pub fn validate(&self, total_links: u32) -> Result<(), NetworkError> {
        for (name, r) in [("mst", self.mst_active_links), ("rt", self.rt_active_links)] {
            if r.lower() < 1 || r.lower() > r.upper() || r.upper() > total_links {
                return Err(NetworkError::LinkRangeOutOfBounds {
                    name,
                    lower: r.lower(),
                    upper: r.upper(),
                    total_links,
                });
            }
        }
        if self.rt_active_links.lower() < self.mst_active_links.upper() {
            return Err(NetworkError::RangesOverlap {
                mst_upper: self.mst_active_links.upper(),
                rt_lower: self.rt_active_links.lower(),
            });
        }
        Ok(())
    }

    pub fn for_topology(&self, topology: Topology) -> Interval<u32> {
        match topology {
            Topology::Mst => self.mst_active_links,
            Topology::Rt => self.rt_active_links,
        }
    }
}

/// The three observed metrics at one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Monitorables {
    /// Number of active network links.
    pub active_links: u32,
    /// GigaBytes per second.
    pub bandwidth_consumption: f64,
    /// Milliseconds.
    pub time_to_write: f64,
}

/// One undisturbed draw together with the per-link unit values it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSample {
    pub monitorables: Monitorables,
    pub unit_write_time: f64,
    pub bandwidth_per_link: f64,
}

fn check_alpha(alpha: f64) -> Result<(), NetworkError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(NetworkError::InvalidAlpha(alpha))
    }
}

/// Total writing time in milliseconds: `(alpha * active_links) * unit_write_time`.
pub fn compute_writing_time(active_links: u32, alpha: f64, unit_write_time: f64) -> Result<f64, NetworkError> {
    check_alpha(alpha)?;
    Ok((alpha * f64::from(active_links)) * unit_write_time)
}

/// Total bandwidth consumed in GBps: `(alpha * active_links) * bandwidth_per_link`.
pub fn compute_bandwidth(active_links: u32, alpha: f64, bandwidth_per_link: f64) -> Result<f64, NetworkError> {
    check_alpha(alpha)?;
    Ok((alpha * f64::from(active_links)) * bandwidth_per_link)
}

pub fn sample_active_links<R: Rng + ?Sized>(topology: Topology, ranges: &TopologyRanges, rng: &mut R) -> u32 {
    let range = ranges.for_topology(topology);
    rng.random_range(range.lower()..=range.upper())
}

/// Samples undisturbed monitorables for `topology`.
///
/// Draw order is fixed: active links, then the unit write time, then the per-link bandwidth.
pub fn sample_base_monitorables<R: Rng + ?Sized>(
    topology: Topology,
    network: &MirrorNetwork,
    ranges: &TopologyRanges,
    rng: &mut R,
) -> BaseSample {
    let active_links = sample_active_links(topology, ranges, rng);
    let unit_write_time = network.unit_write_time_range.sample(rng);
    let bandwidth_per_link = network.bandwidth_per_link_range.sample(rng);
    // alpha was validated when the network was built
    let alpha = network.alpha;
    BaseSample {
        monitorables: Monitorables {
            active_links,
            bandwidth_consumption: (alpha * f64::from(active_links)) * bandwidth_per_link,
            time_to_write: (alpha * f64::from(active_links)) * unit_write_time,
        },
        unit_write_time,
        bandwidth_per_link,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn default_network(m: u32) -> MirrorNetwork {
        build_network(m, &NetworkParams::default()).unwrap()
    }

    #[test]
    fn link_counts() {
        assert_eq!(default_network(25).total_links(), 300);
        assert_eq!(default_network(2).total_links(), 1);
        assert_eq!(default_network(10).total_links(), 45);
    }

    #[test]
    fn rejects_bad_networks() {
        assert_eq!(
            build_network(1, &NetworkParams::default()),
            Err(NetworkError::TooFewMirrors(1))
        );
        let inverted = NetworkParams {
            unit_write_time_range: Interval::new(20.0, 10.0),
            ..NetworkParams::default()
        };
        assert!(matches!(
            build_network(25, &inverted),
            Err(NetworkError::InvalidRange { .. })
        ));
        let zero = NetworkParams {
            bandwidth_per_link_range: Interval::new(0.0, 30.0),
            ..NetworkParams::default()
        };
        assert!(build_network(25, &zero).is_err());
        for alpha in [0.0, -0.1, 1.01, f64::NAN] {
            let p = NetworkParams {
                alpha,
                ..NetworkParams::default()
            };
            assert!(matches!(build_network(25, &p), Err(NetworkError::InvalidAlpha(_))));
        }
    }

    #[test]
    fn formulas() {
        assert_eq!(compute_writing_time(24, 1.0, 15.0).unwrap(), 360.0);
        assert_eq!(compute_writing_time(0, 1.0, 15.0).unwrap(), 0.0);
        assert_eq!(compute_writing_time(100, 0.5, 10.0).unwrap(), 500.0);
        assert_eq!(compute_bandwidth(105, 1.0, 20.0).unwrap(), 2100.0);
        assert_eq!(compute_bandwidth(0, 1.0, 25.0).unwrap(), 0.0);
        assert_eq!(compute_bandwidth(300, 1.0, 30.0).unwrap(), 9000.0);
        assert!(compute_bandwidth(10, 0.0, 20.0).is_err());
        assert!(compute_writing_time(10, 1.5, 20.0).is_err());
    }

    #[test]
    fn default_ranges() {
        let ranges = TopologyRanges::default_for(&default_network(25));
        assert_eq!(ranges.mst_active_links, Interval::new(105, 150));
        assert_eq!(ranges.rt_active_links, Interval::new(180, 270));
    }

    #[test]
    fn range_validation() {
        assert!(matches!(
            TopologyRanges::new(Interval::new(100, 200), Interval::new(150, 250), 300),
            Err(NetworkError::RangesOverlap { .. })
        ));
        assert!(TopologyRanges::new(Interval::new(0, 10), Interval::new(20, 30), 300).is_err());
        assert!(TopologyRanges::new(Interval::new(10, 20), Interval::new(20, 301), 300).is_err());
        assert!(TopologyRanges::new(Interval::new(10, 20), Interval::new(20, 300), 300).is_ok());
    }

    #[test]
    fn sampled_links_stay_in_range() {
        let ranges = TopologyRanges::default_for(&default_network(25));
        let mut rng = stream_rng(42, 0);
        for _ in 0..1000 {
            assert!((105..=150).contains(&sample_active_links(Topology::Mst, &ranges, &mut rng)));
            assert!((180..=270).contains(&sample_active_links(Topology::Rt, &ranges, &mut rng)));
        }
        let pinned = TopologyRanges::new(Interval::point(120), Interval::point(200), 300).unwrap();
        assert_eq!(sample_active_links(Topology::Mst, &pinned, &mut rng), 120);
    }

    #[test]
    fn base_sample_bounds_by_brute_force() {
        // Interval arithmetic: links [105,150] x write unit [10,20] and bandwidth unit [20,30].
        let network = default_network(25);
        let ranges = TopologyRanges::default_for(&network);
        let mut rng = stream_rng(42, 0);
        for _ in 0..10_000 {
            let m = sample_base_monitorables(Topology::Mst, &network, &ranges, &mut rng).monitorables;
            assert!((105..=150).contains(&m.active_links));
            assert!((1050.0..=3000.0).contains(&m.time_to_write));
            assert!((2100.0..=4500.0).contains(&m.bandwidth_consumption));
        }
    }

    #[test]
    fn degenerate_ranges_force_the_product() {
        let params = NetworkParams {
            bandwidth_per_link_range: Interval::point(30.0),
            unit_write_time_range: Interval::point(20.0),
            alpha: 1.0,
        };
        let network = build_network(25, &params).unwrap();
        let ranges = TopologyRanges::new(Interval::new(105, 150), Interval::point(300), 300).unwrap();
        let s = sample_base_monitorables(Topology::Rt, &network, &ranges, &mut stream_rng(1, 0));
        assert_eq!(
            s.monitorables,
            Monitorables {
                active_links: 300,
                bandwidth_consumption: 9000.0,
                time_to_write: 6000.0
            }
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let network = default_network(25);
        let ranges = TopologyRanges::default_for(&network);
        let a = sample_base_monitorables(Topology::Mst, &network, &ranges, &mut stream_rng(42, 0));
        let b = sample_base_monitorables(Topology::Mst, &network, &ranges, &mut stream_rng(42, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn topology_parsing() {
        assert_eq!("mst".parse::<Topology>().unwrap(), Topology::Mst);
        assert_eq!("RT".parse::<Topology>().unwrap(), Topology::Rt);
        assert!("ring".parse::<Topology>().is_err());
        assert_eq!(serde_json::to_string(&Topology::Rt).unwrap(), "\"RT\"");
        assert_eq!(serde_json::from_str::<Topology>("\"mst\"").unwrap(), Topology::Mst);
        assert_eq!(Topology::Mst.other(), Topology::Rt);
    }
}
