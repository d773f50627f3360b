//! Seeded random streams.
//!
//! Every source of randomness in a run gets its own ChaCha8 stream derived from the run seed, so
//! drawing from one stream never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Base monitorable sampling.
pub const ENVIRONMENT_STREAM: u64 = 0;
/// Scenario disturbance factors.
pub const DISTURBANCE_STREAM: u64 = 1;
/// Initial topology coin for scenarios that randomize it.
pub const TOPOLOGY_STREAM: u64 = 2;
/// Reserved for managers that need randomness.
pub const MANAGER_STREAM: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
