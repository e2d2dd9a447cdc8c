//! Seed-derived random substreams.
//!
//! Every run has one master seed. Each consumer gets its own ChaCha8 stream
//! keyed by that seed and selected with [`ChaCha8Rng::set_stream`], so the
//! draws seen by one consumer never depend on how many draws another made:
//!
//! | stream id            | consumer                               |
//! |----------------------|----------------------------------------|
//! | `node`               | mobility of vehicle `node`             |
//! | `1 << 32`            | initial placement of all vehicles      |
//! | `2 << 32`            | CBR flow selection                     |
//! | `(3 << 32) + node`   | MAC jitter and backoff draws of `node` |
//!
//! Vehicles can therefore be advanced serially or in parallel and produce
//! identical trajectories.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::NodeId;

const PLACEMENT: u64 = 1 << 32;
const TRAFFIC: u64 = 2 << 32;
const MAC: u64 = 3 << 32;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn mobility_stream(seed: u64, node: NodeId) -> ChaCha8Rng {
    stream(seed, node as u64)
}

pub fn placement_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, PLACEMENT)
}

pub fn traffic_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, TRAFFIC)
}

pub fn mac_stream(seed: u64, node: NodeId) -> ChaCha8Rng {
    stream(seed, MAC + node as u64)
}
