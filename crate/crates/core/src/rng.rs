//! Counter-based seeding. Every random draw is keyed by `(seed, stream, k, t)`
//! so results do not depend on the order in which draws are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags keep unrelated consumers of the same seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Disturbance = 1,
    InitialState = 2,
    AssumptionCheck = 3,
}

pub fn keyed_rng(seed: u64, stream: Stream, k: u64, t: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ stream as u64);
    h = splitmix64(h ^ k);
    h = splitmix64(h ^ t.rotate_left(32));
    ChaCha8Rng::seed_from_u64(h)
}
