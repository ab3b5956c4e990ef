//! Counter-based random streams.
//!
//! Every random draw in a run comes from a ChaCha stream keyed by the master
//! seed and selected by `(purpose, index)`. Streams are stateless to derive,
//! so results do not depend on scheduling or on where a run was resumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Samples = 1,
    Controller = 2,
    ThetaInit = 3,
    FineTune = 4,
    Locations = 5,
    Grf = 6,
    TnFit = 7,
    Eval = 8,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) ^ (index & 0x00ff_ffff_ffff_ffff));
    rng
}

/// Packs two counters into one stream index (hi gets 24 bits, lo 32 bits).
pub fn index2(hi: u64, lo: u64) -> u64 {
    ((hi & 0xff_ffff) << 32) | (lo & 0xffff_ffff)
}
