//! Seeded random streams.
//!
//! Every random draw comes from a ChaCha20 generator keyed by `seed_from_u64(master)`
//! with the 64-bit stream id `(domain << 48) | index`. Streams for different
//! `(domain, index)` pairs are independent and do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Name recorded in run metadata.
pub const GENERATOR: &str = "ChaCha20Rng(seed_from_u64, stream=(domain<<48)|index)";

/// Binomial trials of an estimation record; index is the step count.
pub const DOMAIN_TRIALS: u64 = 1;
/// Static disorder; index is the realization.
pub const DOMAIN_STATIC_DISORDER: u64 = 2;
/// Dynamic disorder; index is the realization.
pub const DOMAIN_DYNAMIC_DISORDER: u64 = 3;
/// Repeated experiments; index is the repetition.
pub const DOMAIN_REPETITION: u64 = 4;

const INDEX_MASK: u64 = (1 << 48) - 1;

pub fn stream_rng(master: u64, domain: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream((domain << 48) | (index & INDEX_MASK));
    rng
}

/// A derived master seed, for nesting whole experiments inside an outer one.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(master, domain, index).next_u64()
}
