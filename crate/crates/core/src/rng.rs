//! Counter-based random streams keyed by (master seed, stream id).
//!
//! Every consumer of randomness gets its own stream so that adding or
//! removing one consumer never shifts the draws seen by another. Exact
//! replay of a run needs only the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream ids, one per randomness consumer. Values are part of the replay
/// contract: changing them changes every seeded run.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const PERMUTATION: u64 = 3;
    pub const NOISE_PAD: u64 = 4;
    pub const TASK_GEN: u64 = 5;
    pub const DECAY_TRIALS: u64 = 6;
    pub const PERTURB: u64 = 7;
    pub const HUTCHINSON: u64 = 8;
    pub const POWER_ITER: u64 = 9;
    pub const SWEEP: u64 = 10;
}

/// RNG for one named stream of a master seed.
pub fn stream_rng(master_seed: u64, stream_id: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Sub-stream for per-item work (trial k of a probe, sample k of a batch):
/// mixes the item index into the stream id so items are independent and
/// order-free.
pub fn item_rng(master_seed: u64, stream_id: u64, item: u64) -> ChaCha12Rng {
    // Stream space is 64-bit; reserve low bits for the consumer id.
    stream_rng(master_seed, stream_id ^ (item.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a1 = stream_rng(7, stream::INIT);
        let mut a2 = stream_rng(7, stream::INIT);
        let mut b = stream_rng(7, stream::SHUFFLE);
        let xa1: f64 = a1.gen();
        let xa2: f64 = a2.gen();
        let xb: f64 = b.gen();
        assert_eq!(xa1.to_bits(), xa2.to_bits());
        assert_ne!(xa1.to_bits(), xb.to_bits());
    }

    #[test]
    fn item_streams_differ() {
        let mut r0 = item_rng(7, stream::DECAY_TRIALS, 0);
        let mut r1 = item_rng(7, stream::DECAY_TRIALS, 1);
        let x0: u64 = r0.gen();
        let x1: u64 = r1.gen();
        assert_ne!(x0, x1);
    }
}
