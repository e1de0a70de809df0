//! Seeded random streams.
//!
//! Every Monte-Carlo trial draws from its own ChaCha stream keyed by the
//! master seed and addressed by the trial index. A trial's randomness is then
//! a pure function of `(seed, index)`, so parallel runs reproduce sequential
//! ones bit for bit regardless of worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used by all samplers in the crate.
pub type SimRng = ChaCha8Rng;

/// Stream for a single seed, stream 0.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under master `seed`.
pub fn trial_stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
