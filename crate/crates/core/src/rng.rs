//! Seeded random sources.
//!
//! All stochastic operations take an explicit generator. Parallel loops derive
//! one independent stream per work item from a base seed so the outcome does not
//! depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type WorkloadRng = ChaCha8Rng;

/// A generator seeded from a plain integer.
pub fn seeded(seed: u64) -> WorkloadRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the family rooted at `base`. Streams never overlap.
pub fn stream(base: u64, index: u64) -> WorkloadRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng
}

/// Draws a fresh base seed from a caller-supplied generator.
pub fn fork_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}
