//! Counter-based random streams.
//!
//! Every sample (a classical point or a quantum quasi-momentum draw) gets its
//! own ChaCha stream selected by its index, so results do not depend on how the
//! work is split between threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
