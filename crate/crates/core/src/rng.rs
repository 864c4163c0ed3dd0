//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the experiment seed and
//! positioned on its own ChaCha stream id, so `(seed, stream)` pairs never
//! overlap and always replay bit-identically on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomSource = ChaCha8Rng;

pub fn seeded_rng(seed: u64, stream: u64) -> RandomSource {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
