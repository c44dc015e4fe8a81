use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Independent random streams derived from a single seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    RffWeights = 2,
    RffPhases = 3,
    NetInit = 4,
    NetShuffle = 5,
    Subsample = 6,
}

/// ChaCha20 generator for `(seed, stream)`. The keystream is a pure function of
/// both values, so results never depend on thread count or call order elsewhere.
pub fn stream(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
