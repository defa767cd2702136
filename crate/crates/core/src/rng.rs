use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The seeded random stream used everywhere in training.
pub type SimRng = ChaCha8Rng;

/// Stream used for the agent's own exploration.
pub const AGENT_STREAM: u64 = 0;
/// Stream used for advice gating and trainer phrase sampling.
pub const ADVICE_STREAM: u64 = 1;

pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
