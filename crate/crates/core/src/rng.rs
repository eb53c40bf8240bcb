//! Counter-based randomness: one ChaCha8 key per run seed, one independent
//! stream per sample index. Draws depend only on `(seed, index)`, never on
//! thread scheduling, so parallel Monte Carlo is bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CounterRng {
    base: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// The generator for one sample index.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }

    /// First uniform `[0, 1)` draw of a stream.
    pub fn unit_f64(&self, index: u64) -> f64 {
        use rand::Rng;
        self.stream(index).gen()
    }
}
