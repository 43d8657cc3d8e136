//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, path, step, tag)`: the seed keys a
//! ChaCha8 generator, the path selects one of its 2^64 streams and
//! `(step, tag)` selects a block of 2^32 words inside the stream. Paths can
//! therefore be simulated in any order, on any number of threads, with
//! bit-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Diffusion = 0,
    JumpCount = 1,
    JumpSize = 2,
    Variance = 3,
}

const TAGS: u128 = 4;

#[derive(Debug, Clone)]
pub struct StreamKey {
    base: ChaCha8Rng,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator positioned at the start of the `(path, step, tag)` block.
    pub fn stream(&self, path: u64, step: u64, tag: StreamTag) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(path);
        rng.set_word_pos((step as u128 * TAGS + tag as u128) << 32);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn blocks_are_reproducible_and_distinct() {
        let key = StreamKey::new(42);
        let a: u64 = key.stream(3, 7, StreamTag::Diffusion).random();
        let b: u64 = key.stream(3, 7, StreamTag::Diffusion).random();
        assert_eq!(a, b);
        let others = [
            key.stream(3, 7, StreamTag::JumpCount).random::<u64>(),
            key.stream(3, 8, StreamTag::Diffusion).random::<u64>(),
            key.stream(4, 7, StreamTag::Diffusion).random::<u64>(),
            StreamKey::new(43).stream(3, 7, StreamTag::Diffusion).random::<u64>(),
        ];
        assert!(others.iter().all(|&x| x != a));
    }

    #[test]
    fn order_of_access_is_irrelevant() {
        let key = StreamKey::new(1);
        let forward: Vec<u64> = (0..16)
            .map(|p| key.stream(p, 0, StreamTag::JumpSize).random())
            .collect();
        let mut backward: Vec<u64> = (0..16)
            .rev()
            .map(|p| key.stream(p, 0, StreamTag::JumpSize).random())
            .collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }
}
