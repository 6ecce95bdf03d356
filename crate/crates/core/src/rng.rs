//! Reproducible random streams.
//!
//! A run is driven by a single `u64` seed. Each consumer (design points,
//! noise, prior draws, accept decisions) gets its own ChaCha stream keyed by
//! that seed, so changing how many numbers one consumer draws never shifts
//! another consumer's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Design,
    Noise,
    Prior,
    Proposal,
}

impl Substream {
    fn id(self) -> u64 {
        match self {
            Substream::Design => 1,
            Substream::Noise => 2,
            Substream::Prior => 3,
            Substream::Proposal => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, which: Substream) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(which.id());
        rng
    }

    /// Independent child seed, e.g. one per cell of a parameter sweep.
    pub fn child(&self, tag: u64) -> Streams {
        // splitmix64 finalizer over (seed, tag)
        let mut z = self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Streams::new(z ^ (z >> 31))
    }
}
