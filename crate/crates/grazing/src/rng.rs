//! Counter-based random streams.
//!
//! Every draw in a simulation is addressed by `(seed, purpose, step, index)`.
//! The address is hashed into a ChaCha stream id so that the values depend
//! only on the address, never on thread scheduling or on how many values
//! other particles consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes keep independent families of draws on disjoint streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Initial = 1,
    Events = 2,
    Companions = 3,
    Gaussian = 4,
    Pairing = 5,
    Decouple = 6,
    Appendix = 7,
    Control = 8,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root of all streams for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    seed: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for the address `(purpose, step, index)`.
    pub fn stream(&self, purpose: Purpose, step: u64, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut s = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        let id = splitmix(splitmix(splitmix(purpose as u64) ^ step) ^ index.rotate_left(32));
        rng.set_stream(id);
        rng
    }

    /// Key for an independent replicate (seed sweeps, control samples).
    pub fn child(&self, tag: u64) -> StreamKey {
        StreamKey::new(splitmix(self.seed ^ splitmix(tag)))
    }
}
