//! Seed-derived random streams.
//!
//! A [`RandomState`] is a 64-bit key. Child states are derived from a parent
//! key and a label, so every consumer (a tree, a node, a fold) can obtain its
//! own stream without depending on the order in which other consumers drew.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomState {
    key: u64,
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomState {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix(seed ^ 0x005E_ED0F_2A17_C0DE),
        }
    }

    /// Derive an independent stream identified by `label`.
    pub fn child(&self, label: u64) -> Self {
        Self {
            key: mix(self.key.rotate_left(23) ^ mix(label.wrapping_mul(0xD6E8_FEB8_6659_FD93))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }

    /// One uniform draw in `[0, 1)` from this state's stream.
    pub fn uniform(&self) -> f64 {
        use rand::Rng;
        self.rng().random::<f64>()
    }

    pub fn key(&self) -> u64 {
        self.key
    }
}
