//! Counter-based randomness streams.
//!
//! A [`Stream`] is a 64-bit key derived from the master seed by hashing a
//! path of labels such as `(cell, replication, bootstrap draw, observation)`.
//! Deriving a child never consumes randomness from the parent, so the draws
//! seen by any unit of work depend only on its position in the experiment and
//! never on scheduling or thread count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator handed to samplers.
pub type StreamRng = Xoshiro256PlusPlus;

/// Labels for the distinct roles a sub-stream can play.
pub mod label {
    pub const DATA: u64 = 0x4441_5441;
    pub const PANEL: u64 = 0x5041_4E45;
    pub const BOOTSTRAP: u64 = 0x424F_4F54;
    pub const CENTERING: u64 = 0x4345_4E54;
    pub const RESAMPLE: u64 = 0x5245_5341;
    pub const FIRST_STAGE: u64 = 0x4649_5253;
    pub const SELECTION: u64 = 0x5345_4C45;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed ^ 0x6A09_E667_F3BC_C908) }
    }

    /// Independent child stream identified by `label`.
    pub fn child(&self, label: u64) -> Self {
        let k = mix64(self.key.wrapping_add(0x9E37_79B9_7F4A_7C15).rotate_left(17) ^ mix64(label));
        Self { key: k }
    }

    /// Child keyed by a sequence of labels, e.g. `(cell, replication)`.
    pub fn path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(*self, |s, &l| s.child(l))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.key)
    }
}

/// FNV-1a hash for turning textual identifiers (cell names) into labels.
pub fn text_label(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
