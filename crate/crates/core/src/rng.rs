//! Counter-based random streams.
//!
//! Every random draw in the lab is addressed by a [`StreamKey`]: a master
//! seed, an experiment id, an arm tag and a replication index. The first three
//! form a ChaCha8 key; the replication index selects the ChaCha stream. A
//! replication therefore sees the same numbers no matter which worker runs it
//! or in which order, which is what makes parallel and serial runs agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator handed to every sampling routine.
pub type LabRng = ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to turn experiment names into ids.
pub fn tag(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Address of a family of random streams; one stream per replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub experiment: u64,
    pub arm: u64,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: u64, arm: u64) -> Self {
        Self {
            seed,
            experiment,
            arm,
        }
    }

    /// Key for a named experiment.
    pub fn named(seed: u64, experiment: &str) -> Self {
        Self::new(seed, tag(experiment), 0)
    }

    /// Same experiment, different arm (e.g. null vs alternative, or grid point).
    pub fn with_arm(self, arm: u64) -> Self {
        Self { arm, ..self }
    }

    /// Mixes an extra label into the arm.
    pub fn child(self, label: &str) -> Self {
        let mut s = self.arm ^ tag(label);
        Self {
            arm: splitmix64(&mut s),
            ..self
        }
    }

    fn key_bytes(&self) -> [u8; 32] {
        let mut state = self.seed ^ self.experiment.rotate_left(17) ^ self.arm.rotate_left(41);
        // Fold all three words in sequence so that distinct triples give
        // distinct keys even when the xor above collides.
        let mut out = [0u8; 32];
        let words = [
            splitmix64(&mut state) ^ self.seed,
            splitmix64(&mut state) ^ self.experiment,
            splitmix64(&mut state) ^ self.arm,
            splitmix64(&mut state),
        ];
        for (chunk, w) in out.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Generator for one replication.
    pub fn rng(&self, replication: u64) -> LabRng {
        let mut rng = ChaCha8Rng::from_seed(self.key_bytes());
        rng.set_stream(replication);
        rng
    }
}

/// Generator for a single-shot call identified by `(seed, call tag)`.
pub fn call_rng(seed: u64, call: &str) -> LabRng {
    StreamKey::new(seed, tag(call), 0).rng(0)
}
