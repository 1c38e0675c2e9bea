//! Deterministic hashing primitives shared by the shingler, the MinHash
//! parameter generator and the on-disk formats.

use xxhash_rust::xxh3::{xxh3_64, xxh3_64_with_seed, Xxh3};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 generator.
///
/// Each call advances the state by the golden-ratio increment and returns
/// the standard SplitMix64 finaliser of the new state. The sequence is fully
/// determined by the initial state on every platform.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }
}

/// SplitMix64 output finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps `(seed, key)` to a uniform value in `[0, 1)` with 53 bits of precision.
pub fn unit_interval(seed: u64, key: u64) -> f64 {
    let z = mix64(seed ^ mix64(key.wrapping_add(GOLDEN_GAMMA)));
    (z >> 11) as f64 / (1u64 << 53) as f64
}

pub fn bytes_hash(bytes: &[u8], seed: u64) -> u64 {
    if seed == 0 {
        xxh3_64(bytes)
    } else {
        xxh3_64_with_seed(bytes, seed)
    }
}

/// Incremental 64-bit digest used for file checksums and fingerprints.
#[derive(Default, Clone)]
pub struct Digest64(Xxh3);

impl Digest64 {
    pub fn new() -> Self {
        Self(Xxh3::new())
    }

    pub fn update(&mut self, bytes: &[u8]) -> &mut Self {
        self.0.update(bytes);
        self
    }

    pub fn update_u64(&mut self, v: u64) -> &mut Self {
        self.0.update(&v.to_le_bytes());
        self
    }

    pub fn finish(&self) -> u64 {
        self.0.digest()
    }
}
