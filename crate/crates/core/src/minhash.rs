//! MinHash signatures over shingle sets.
//!
//! Permutation `i` is the universal hash `h_i(x) = (a_i * x + b_i) mod p`
//! with `p = 2^61 - 1`. Parameters come from a SplitMix64 stream seeded with
//! the hasher seed; for each permutation in order:
//!
//! ```text
//! a_i = 2 * (next() mod ((p - 1) / 2)) + 1     // odd, in [1, p - 2]
//! b_i = next() mod p
//! ```
//!
//! so `(k, seed)` fully determines a hasher on every platform.

use serde::{Deserialize, Serialize};

use crate::hash::SplitMix64;
use crate::textprep::ShingleSet;

pub use crate::textprep::exact_jaccard;

pub const MERSENNE_61: u64 = (1 << 61) - 1;
/// Slot value of an empty set's signature; never produced by a real hash.
pub const SENTINEL: u64 = u64::MAX;
pub const DEFAULT_PERMUTATIONS: usize = 256;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MinHashError {
    #[error("number of permutations must be at least 1")]
    InvalidK,
    #[error("signature lengths differ: {0} vs {1}")]
    KMismatch(usize, usize),
}

/// `x mod (2^61 - 1)` for any 128-bit `x`.
#[inline]
fn mod_mersenne(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHasher {
    seed: u64,
    params: Vec<(u64, u64)>,
}

impl MinHasher {
    pub fn new(k: usize, seed: u64) -> Result<Self, MinHashError> {
        if k == 0 {
            return Err(MinHashError::InvalidK);
        }
        let mut rng = SplitMix64::new(seed);
        let params = (0..k)
            .map(|_| {
                let a = 2 * (rng.next() % ((MERSENNE_61 - 1) / 2)) + 1;
                let b = rng.next() % MERSENNE_61;
                (a, b)
            })
            .collect();
        Ok(Self { seed, params })
    }

    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[(u64, u64)] {
        &self.params
    }

    #[inline]
    fn permute(&self, i: usize, x: u64) -> u64 {
        let (a, b) = self.params[i];
        mod_mersenne(a as u128 * x as u128 + b as u128)
    }

    pub fn signature(&self, set: &ShingleSet) -> MinHashSignature {
        let mut mins = vec![SENTINEL; self.k()];
        for &x in set.hashes() {
            for (i, slot) in mins.iter_mut().enumerate() {
                let h = self.permute(i, x);
                if h < *slot {
                    *slot = h;
                }
            }
        }
        MinHashSignature { mins }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinHashSignature {
    mins: Vec<u64>,
}

impl MinHashSignature {
    pub fn from_mins(mins: Vec<u64>) -> Self {
        Self { mins }
    }

    pub fn sentinel(k: usize) -> Self {
        Self { mins: vec![SENTINEL; k] }
    }

    pub fn k(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[u64] {
        &self.mins
    }

    /// Signature of the empty set.
    pub fn is_sentinel(&self) -> bool {
        self.mins.iter().all(|&m| m == SENTINEL)
    }
}

/// Fraction of slots on which the two signatures agree.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, MinHashError> {
    if a.k() != b.k() {
        return Err(MinHashError::KMismatch(a.k(), b.k()));
    }
    let agree = a.mins.iter().zip(&b.mins).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.k() as f64)
}
