//! Banded LSH indexes over MinHash signatures.
//!
//! A signature of `k` slots is cut into `bands` runs of `rows` slots. Each run
//! is digested (together with its band index) into a 64-bit bucket key, and a
//! document becomes a candidate for a query when they share any bucket. The
//! probability of that for two sets of Jaccard similarity `s` is
//! `1 - (1 - s^rows)^bands`.

mod format;
mod plan;
mod shard;
mod sidecar;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::DocId;
use crate::minhash::MinHasher;
use crate::textprep::ShingleConfig;

pub use format::{SHARD_FORMAT_VERSION, SHARD_MAGIC};
pub use plan::{candidate_probability, optimal_bands, plan_error, BandPlan, INTEGRATION_STEP};
pub use shard::{band_key, build_shard, CandidateSet, LshIndexShard, ShardBuilder};
pub use sidecar::{write_sidecar, SignatureSidecar};

#[derive(Debug, thiserror::Error)]
pub enum LshError {
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("need at least 2 permutations to band, got {0}")]
    InvalidK(usize),
    #[error("band plan {bands}x{rows} needs more than {k} signature slots")]
    PlanExceedsK { bands: usize, rows: usize, k: usize },
    #[error("part index {index} out of range for {count} parts")]
    InvalidPart { index: u32, count: u32 },
    #[error("document id {0} inserted twice")]
    DuplicateId(DocId),
    #[error("hasher mismatch: index built with {expected:?}, query uses {found:?}")]
    HasherMismatch { expected: HasherMeta, found: HasherMeta },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("checksum mismatch: file is truncated or corrupt")]
    ChecksumMismatch,
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Identity of the hashing pipeline an index was built with. Queries must
/// use exactly the same pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HasherMeta {
    pub k: u32,
    pub seed: u64,
    pub shingle_fingerprint: u64,
}

impl HasherMeta {
    pub fn new(hasher: &MinHasher, shingle: &ShingleConfig) -> Self {
        Self { k: hasher.k() as u32, seed: hasher.seed(), shingle_fingerprint: shingle.fingerprint() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartId {
    pub index: u32,
    pub count: u32,
}

impl PartId {
    pub fn new(index: u32, count: u32) -> Result<Self, LshError> {
        if index >= count {
            return Err(LshError::InvalidPart { index, count });
        }
        Ok(Self { index, count })
    }

    pub fn whole() -> Self {
        Self { index: 0, count: 1 }
    }
}

/// `<dataset>.t<threshold>.part<i>of<P>.lsh`
pub fn shard_file_name(dataset: &str, threshold: f64, part: PartId) -> String {
    format!("{dataset}.t{threshold:.2}.part{}of{}.lsh", part.index, part.count)
}

/// Signature sidecar stored next to a shard.
pub fn sidecar_file_name(dataset: &str, threshold: f64, part: PartId) -> String {
    format!("{dataset}.t{threshold:.2}.part{}of{}.sig", part.index, part.count)
}
