//! End-to-end near-duplicate detection: partitioned index builds, test-set
//! checks over part ranges, candidate verification, report files and
//! threshold sweeps.

mod build;
mod check;
mod manifest;
mod report;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, DocId};
use crate::lsh::LshError;
use crate::minhash::MinHashError;

pub use build::{build_corpus_indexes, part_ranges, IndexConfig};
pub use check::{dedup_testset, probe_part, read_test_file, DedupJob, PartHandle, Probe, Scored, TestDoc};
pub use manifest::{find_manifest, manifest_file_name, IndexManifest, IndexSet, PartEntry, MANIFEST_FORMAT_VERSION};
pub use report::{merge_reports, read_report, removal_list, render_id_list, DedupReport, MergedReport, ReportMeta};
pub use sweep::{threshold_sweep, SweepOptions, ThresholdSweep};

/// Default threshold for code corpora.
pub const DEFAULT_CODE_THRESHOLD: f64 = 0.7;
/// Default threshold for discussion-thread corpora.
pub const DEFAULT_THREAD_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    /// Report raw LSH candidates.
    None,
    /// Keep candidates whose signature estimate reaches the threshold.
    #[default]
    Signature,
    /// Keep candidates whose exact shingle Jaccard reaches the threshold.
    Exact,
}

impl VerifyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VerifyMode::None => "none",
            VerifyMode::Signature => "signature",
            VerifyMode::Exact => "exact",
        }
    }
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerifyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(VerifyMode::None),
            "signature" => Ok(VerifyMode::Signature),
            "exact" => Ok(VerifyMode::Exact),
            other => Err(format!("unknown verification mode {other:?} (expected none, signature or exact)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DedupError {
    #[error(transparent)]
    Lsh(#[from] LshError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    MinHash(#[from] MinHashError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no index manifest for threshold {threshold} in {dir}")]
    MissingManifest { dir: PathBuf, threshold: f64 },
    #[error("several datasets indexed at threshold {threshold} in {dir} ({found}); pick one")]
    AmbiguousManifest { dir: PathBuf, threshold: f64, found: String },
    #[error("malformed index manifest {path}: {message}")]
    BadManifest { path: PathBuf, message: String },
    #[error("index does not match manifest: {0}")]
    ManifestMismatch(String),
    #[error("index part {index} missing at {path}")]
    MissingPart { index: u32, path: PathBuf },
    #[error("signature verification needs sidecar files, but part {0} has none")]
    MissingSidecar(u32),
    #[error("exact verification needs the corpus store, but none is recorded or given")]
    MissingStore,
    #[error("candidate {0} is not in the corpus store")]
    UnknownCandidate(DocId),
    #[error("part range [{start}, {end}) invalid for {count} parts")]
    InvalidPartRange { start: u32, end: u32, count: u32 },
    #[error("invalid threshold {0}: must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
    #[error("thresholds must be strictly increasing")]
    UnsortedThresholds,
    #[error("test document id {0} appears twice")]
    DuplicateTestId(DocId),
    #[error("reports come from different jobs: {0}")]
    JobMismatch(String),
    #[error("malformed report line {line}: {message}")]
    ReportFormat { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> DedupError + '_ {
    move |source| DedupError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn check_threshold(t: f64) -> Result<f64, DedupError> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(DedupError::InvalidThreshold(t))
    }
}

/// Thresholds are compared at a precision well below anything a user types.
pub fn same_threshold(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}
