//! Near-duplicate detection and dataset preparation for source-code corpora.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`] ingests Java project trees and discussion-thread dumps into a
//!   [`corpus::CorpusStore`] with per-document provenance.
//! - [`textprep`] turns documents into shingle sets (for similarity hashing)
//!   and GPT-2 byte-level BPE token streams (for training shards and stats).
//! - [`minhash`] computes fixed-length MinHash signatures.
//! - [`lsh`] bands signatures into bucket indexes, one shard per corpus part,
//!   with an on-disk format that is queried through a memory map.
//! - [`dedup`] runs whole jobs: building part indexes, checking test sets,
//!   merging per-part reports and sweeping thresholds.

pub mod corpus;
pub mod dedup;
pub mod hash;
pub mod lsh;
pub mod minhash;
pub mod synthetic;
pub mod textprep;

pub use corpus::{CorpusStore, DocId, DocKind, Document, Provenance};
pub use minhash::{MinHashSignature, MinHasher};
pub use textprep::{ShingleConfig, ShingleSet};
