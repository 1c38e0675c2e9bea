//! Text preparation: shingle sets for similarity hashing, GPT-2 byte-level
//! BPE for training shards and corpus statistics.

mod bpe;
mod shards;
mod shingle;
mod stats;

pub use bpe::{BpeError, BpeVocab, END_OF_TEXT};
pub use shards::{split_for, write_token_shards, ShardError, ShardFile, ShardManifest, ShardOptions, Split, DEFAULT_SPLIT_SEED, DEFAULT_VAL_FRACTION};
pub use shingle::{exact_jaccard, shingle, ShingleConfig, ShingleSet, ShingleUnit};
pub use stats::{corpus_stats, CorpusStats};
