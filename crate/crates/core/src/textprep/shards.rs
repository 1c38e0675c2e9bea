//! Training shards: headerless little-endian `u16` token streams.
//!
//! Every non-excluded document is encoded, followed by the end-of-text id,
//! and appended to `train.bin` or `val.bin`. The split is a pure function of
//! (seed, document id), so it does not depend on document order or batching.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::BpeVocab;
use crate::corpus::{DocId, Document};
use crate::hash::unit_interval;

pub const DEFAULT_VAL_FRACTION: f64 = 0.005;
pub const DEFAULT_SPLIT_SEED: u64 = 1337;
const BATCH: usize = 2048;
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

/// Assigns a document to the validation split with probability `val_fraction`.
pub fn split_for(seed: u64, id: DocId, val_fraction: f64) -> Split {
    if unit_interval(seed, id.0) < val_fraction {
        Split::Val
    } else {
        Split::Train
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ShardError {
    #[error("token id {id} in document {doc} does not fit in 16 bits")]
    TokenIdOverflow { doc: DocId, id: u32 },
    #[error("validation fraction must be in [0, 1), got {0}")]
    InvalidSplit(f64),
    #[error("malformed shard manifest: {0}")]
    Manifest(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ShardError + '_ {
    move |source| ShardError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy)]
pub struct ShardOptions {
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for ShardOptions {
    fn default() -> Self {
        Self { val_fraction: DEFAULT_VAL_FRACTION, seed: DEFAULT_SPLIT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardFile {
    pub name: String,
    pub tokens: u64,
    pub documents: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShardManifest {
    pub seed: u64,
    pub val_fraction: f64,
    pub vocab_fingerprint: u64,
    pub excluded_documents: u64,
    pub train: ShardFile,
    pub val: ShardFile,
}

impl ShardManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "format_version=1").unwrap();
        writeln!(s, "seed={}", self.seed).unwrap();
        writeln!(s, "split={}", self.val_fraction).unwrap();
        writeln!(s, "vocab_fingerprint={:016x}", self.vocab_fingerprint).unwrap();
        writeln!(s, "excluded_documents={}", self.excluded_documents).unwrap();
        for f in [&self.train, &self.val] {
            writeln!(s, "file={}\ttokens={}\tdocuments={}", f.name, f.tokens, f.documents).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ShardError> {
        let bad = |m: &str| ShardError::Manifest(m.to_string());
        let mut m = ShardManifest {
            seed: 0,
            val_fraction: 0.0,
            vocab_fingerprint: 0,
            excluded_documents: 0,
            train: ShardFile { name: String::new(), tokens: 0, documents: 0 },
            val: ShardFile { name: String::new(), tokens: 0, documents: 0 },
        };
        let mut files = Vec::new();
        for line in text.lines() {
            let Some((key, value)) = line.split_once('=') else { continue };
            match key {
                "seed" => m.seed = value.parse().map_err(|_| bad("seed"))?,
                "split" => m.val_fraction = value.parse().map_err(|_| bad("split"))?,
                "vocab_fingerprint" => m.vocab_fingerprint = u64::from_str_radix(value, 16).map_err(|_| bad("vocab_fingerprint"))?,
                "excluded_documents" => m.excluded_documents = value.parse().map_err(|_| bad("excluded_documents"))?,
                "file" => {
                    let mut parts = value.split('\t');
                    let name = parts.next().unwrap_or_default().to_string();
                    let mut field = |prefix: &str| -> Result<u64, ShardError> {
                        parts.next().and_then(|p| p.strip_prefix(prefix)).and_then(|v| v.parse().ok()).ok_or_else(|| bad("file line"))
                    };
                    let tokens = field("tokens=")?;
                    let documents = field("documents=")?;
                    files.push(ShardFile { name, tokens, documents });
                }
                _ => {}
            }
        }
        let [train, val]: [ShardFile; 2] = files.try_into().map_err(|_| bad("expected two file lines"))?;
        m.train = train;
        m.val = val;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self, ShardError> {
        Self::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }
}

struct Sink {
    path: PathBuf,
    out: BufWriter<File>,
    file: ShardFile,
}

impl Sink {
    fn create(dir: &Path, name: &str) -> Result<Self, ShardError> {
        let path = dir.join(name);
        let out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        Ok(Self { path, out, file: ShardFile { name: name.to_string(), tokens: 0, documents: 0 } })
    }

    fn write_doc(&mut self, ids: &[u16]) -> Result<(), ShardError> {
        let mut buf = Vec::with_capacity(ids.len() * 2);
        for id in ids {
            buf.extend_from_slice(&id.to_le_bytes());
        }
        self.out.write_all(&buf).map_err(io_err(&self.path))?;
        self.file.tokens += ids.len() as u64;
        self.file.documents += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<ShardFile, ShardError> {
        self.out.flush().map_err(io_err(&self.path))?;
        Ok(self.file)
    }
}

/// Writes `train.bin`, `val.bin` and `manifest.txt` into `out_dir`.
///
/// Documents whose id is in `exclusion` never reach either file. Encoding
/// runs in parallel batches; output order always equals input order.
pub fn write_token_shards<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    vocab: &BpeVocab,
    exclusion: &BTreeSet<DocId>,
    options: &ShardOptions,
    out_dir: &Path,
) -> Result<ShardManifest, ShardError> {
    if !(0.0..1.0).contains(&options.val_fraction) {
        return Err(ShardError::InvalidSplit(options.val_fraction));
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut train = Sink::create(out_dir, "train.bin")?;
    let mut val = Sink::create(out_dir, "val.bin")?;
    let eot = vocab.end_of_text();
    let mut excluded = 0u64;

    let mut docs = docs.into_iter().peekable();
    while docs.peek().is_some() {
        let mut batch = Vec::with_capacity(BATCH);
        for doc in docs.by_ref() {
            if exclusion.contains(&doc.id) {
                excluded += 1;
                continue;
            }
            batch.push(doc);
            if batch.len() == BATCH {
                break;
            }
        }
        let encoded: Vec<Result<Vec<u16>, ShardError>> = batch
            .par_iter()
            .map(|doc| {
                let mut ids = vocab.encode(&doc.text);
                ids.push(eot);
                ids.into_iter()
                    .map(|id| u16::try_from(id).map_err(|_| ShardError::TokenIdOverflow { doc: doc.id, id }))
                    .collect()
            })
            .collect();
        for (doc, ids) in batch.iter().zip(encoded) {
            let ids = ids?;
            match split_for(options.seed, doc.id, options.val_fraction) {
                Split::Train => train.write_doc(&ids)?,
                Split::Val => val.write_doc(&ids)?,
            }
        }
    }

    let manifest = ShardManifest {
        seed: options.seed,
        val_fraction: options.val_fraction,
        vocab_fingerprint: vocab.fingerprint(),
        excluded_documents: excluded,
        train: train.finish()?,
        val: val.finish()?,
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.render()).map_err(io_err(&path))?;
    Ok(manifest)
}
