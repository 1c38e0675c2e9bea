use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use super::manifest::{manifest_file_name, HasherParams, IndexManifest, PartEntry, MANIFEST_FORMAT_VERSION};
use super::{check_threshold, io_err, DedupError};
use crate::corpus::{CorpusStore, DocId, Document};
use crate::lsh::{build_shard, optimal_bands, shard_file_name, sidecar_file_name, write_sidecar, HasherMeta, PartId};
use crate::minhash::{MinHashSignature, MinHasher, DEFAULT_PERMUTATIONS, DEFAULT_SEED};
use crate::textprep::{shingle, ShingleConfig};

#[derive(Debug, Clone)]
pub struct IndexConfig {
    pub dataset: String,
    pub threshold: f64,
    pub parts: u32,
    pub k: usize,
    pub seed: u64,
    pub shingle: ShingleConfig,
    /// Also write per-part signature sidecars (needed for signature verification).
    pub sidecars: bool,
}

impl IndexConfig {
    pub fn new(dataset: impl Into<String>, threshold: f64, parts: u32) -> Self {
        Self {
            dataset: dataset.into(),
            threshold,
            parts,
            k: DEFAULT_PERMUTATIONS,
            seed: DEFAULT_SEED,
            shingle: ShingleConfig::default(),
            sidecars: true,
        }
    }
}

/// Ordinal ranges of the parts: part `i` covers `[i*c, (i+1)*c)` clipped to
/// `n`, with `c = ceil(n / parts)`. Trailing parts may be empty.
pub fn part_ranges(n: usize, parts: u32) -> Vec<Range<usize>> {
    let parts = parts.max(1) as usize;
    let size = n.div_ceil(parts);
    (0..parts).map(|i| (i * size).min(n)..((i + 1) * size).min(n)).collect()
}

/// Builds `config.parts` shard files (and sidecars) over `store` in `out_dir`
/// and writes the index manifest. `store_path`, when given, is recorded so
/// exact verification and previews can find document text later.
pub fn build_corpus_indexes(
    store: &CorpusStore,
    config: &IndexConfig,
    out_dir: &Path,
    store_path: Option<&Path>,
) -> Result<IndexManifest, DedupError> {
    check_threshold(config.threshold)?;
    if config.parts == 0 {
        return Err(DedupError::InvalidConfig("part count must be at least 1".into()));
    }
    if config.dataset.is_empty() || config.dataset.contains(['/', '\\']) {
        return Err(DedupError::InvalidConfig(format!("bad dataset name {:?}", config.dataset)));
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let hasher = MinHasher::new(config.k, config.seed)?;
    let plan = optimal_bands(config.threshold, config.k)?;
    let meta = HasherMeta::new(&hasher, &config.shingle);
    let docs = store.documents();

    let parts: Vec<PartEntry> = part_ranges(docs.len(), config.parts)
        .into_par_iter()
        .enumerate()
        .map(|(index, range)| {
            let index = index as u32;
            let part = PartId::new(index, config.parts)?;
            let slice = &docs[range];
            let sigs = signatures(slice, &hasher, &config.shingle);
            let shard = build_shard(sigs.iter().map(|(id, s)| (*id, s)), plan, meta, part)?;
            let file = shard_file_name(&config.dataset, config.threshold, part);
            shard.save(&out_dir.join(&file))?;
            let sig_file = if config.sidecars {
                let name = sidecar_file_name(&config.dataset, config.threshold, part);
                write_sidecar(&out_dir.join(&name), &meta, &sigs)?;
                Some(name)
            } else {
                None
            };
            Ok(PartEntry {
                index,
                file,
                sig_file,
                first_id: slice.first().map(|d| d.id.0),
                last_id: slice.last().map(|d| d.id.0),
                doc_count: slice.len() as u64,
            })
        })
        .collect::<Result<_, DedupError>>()?;

    let store = match store_path {
        Some(p) => Some(std::path::absolute(p).map_err(io_err(p))?.to_string_lossy().into_owned()),
        None => None,
    };
    let manifest = IndexManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        dataset: config.dataset.clone(),
        threshold: config.threshold,
        plan,
        hasher: HasherParams { k: config.k, seed: config.seed },
        shingle: config.shingle,
        shingle_fingerprint: config.shingle.fingerprint(),
        part_count: config.parts,
        parts,
        store,
        doc_count: docs.len() as u64,
    };
    manifest.write(&out_dir.join(manifest_file_name(&config.dataset, config.threshold)))?;
    Ok(manifest)
}

pub(crate) fn signatures(docs: &[Document], hasher: &MinHasher, config: &ShingleConfig) -> Vec<(DocId, MinHashSignature)> {
    docs.par_iter().map(|d| (d.id, hasher.signature(&shingle(&d.text, config)))).collect()
}
