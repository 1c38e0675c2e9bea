use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::check::PartHandle;
use super::{io_err, same_threshold, DedupError};
use crate::corpus::CorpusStore;
use crate::lsh::{BandPlan, HasherMeta, LshIndexShard, PartId, SignatureSidecar};
use crate::minhash::MinHasher;
use crate::textprep::ShingleConfig;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// `<dataset>.t<threshold>.manifest.json`
pub fn manifest_file_name(dataset: &str, threshold: f64) -> String {
    format!("{dataset}.t{threshold:.2}.manifest.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub index: u32,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sig_file: Option<String>,
    /// Ids of the first and last document of the part, in ingestion order.
    pub first_id: Option<u64>,
    pub last_id: Option<u64>,
    pub doc_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HasherParams {
    pub k: usize,
    pub seed: u64,
}

/// Everything needed to query one (dataset, threshold) index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format_version: u32,
    pub dataset: String,
    pub threshold: f64,
    pub plan: BandPlan,
    pub hasher: HasherParams,
    pub shingle: ShingleConfig,
    pub shingle_fingerprint: u64,
    pub part_count: u32,
    pub parts: Vec<PartEntry>,
    /// Corpus store the index was built from, for exact verification and previews.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<String>,
    pub doc_count: u64,
}

impl IndexManifest {
    pub fn hasher_meta(&self) -> HasherMeta {
        HasherMeta { k: self.hasher.k as u32, seed: self.hasher.seed, shingle_fingerprint: self.shingle_fingerprint }
    }

    pub fn hasher(&self) -> Result<MinHasher, DedupError> {
        Ok(MinHasher::new(self.hasher.k, self.hasher.seed)?)
    }

    pub fn read(path: &Path) -> Result<Self, DedupError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let bad = |message: String| DedupError::BadManifest { path: path.to_path_buf(), message };
        let m: Self = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if m.format_version != MANIFEST_FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {}", m.format_version)));
        }
        if m.shingle.fingerprint() != m.shingle_fingerprint {
            return Err(bad("shingle fingerprint does not match shingle config".into()));
        }
        if m.parts.len() != m.part_count as usize || m.parts.iter().enumerate().any(|(i, p)| p.index as usize != i) {
            return Err(bad("part list does not cover 0..part_count".into()));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<(), DedupError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(io_err(path))
    }
}

/// Finds the manifest for `threshold` (and `dataset`, if given) in `dir`.
pub fn find_manifest(dir: &Path, dataset: Option<&str>, threshold: f64) -> Result<PathBuf, DedupError> {
    if let Some(name) = dataset {
        let path = dir.join(manifest_file_name(name, threshold));
        if path.is_file() {
            return Ok(path);
        }
    }
    let mut hits = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(io_err(dir))?;
    for entry in entries {
        let path = entry.map_err(io_err(dir))?.path();
        if !path.to_string_lossy().ends_with(".manifest.json") {
            continue;
        }
        let m = IndexManifest::read(&path)?;
        if same_threshold(m.threshold, threshold) && dataset.is_none_or(|d| d == m.dataset) {
            hits.push((m.dataset, path));
        }
    }
    hits.sort();
    match hits.len() {
        0 => Err(DedupError::MissingManifest { dir: dir.to_path_buf(), threshold }),
        1 => Ok(hits.pop().unwrap().1),
        _ => Err(DedupError::AmbiguousManifest {
            dir: dir.to_path_buf(),
            threshold,
            found: hits.iter().map(|h| h.0.as_str()).collect::<Vec<_>>().join(", "),
        }),
    }
}

/// A manifest plus the directory its files are resolved against.
#[derive(Debug, Clone)]
pub struct IndexSet {
    pub manifest: IndexManifest,
    pub dir: PathBuf,
}

impl IndexSet {
    pub fn open(manifest_path: &Path) -> Result<Self, DedupError> {
        let manifest = IndexManifest::read(manifest_path)?;
        let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { manifest, dir })
    }

    pub fn part_path(&self, index: u32) -> PathBuf {
        self.dir.join(&self.manifest.parts[index as usize].file)
    }

    /// Memory-maps one part and checks it against the manifest. The sidecar
    /// is opened too when `with_sidecar` is set.
    pub fn open_part(&self, index: u32, with_sidecar: bool) -> Result<PartHandle, DedupError> {
        let entry = self
            .manifest
            .parts
            .get(index as usize)
            .ok_or(DedupError::InvalidPartRange { start: index, end: index + 1, count: self.manifest.part_count })?;
        let path = self.dir.join(&entry.file);
        if !path.is_file() {
            return Err(DedupError::MissingPart { index, path });
        }
        let shard = LshIndexShard::load(&path)?;
        let m = &self.manifest;
        let expected_part = PartId { index, count: m.part_count };
        if shard.meta() != &m.hasher_meta() || shard.plan() != &m.plan || shard.part() != expected_part || shard.doc_count() != entry.doc_count {
            return Err(DedupError::ManifestMismatch(format!("{} disagrees with its manifest", path.display())));
        }
        let sidecar = if with_sidecar {
            let file = entry.sig_file.as_ref().ok_or(DedupError::MissingSidecar(index))?;
            let side = SignatureSidecar::open(&self.dir.join(file))?;
            if side.meta() != &m.hasher_meta() {
                return Err(DedupError::ManifestMismatch(format!("sidecar of part {index} uses a different hasher")));
            }
            Some(side)
        } else {
            None
        };
        Ok(PartHandle { index, shard, sidecar })
    }

    pub fn store_path(&self) -> Option<PathBuf> {
        self.manifest.store.as_ref().map(|s| self.dir.join(s))
    }

    pub fn open_store(&self) -> Result<CorpusStore, DedupError> {
        let path = self.store_path().ok_or(DedupError::MissingStore)?;
        Ok(CorpusStore::load(&path)?)
    }
}
