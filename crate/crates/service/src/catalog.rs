use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use corpusdedup::dedup::{probe_part, same_threshold, DedupError, IndexSet, PartHandle, Probe, Scored, VerifyMode};
use corpusdedup::minhash::MinHasher;
use corpusdedup::{CorpusStore, DocId};

use crate::config::{DatasetConfig, ServiceConfig};
use crate::ServiceError;

/// Every part of one (dataset, threshold) index, memory-mapped.
pub struct LoadedIndex {
    pub set: IndexSet,
    pub parts: Vec<PartHandle>,
    pub hasher: MinHasher,
}

impl LoadedIndex {
    fn open(set: IndexSet, progress: &AtomicUsize) -> Result<Self, DedupError> {
        let hasher = set.manifest.hasher()?;
        let mut parts = Vec::with_capacity(set.manifest.part_count as usize);
        for (i, entry) in set.manifest.parts.iter().enumerate() {
            parts.push(set.open_part(i as u32, entry.sig_file.is_some())?);
            progress.fetch_add(1, Ordering::Relaxed);
        }
        Ok(Self { set, parts, hasher })
    }

    pub fn threshold(&self) -> f64 {
        self.set.manifest.threshold
    }

    /// Matches over all parts, ordered by descending similarity then ascending id.
    pub fn check(&self, text: &str, verify: VerifyMode, store: Option<&CorpusStore>) -> Result<Vec<Scored>, DedupError> {
        let m = &self.set.manifest;
        let probe = Probe::new(DocId(0), text, &self.hasher, &m.shingle);
        let mut out = Vec::new();
        for part in &self.parts {
            out.extend(probe_part(part, &probe, m.threshold, verify, store, &m.shingle)?);
        }
        out.sort_by(|a, b| {
            let (x, y) = (a.similarity.unwrap_or(-1.0), b.similarity.unwrap_or(-1.0));
            y.total_cmp(&x).then(a.id.cmp(&b.id))
        });
        Ok(out)
    }
}

pub struct DatasetEntry {
    pub name: String,
    /// Ascending by threshold.
    pub indexes: Vec<LoadedIndex>,
    pub store: Option<Arc<CorpusStore>>,
}

impl DatasetEntry {
    pub fn thresholds(&self) -> Vec<f64> {
        self.indexes.iter().map(LoadedIndex::threshold).collect()
    }

    pub fn index(&self, threshold: f64) -> Option<&LoadedIndex> {
        self.indexes.iter().find(|i| same_threshold(i.threshold(), threshold) || (i.threshold() - threshold).abs() < 5e-7)
    }

    pub fn doc_count(&self) -> u64 {
        self.indexes.first().map_or(0, |i| i.set.manifest.doc_count)
    }

    pub fn part_count(&self) -> u32 {
        self.indexes.first().map_or(0, |i| i.set.manifest.part_count)
    }

    fn shard_count(&self) -> usize {
        self.indexes.iter().map(|i| i.parts.len()).sum()
    }
}

/// All datasets the service answers for. Immutable once loaded; a reload
/// builds a new catalog and swaps it in whole.
#[derive(Default)]
pub struct Catalog {
    pub datasets: BTreeMap<String, DatasetEntry>,
}

impl Catalog {
    /// Loads every configured dataset, bumping `progress` once per opened shard.
    pub fn load(config: &ServiceConfig, progress: &AtomicUsize) -> Result<Self, ServiceError> {
        let mut datasets = BTreeMap::new();
        for (name, ds) in &config.datasets {
            let load_err = |source| ServiceError::Load { dataset: name.clone(), source };
            let mut indexes = Vec::new();
            for path in manifest_paths(name, ds)? {
                let set = IndexSet::open(&path).map_err(load_err)?;
                indexes.push(LoadedIndex::open(set, progress).map_err(load_err)?);
            }
            if indexes.is_empty() {
                return Err(ServiceError::Config(format!("dataset {name} has no loadable index manifest")));
            }
            indexes.sort_by(|a, b| a.threshold().total_cmp(&b.threshold()));
            if indexes.windows(2).any(|w| same_threshold(w[0].threshold(), w[1].threshold())) {
                return Err(ServiceError::Config(format!("dataset {name} lists the same threshold twice")));
            }
            let store = match &ds.store {
                Some(path) => Some(CorpusStore::load(path).map_err(|e| load_err(e.into()))?),
                None => match indexes[0].set.store_path() {
                    Some(path) if path.join("docs.txt").is_file() => Some(CorpusStore::load(&path).map_err(|e| load_err(e.into()))?),
                    _ => None,
                },
            };
            datasets.insert(name.clone(), DatasetEntry { name: name.clone(), indexes, store: store.map(Arc::new) });
        }
        Ok(Self { datasets })
    }

    pub fn shard_count(&self) -> usize {
        self.datasets.values().map(DatasetEntry::shard_count).sum()
    }
}

fn manifest_paths(name: &str, ds: &DatasetConfig) -> Result<Vec<PathBuf>, ServiceError> {
    let mut paths = ds.manifests.clone();
    if let Some(dir) = &ds.index_dir {
        let entries = std::fs::read_dir(dir).map_err(|source| ServiceError::Io { path: dir.clone(), source })?;
        let mut found = Vec::new();
        for entry in entries {
            let path = entry.map_err(|source| ServiceError::Io { path: dir.clone(), source })?.path();
            if path.to_string_lossy().ends_with(".manifest.json") {
                found.push(path);
            }
        }
        found.sort();
        // Prefer manifests built under the dataset's own name when the
        // directory holds several datasets.
        let own: Vec<PathBuf> = found.iter().filter(|p| file_dataset(p).as_deref() == Some(name)).cloned().collect();
        paths.extend(if own.is_empty() { found } else { own });
    }
    Ok(paths)
}

fn file_dataset(path: &std::path::Path) -> Option<String> {
    let file = path.file_name()?.to_str()?;
    let stem = file.strip_suffix(".manifest.json")?;
    Some(stem.rsplit_once(".t")?.0.to_string())
}
