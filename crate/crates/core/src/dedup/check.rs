use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::{find_manifest, IndexSet};
use super::report::{DedupReport, ReportMeta};
use super::{check_threshold, io_err, same_threshold, DedupError, VerifyMode};
use crate::corpus::{read_record_file, CorpusStore, DocId};
use crate::lsh::{LshIndexShard, SignatureSidecar};
use crate::minhash::{estimate_jaccard, MinHashSignature, MinHasher};
use crate::textprep::{exact_jaccard, shingle, ShingleConfig, ShingleSet};

/// A document to check against an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestDoc {
    pub id: DocId,
    pub text: String,
}

/// Reads a test set. Record files use the corpus store framing. With `raw`,
/// `path` is a directory of text files (or a single file), taken in file-name
/// order with ids assigned by position from 0.
pub fn read_test_file(path: &Path, raw: bool) -> Result<Vec<TestDoc>, DedupError> {
    if !raw {
        let docs = read_record_file(path)?;
        let mut seen = HashSet::new();
        if let Some(d) = docs.iter().find(|d| !seen.insert(d.id)) {
            return Err(DedupError::DuplicateTestId(d.id));
        }
        return Ok(docs.into_iter().map(|d| TestDoc { id: d.id, text: d.text }).collect());
    }
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(path).map_err(io_err(path))? {
            let p = entry.map_err(io_err(path))?.path();
            if p.is_file() {
                files.push(p);
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    files
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let bytes = std::fs::read(p).map_err(io_err(p))?;
            let text = String::from_utf8_lossy(&bytes).into_owned();
            Ok(TestDoc { id: DocId(i as u64), text })
        })
        .collect()
}

/// A test document reduced to what queries need.
#[derive(Debug, Clone)]
pub struct Probe {
    pub id: DocId,
    pub shingles: ShingleSet,
    pub signature: MinHashSignature,
}

impl Probe {
    pub fn new(id: DocId, text: &str, hasher: &MinHasher, config: &ShingleConfig) -> Self {
        let shingles = shingle(text, config);
        let signature = hasher.signature(&shingles);
        Self { id, shingles, signature }
    }
}

/// One loaded index part.
pub struct PartHandle {
    pub index: u32,
    pub shard: LshIndexShard,
    pub sidecar: Option<SignatureSidecar>,
}

/// A verified match. `similarity` is the exact Jaccard under exact
/// verification and the signature estimate otherwise (absent in raw mode
/// when the part has no sidecar).
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub id: DocId,
    pub part: u32,
    pub similarity: Option<f64>,
}

/// Queries one part and applies the verification mode.
pub fn probe_part(
    part: &PartHandle,
    probe: &Probe,
    threshold: f64,
    verify: VerifyMode,
    store: Option<&CorpusStore>,
    config: &ShingleConfig,
) -> Result<Vec<Scored>, DedupError> {
    let candidates = part.shard.query(&probe.signature)?;
    let mut out = Vec::with_capacity(candidates.len());
    for id in candidates {
        let estimate = match &part.sidecar {
            Some(side) => match side.get(id) {
                Some(sig) => Some(estimate_jaccard(&probe.signature, &sig)?),
                None => return Err(DedupError::ManifestMismatch(format!("id {id} missing from sidecar of part {}", part.index))),
            },
            None => None,
        };
        let similarity = match verify {
            VerifyMode::None => estimate,
            VerifyMode::Signature => {
                let e = estimate.ok_or(DedupError::MissingSidecar(part.index))?;
                if e < threshold {
                    continue;
                }
                Some(e)
            }
            VerifyMode::Exact => {
                let store = store.ok_or(DedupError::MissingStore)?;
                let doc = store.get(id).ok_or(DedupError::UnknownCandidate(id))?;
                let j = exact_jaccard(&probe.shingles, &shingle(&doc.text, config));
                if j < threshold {
                    continue;
                }
                Some(j)
            }
        };
        out.push(Scored { id, part: part.index, similarity });
    }
    Ok(out)
}

/// One check run over a part range of an index set.
#[derive(Debug, Clone)]
pub struct DedupJob {
    pub index_dir: PathBuf,
    /// Needed only when the directory holds several datasets at this threshold.
    pub dataset: Option<String>,
    pub threshold: f64,
    pub part_start: u32,
    /// Exclusive; `None` means through the last part.
    pub part_end: Option<u32>,
    pub verify: VerifyMode,
    /// Overrides the corpus store recorded in the manifest.
    pub store: Option<PathBuf>,
}

impl DedupJob {
    pub fn new(index_dir: impl Into<PathBuf>, threshold: f64) -> Self {
        Self {
            index_dir: index_dir.into(),
            dataset: None,
            threshold,
            part_start: 0,
            part_end: None,
            verify: VerifyMode::default(),
            store: None,
        }
    }
}

/// Checks `tests` against parts `[part_start, part_end)` of the index. Parts
/// are processed in parallel, each memory-mapped only while it is queried.
pub fn dedup_testset(job: &DedupJob, tests: &[TestDoc]) -> Result<DedupReport, DedupError> {
    check_threshold(job.threshold)?;
    let set = IndexSet::open(&find_manifest(&job.index_dir, job.dataset.as_deref(), job.threshold)?)?;
    let m = &set.manifest;
    if !same_threshold(m.threshold, job.threshold) {
        return Err(DedupError::ManifestMismatch(format!("index built at {}, job asks for {}", m.threshold, job.threshold)));
    }
    let end = job.part_end.unwrap_or(m.part_count);
    if job.part_start >= end || end > m.part_count {
        return Err(DedupError::InvalidPartRange { start: job.part_start, end, count: m.part_count });
    }
    let mut seen = HashSet::new();
    if let Some(t) = tests.iter().find(|t| !seen.insert(t.id)) {
        return Err(DedupError::DuplicateTestId(t.id));
    }

    let store = match job.verify {
        VerifyMode::Exact => Some(match &job.store {
            Some(p) => CorpusStore::load(p)?,
            None => set.open_store()?,
        }),
        _ => None,
    };
    let hasher = m.hasher()?;
    let probes: Vec<Probe> = tests.par_iter().map(|t| Probe::new(t.id, &t.text, &hasher, &m.shingle)).collect();
    let with_sidecar = job.verify == VerifyMode::Signature;

    type PartRows = Vec<(DocId, BTreeSet<DocId>)>;
    let per_part: Vec<(u32, PartRows)> = (job.part_start..end)
        .into_par_iter()
        .map(|index| {
            let part = set.open_part(index, with_sidecar)?;
            let rows = probes
                .iter()
                .map(|p| {
                    let hits = probe_part(&part, p, m.threshold, job.verify, store.as_ref(), &m.shingle)?;
                    Ok((p.id, hits.into_iter().map(|s| s.id).collect()))
                })
                .collect::<Result<_, DedupError>>()?;
            Ok((index, rows))
        })
        .collect::<Result<_, DedupError>>()?;

    let mut entries: BTreeMap<DocId, BTreeMap<u32, BTreeSet<DocId>>> = tests.iter().map(|t| (t.id, BTreeMap::new())).collect();
    for (index, rows) in per_part {
        for (id, hits) in rows {
            entries.get_mut(&id).unwrap().insert(index, hits);
        }
    }
    Ok(DedupReport { meta: ReportMeta::from_manifest(m, job.verify), parts: (job.part_start, end), entries })
}
