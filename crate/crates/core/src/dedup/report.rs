//! Report files.
//!
//! Fields on entry lines are separated by a single tab.
//!
//! ```text
//! # corpusdedup-report v1 dataset=jm52m threshold=0.7 k=256 seed=1 shingle=… verify=signature parts=0..2
//! # part 0
//! 17    {3, 905}
//! 18    {}
//! # part 1
//! 17    {1204}
//! 18    {}
//! ```
//!
//! A per-part report has one line per (test id, part). The merged form drops
//! the `parts=` field and the part markers and has one line per test id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::manifest::IndexManifest;
use super::{io_err, same_threshold, DedupError, VerifyMode};
use crate::corpus::DocId;

const MAGIC: &str = "# corpusdedup-report v1";

/// Identity of the job a report came from; reports merge only when equal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub dataset: String,
    pub threshold: f64,
    pub k: usize,
    pub seed: u64,
    pub shingle_fingerprint: u64,
    pub verify: VerifyMode,
}

impl ReportMeta {
    pub fn from_manifest(m: &IndexManifest, verify: VerifyMode) -> Self {
        Self {
            dataset: m.dataset.clone(),
            threshold: m.threshold,
            k: m.hasher.k,
            seed: m.hasher.seed,
            shingle_fingerprint: m.shingle_fingerprint,
            verify,
        }
    }

    fn header(&self) -> String {
        format!(
            "{MAGIC} dataset={} threshold={} k={} seed={} shingle={:016x} verify={}",
            self.dataset, self.threshold, self.k, self.seed, self.shingle_fingerprint, self.verify
        )
    }

    fn mismatch(&self, other: &Self) -> Option<String> {
        if self.dataset != other.dataset {
            return Some(format!("dataset {} vs {}", self.dataset, other.dataset));
        }
        if !same_threshold(self.threshold, other.threshold) {
            return Some(format!("threshold {} vs {}", self.threshold, other.threshold));
        }
        if (self.k, self.seed, self.shingle_fingerprint) != (other.k, other.seed, other.shingle_fingerprint) {
            return Some("hasher configuration differs".into());
        }
        if self.verify != other.verify {
            return Some(format!("verification {} vs {}", self.verify, other.verify));
        }
        None
    }
}

fn format_set(ids: &BTreeSet<DocId>) -> String {
    let inner: Vec<String> = ids.iter().map(|id| id.0.to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

fn parse_set(s: &str, line: usize) -> Result<BTreeSet<DocId>, DedupError> {
    let bad = |message: String| DedupError::ReportFormat { line, message };
    let inner = s.strip_prefix('{').and_then(|s| s.strip_suffix('}')).ok_or_else(|| bad(format!("expected {{…}}, got {s:?}")))?;
    if inner.trim().is_empty() {
        return Ok(BTreeSet::new());
    }
    inner.split(',').map(|x| x.trim().parse::<u64>().map(DocId).map_err(|e| bad(format!("bad id {x:?}: {e}")))).collect()
}

fn parse_header(line: &str) -> Result<(ReportMeta, Option<(u32, u32)>), DedupError> {
    let bad = |message: &str| DedupError::ReportFormat { line: 1, message: message.to_string() };
    let rest = line.strip_prefix(MAGIC).ok_or_else(|| bad("missing report header"))?;
    let mut fields = BTreeMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad("header field without '='"))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("header lacks {k}")));
    let meta = ReportMeta {
        dataset: get("dataset")?.to_string(),
        threshold: get("threshold")?.parse().map_err(|_| bad("bad threshold"))?,
        k: get("k")?.parse().map_err(|_| bad("bad k"))?,
        seed: get("seed")?.parse().map_err(|_| bad("bad seed"))?,
        shingle_fingerprint: u64::from_str_radix(get("shingle")?, 16).map_err(|_| bad("bad shingle"))?,
        verify: get("verify")?.parse().map_err(|e: String| bad(&e))?,
    };
    let parts = match fields.get("parts") {
        Some(p) => {
            let (a, b) = p.split_once("..").ok_or_else(|| bad("bad parts"))?;
            Some((a.parse().map_err(|_| bad("bad parts"))?, b.parse().map_err(|_| bad("bad parts"))?))
        }
        None => None,
    };
    Ok((meta, parts))
}

/// Rows of a report body: `(part marker in effect, test id, matches)`.
type Rows = Vec<(Option<u32>, DocId, BTreeSet<DocId>)>;

fn parse_body<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Rows, DedupError> {
    let mut part = None;
    let mut rows = Vec::new();
    for (n, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(p) = rest.trim().strip_prefix("part ") {
                part = Some(p.trim().parse().map_err(|_| DedupError::ReportFormat { line: n, message: "bad part marker".into() })?);
            }
            continue;
        }
        let (id, set) = line.split_once('\t').ok_or_else(|| DedupError::ReportFormat { line: n, message: "expected id<TAB>{…}".into() })?;
        let id = id.trim().parse().map(DocId).map_err(|e| DedupError::ReportFormat { line: n, message: format!("bad test id: {e}") })?;
        rows.push((part, id, parse_set(set.trim(), n)?));
    }
    Ok(rows)
}

/// Per-part results of one check run.
#[derive(Debug, Clone, PartialEq)]
pub struct DedupReport {
    pub meta: ReportMeta,
    /// Part range `[start, end)` the run covered.
    pub parts: (u32, u32),
    /// Test id → part → matched corpus ids.
    pub entries: BTreeMap<DocId, BTreeMap<u32, BTreeSet<DocId>>>,
}

impl DedupReport {
    pub fn render(&self) -> String {
        let mut s = format!("{} parts={}..{}\n", self.meta.header(), self.parts.0, self.parts.1);
        for part in self.parts.0..self.parts.1 {
            writeln!(s, "# part {part}").unwrap();
            for (id, by_part) in &self.entries {
                let empty = BTreeSet::new();
                writeln!(s, "{}\t{}", id.0, format_set(by_part.get(&part).unwrap_or(&empty))).unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, DedupError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (meta, parts) = parse_header(lines.next().map(|l| l.1).unwrap_or(""))?;
        let parts = parts.ok_or(DedupError::ReportFormat { line: 1, message: "not a per-part report".into() })?;
        let mut entries: BTreeMap<DocId, BTreeMap<u32, BTreeSet<DocId>>> = BTreeMap::new();
        for (part, id, set) in parse_body(lines)? {
            let part = part.ok_or(DedupError::ReportFormat { line: 0, message: "entry before any part marker".into() })?;
            entries.entry(id).or_default().entry(part).or_default().extend(set);
        }
        Ok(Self { meta, parts, entries })
    }

    pub fn write(&self, path: &Path) -> Result<(), DedupError> {
        std::fs::write(path, self.render()).map_err(io_err(path))
    }

    /// Union across parts.
    pub fn merged(&self) -> MergedReport {
        let entries = self.entries.iter().map(|(id, by_part)| (*id, by_part.values().flatten().copied().collect())).collect();
        MergedReport { meta: self.meta.clone(), entries }
    }
}

/// Canonical form: one line per test id with the union of its matches.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedReport {
    pub meta: ReportMeta,
    pub entries: BTreeMap<DocId, BTreeSet<DocId>>,
}

impl MergedReport {
    pub fn render(&self) -> String {
        let mut s = self.meta.header();
        s.push('\n');
        for (id, set) in &self.entries {
            writeln!(s, "{}\t{}", id.0, format_set(set)).unwrap();
        }
        s
    }

    /// Parses either report form, folding per-part lines into one entry per test id.
    pub fn parse(text: &str) -> Result<Self, DedupError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (meta, _) = parse_header(lines.next().map(|l| l.1).unwrap_or(""))?;
        let mut entries: BTreeMap<DocId, BTreeSet<DocId>> = BTreeMap::new();
        for (_, id, set) in parse_body(lines)? {
            entries.entry(id).or_default().extend(set);
        }
        Ok(Self { meta, entries })
    }

    pub fn write(&self, path: &Path) -> Result<(), DedupError> {
        std::fs::write(path, self.render()).map_err(io_err(path))
    }
}

pub fn read_report(path: &Path) -> Result<MergedReport, DedupError> {
    MergedReport::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

/// Per test id, the union of all inputs. Idempotent and order-independent.
pub fn merge_reports<'a>(reports: impl IntoIterator<Item = &'a MergedReport>) -> Result<MergedReport, DedupError> {
    let mut iter = reports.into_iter();
    let first = iter.next().ok_or_else(|| DedupError::InvalidConfig("nothing to merge".into()))?;
    let mut out = first.clone();
    for r in iter {
        if let Some(why) = out.meta.mismatch(&r.meta) {
            return Err(DedupError::JobMismatch(why));
        }
        for (id, set) in &r.entries {
            out.entries.entry(*id).or_default().extend(set);
        }
    }
    Ok(out)
}

/// Test ids with at least one match, ascending.
pub fn removal_list(report: &MergedReport) -> Vec<DocId> {
    report.entries.iter().filter(|(_, s)| !s.is_empty()).map(|(id, _)| *id).collect()
}

pub fn render_id_list(ids: &[DocId]) -> String {
    ids.iter().map(|id| format!("{}\n", id.0)).collect()
}
