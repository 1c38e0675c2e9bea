//! Document model, corpus store and ingestion front-ends.

mod java;
mod store;
mod threads;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use java::{extract_java_methods, filter_methods, ingest_java_tree, ExtractError, JavaIngestOptions, JavaIngestReport};
pub use store::{load_records, read_record_file, write_record_file, STORE_FORMAT_VERSION};
pub use threads::{ingest_threads, strip_markup, thread_text, ThreadIngestReport, ThreadOptions, ThreadRecord};

/// Corpus-unique document identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(pub u64);

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    JavaMethod,
    DiscussionThread,
}

impl DocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::JavaMethod => "java_method",
            DocKind::DiscussionThread => "discussion_thread",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "java_method" => Ok(DocKind::JavaMethod),
            "discussion_thread" => Ok(DocKind::DiscussionThread),
            other => Err(CorpusError::InvalidField(format!("unknown document kind {other:?}"))),
        }
    }
}

/// Where a document came from. Threads carry an empty path and zero lines.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub project: String,
    pub file_path: String,
    pub start_line: u32,
    pub end_line: u32,
}

impl Provenance {
    pub fn thread(thread_id: &str) -> Self {
        Self { project: thread_id.to_string(), ..Default::default() }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.file_path.is_empty() {
            write!(f, "{}", self.project)
        } else {
            write!(f, "{}/{}:{}-{}", self.project, self.file_path, self.start_line, self.end_line)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: DocId,
    pub kind: DocKind,
    pub text: String,
    pub provenance: Provenance,
}

/// A method or constructor pulled out of a Java source file.
///
/// `document.id` is the method's ordinal within its file until the record is
/// appended to a store, which assigns the corpus id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodRecord {
    pub document: Document,
    /// Declaration text up to (not including) the opening brace.
    pub signature_text: String,
    /// Block comment starting with `/**` that immediately precedes the method.
    pub doc_comment: Option<String>,
    /// Set when the lexer hit an unterminated literal or comment inside the span.
    pub parse_error: bool,
}

impl MethodRecord {
    /// The text strictly between the body braces.
    pub fn body(&self) -> &str {
        let text = &self.document.text;
        let open = self.signature_text.len() + text[self.signature_text.len()..].find('{').unwrap_or(0);
        let close = text.rfind('}').unwrap_or(text.len());
        if open < close {
            &text[open + 1..close]
        } else {
            ""
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown document id {0}")]
    UnknownId(DocId),
    #[error("duplicate document id {0}")]
    DuplicateId(DocId),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.into(), source }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub java_method: u64,
    pub discussion_thread: u64,
}

impl KindCounts {
    fn bump(&mut self, kind: DocKind) {
        match kind {
            DocKind::JavaMethod => self.java_method += 1,
            DocKind::DiscussionThread => self.discussion_thread += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.java_method + self.discussion_thread
    }
}

/// Output of [`CorpusStore::extract_holdout`].
#[derive(Debug, Clone)]
pub struct Holdout {
    /// Holdout documents in ascending id order.
    pub holdout: Vec<Document>,
    pub remainder_ids: BTreeSet<DocId>,
}

/// Ordered, id-addressable document collection.
///
/// Appends come from a single writer; once ingestion is done the store is
/// only read, and `&CorpusStore` can be shared across threads.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    documents: Vec<Document>,
    by_id: HashMap<DocId, usize>,
    counts: KindCounts,
    next_id: u64,
}

impl CorpusStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn counts(&self) -> KindCounts {
        self.counts
    }

    /// Appends a document under the next sequential id.
    pub fn push(&mut self, kind: DocKind, text: String, provenance: Provenance) -> DocId {
        let id = DocId(self.next_id);
        self.insert(Document { id, kind, text, provenance }).expect("sequential ids never collide");
        id
    }

    /// Inserts a document that already carries its id.
    pub fn insert(&mut self, doc: Document) -> Result<(), CorpusError> {
        if self.by_id.contains_key(&doc.id) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        self.next_id = self.next_id.max(doc.id.0 + 1);
        self.counts.bump(doc.kind);
        self.by_id.insert(doc.id, self.documents.len());
        self.documents.push(doc);
        Ok(())
    }

    pub fn get(&self, id: DocId) -> Option<&Document> {
        self.by_id.get(&id).map(|&i| &self.documents[i])
    }

    pub fn contains(&self, id: DocId) -> bool {
        self.by_id.contains_key(&id)
    }

    /// Documents in ingestion order.
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.documents.iter().map(|d| d.id)
    }

    pub fn trace(&self, id: DocId) -> Result<&Provenance, CorpusError> {
        self.get(id).map(|d| &d.provenance).ok_or(CorpusError::UnknownId(id))
    }

    /// Splits the store's ids into a holdout list and the remaining id set.
    /// The store itself is left untouched.
    pub fn extract_holdout(&self, holdout_ids: &BTreeSet<DocId>) -> Result<Holdout, CorpusError> {
        if let Some(&missing) = holdout_ids.iter().find(|id| !self.contains(**id)) {
            return Err(CorpusError::UnknownId(missing));
        }
        let holdout = holdout_ids.iter().map(|id| self.get(*id).unwrap().clone()).collect();
        let remainder_ids = self.ids().filter(|id| !holdout_ids.contains(id)).collect();
        Ok(Holdout { holdout, remainder_ids })
    }
}

impl<'a> IntoIterator for &'a CorpusStore {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.documents.iter()
    }
}

/// Reads a holdout/exclusion id list: one decimal id per line, blank lines
/// and `#` comments ignored.
pub fn read_id_list(path: &std::path::Path) -> Result<BTreeSet<DocId>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_id_list(&text).map_err(|(line, message)| CorpusError::Format { path: path.to_path_buf(), line, message })
}

pub fn parse_id_list(text: &str) -> Result<BTreeSet<DocId>, (usize, String)> {
    let mut ids = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id = line.parse::<u64>().map_err(|e| (n + 1, format!("bad id {line:?}: {e}")))?;
        ids.insert(DocId(id));
    }
    Ok(ids)
}
