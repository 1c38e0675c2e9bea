//! On-disk corpus store.
//!
//! A store directory holds `docs.txt`, one record per line:
//!
//! ```text
//! id \t kind \t base64(text) \t project \t file_path \t start_line \t end_line \n
//! ```
//!
//! and `meta`, a `key=value` file with the format version and per-kind counts.
//! The same record framing is accepted for test files by the dedup tools.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;

use super::{CorpusError, CorpusStore, DocId, DocKind, Document, KindCounts, Provenance};

pub const STORE_FORMAT_VERSION: u32 = 1;
const DOCS_FILE: &str = "docs.txt";
const META_FILE: &str = "meta";

fn check_field(name: &str, value: &str) -> Result<(), CorpusError> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(CorpusError::InvalidField(format!("{name} contains a tab or newline: {value:?}")));
    }
    Ok(())
}

pub(crate) fn write_record(out: &mut impl Write, doc: &Document) -> Result<(), CorpusError> {
    check_field("project", &doc.provenance.project)?;
    check_field("file_path", &doc.provenance.file_path)?;
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        doc.id,
        doc.kind,
        B64.encode(doc.text.as_bytes()),
        doc.provenance.project,
        doc.provenance.file_path,
        doc.provenance.start_line,
        doc.provenance.end_line
    )
    .map_err(|e| CorpusError::io(DOCS_FILE, e))
}

fn parse_record(line: &str) -> Result<Document, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 tab-separated fields, found {}", fields.len()));
    }
    let id = fields[0].parse::<u64>().map_err(|e| format!("bad id: {e}"))?;
    let kind = fields[1].parse::<DocKind>().map_err(|e| e.to_string())?;
    let raw = B64.decode(fields[2]).map_err(|e| format!("bad base64 text: {e}"))?;
    let text = String::from_utf8(raw).map_err(|_| "text is not UTF-8".to_string())?;
    let start_line = fields[5].parse::<u32>().map_err(|e| format!("bad start line: {e}"))?;
    let end_line = fields[6].parse::<u32>().map_err(|e| format!("bad end line: {e}"))?;
    Ok(Document {
        id: DocId(id),
        kind,
        text,
        provenance: Provenance { project: fields[3].to_string(), file_path: fields[4].to_string(), start_line, end_line },
    })
}

/// Parses a record file into documents in file order.
pub fn read_record_file(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    load_records(BufReader::new(file), path)
}

/// Writes documents in record framing, e.g. a test file for `check`.
pub fn write_record_file<'a>(path: &Path, docs: impl IntoIterator<Item = &'a Document>) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        write_record(&mut out, doc)?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}

pub fn load_records(reader: impl BufRead, path: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let doc = parse_record(&line).map_err(|message| CorpusError::Format { path: path.to_path_buf(), line: n + 1, message })?;
        docs.push(doc);
    }
    Ok(docs)
}

impl CorpusStore {
    /// Writes the store to `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        let docs_path = dir.join(DOCS_FILE);
        let file = File::create(&docs_path).map_err(|e| CorpusError::io(&docs_path, e))?;
        let mut out = BufWriter::new(file);
        for doc in self.iter() {
            write_record(&mut out, doc)?;
        }
        out.flush().map_err(|e| CorpusError::io(&docs_path, e))?;

        let counts = self.counts();
        let meta = format!(
            "format_version={STORE_FORMAT_VERSION}\ndocuments={}\njava_method={}\ndiscussion_thread={}\n",
            self.len(),
            counts.java_method,
            counts.discussion_thread
        );
        let meta_path = dir.join(META_FILE);
        std::fs::write(&meta_path, meta).map_err(|e| CorpusError::io(&meta_path, e))
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let meta_path = dir.join(META_FILE);
        let meta = std::fs::read_to_string(&meta_path).map_err(|e| CorpusError::io(&meta_path, e))?;
        let bad_meta = |line: usize, message: String| CorpusError::Format { path: meta_path.clone(), line, message };
        let mut version = None;
        let mut documents = None;
        let mut counts = KindCounts::default();
        for (n, line) in meta.lines().enumerate() {
            let Some((key, value)) = line.split_once('=') else { continue };
            let value: u64 = value.trim().parse().map_err(|e| bad_meta(n + 1, format!("bad value for {key}: {e}")))?;
            match key.trim() {
                "format_version" => version = Some(value),
                "documents" => documents = Some(value),
                "java_method" => counts.java_method = value,
                "discussion_thread" => counts.discussion_thread = value,
                _ => {}
            }
        }
        match version {
            Some(v) if v == u64::from(STORE_FORMAT_VERSION) => {}
            other => return Err(bad_meta(1, format!("unsupported store format version {other:?}"))),
        }

        let docs = read_record_file(&dir.join(DOCS_FILE))?;
        let mut store = CorpusStore::new();
        for doc in docs {
            store.insert(doc)?;
        }
        if documents != Some(store.len() as u64) || counts != store.counts() {
            return Err(bad_meta(0, "document counts do not match docs.txt".into()));
        }
        Ok(store)
    }
}
