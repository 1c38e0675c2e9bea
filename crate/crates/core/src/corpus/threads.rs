//! Discussion-thread ingestion from newline-delimited JSON records:
//!
//! ```text
//! {"thread_id": 12, "title": "How do I ...", "posts": ["<p>question</p>", "answer"]}
//! ```

use std::io::BufRead;

use serde::Deserialize;
use serde_json::Value;

use super::{CorpusError, CorpusStore, DocId, DocKind, Provenance};

#[derive(Debug, Clone)]
pub struct ThreadOptions {
    /// Remove HTML tags and decode entities in titles and posts.
    pub strip_markup: bool,
}

impl Default for ThreadOptions {
    fn default() -> Self {
        Self { strip_markup: true }
    }
}

/// One parsed interchange record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadRecord {
    pub thread_id: String,
    pub title: String,
    pub posts: Vec<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    thread_id: Option<Value>,
    title: Option<String>,
    #[serde(default)]
    posts: Vec<String>,
}

impl ThreadRecord {
    /// Parses one line; `None` for malformed records (bad JSON, missing id
    /// or title).
    pub fn parse(line: &str) -> Option<Self> {
        let raw: RawRecord = serde_json::from_str(line).ok()?;
        let thread_id = match raw.thread_id? {
            Value::Number(n) if n.is_u64() => n.to_string(),
            Value::String(s) if !s.is_empty() && !s.contains(['\t', '\n', '\r']) => s,
            _ => return None,
        };
        Some(Self { thread_id, title: raw.title?, posts: raw.posts })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThreadIngestReport {
    pub ingested: Vec<DocId>,
    /// Lines skipped as malformed.
    pub skipped: usize,
}

/// Title, a blank line, then the posts separated by blank lines.
pub fn thread_text(title: &str, posts: &[String], options: &ThreadOptions) -> String {
    let clean = |s: &str| if options.strip_markup { strip_markup(s) } else { s.to_string() };
    let mut parts = vec![clean(title)];
    parts.extend(posts.iter().map(|p| clean(p)));
    parts.join("\n\n")
}

/// Appends one discussion-thread document per well-formed record.
pub fn ingest_threads(input: impl BufRead, options: &ThreadOptions, store: &mut CorpusStore) -> Result<ThreadIngestReport, CorpusError> {
    let mut report = ThreadIngestReport::default();
    for line in input.lines() {
        let line = line.map_err(|e| CorpusError::io("<threads>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(record) = ThreadRecord::parse(&line) else {
            report.skipped += 1;
            continue;
        };
        let text = thread_text(&record.title, &record.posts, options);
        let id = store.push(DocKind::DiscussionThread, text, Provenance::thread(&record.thread_id));
        report.ingested.push(id);
    }
    Ok(report)
}

const BLOCK_TAGS: &[&str] = &["p", "br", "div", "pre", "li", "ul", "ol", "blockquote", "tr", "h1", "h2", "h3", "h4", "h5", "h6", "hr"];

/// Removes HTML tags and decodes the common entities. Block-level tags turn
/// into newlines so words on either side stay separate; a `<` that does not
/// start a tag is kept.
pub fn strip_markup(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut rest = html;
    while let Some(pos) = rest.find('<') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let starts_tag = tail[1..].chars().next().is_some_and(|c| c.is_ascii_alphabetic() || matches!(c, '/' | '!' | '?'));
        match (starts_tag, tail.find('>')) {
            (true, Some(end)) => {
                let name: String = tail[1..end]
                    .trim_start_matches('/')
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                if BLOCK_TAGS.contains(&name.as_str()) {
                    out.push('\n');
                }
                rest = &tail[end + 1..];
            }
            _ => {
                out.push('<');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    decode_entities(&out)
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let decoded = tail.find(';').filter(|&end| end <= 10).and_then(|end| {
            let c = match &tail[1..end] {
                "lt" => Some('<'),
                "gt" => Some('>'),
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                num if num.starts_with("#x") || num.starts_with("#X") => u32::from_str_radix(&num[2..], 16).ok().and_then(char::from_u32),
                num if num.starts_with('#') => num[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            }?;
            Some((c, end))
        });
        match decoded {
            Some((c, end)) => {
                out.push(c);
                rest = &tail[end + 1..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
