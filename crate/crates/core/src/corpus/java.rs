//! Java method extraction.
//!
//! A tolerant lexer feeds a brace-depth tracker that only understands enough
//! structure to tell type bodies, member blocks and expression braces apart.
//! Methods and constructors are reported when their body opens directly in
//! the member list of a named type (top-level or nested member types).
//! Members of anonymous classes, local classes, enum-constant bodies and
//! lambdas live inside other blocks and are not reported separately.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::{CorpusError, CorpusStore, DocId, DocKind, Document, MethodRecord, Provenance};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("unbalanced braces at line {line}")]
    UnbalancedBraces { line: u32 },
    #[error("source is not valid UTF-8 (byte {offset})")]
    NotUtf8 { offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Word,
    Punct(u8),
    Literal,
    Comment { doc: bool },
}

#[derive(Debug, Clone, Copy)]
struct Token {
    kind: TokKind,
    start: usize,
    end: usize,
    line: u32,
    end_line: u32,
}

struct Lexed {
    tokens: Vec<Token>,
    /// Byte offsets of unterminated literals/comments.
    errors: Vec<usize>,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    out: Lexed,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, bytes: src.as_bytes(), pos: 0, line: 1, out: Lexed { tokens: Vec::new(), errors: Vec::new() } }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    /// Advances one byte, tracking `\n`, `\r\n` and lone `\r` line ends.
    fn bump(&mut self) {
        match self.bytes[self.pos] {
            b'\n' => self.line += 1,
            b'\r' if self.peek(1) != Some(b'\n') => self.line += 1,
            _ => {}
        }
        self.pos += 1;
    }

    fn push(&mut self, kind: TokKind, start: usize, line: u32) {
        self.out.tokens.push(Token { kind, start, end: self.pos, line, end_line: self.line });
    }

    fn run(mut self) -> Lexed {
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let line = self.line;
            let b = self.bytes[self.pos];
            match b {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0c => self.bump(),
                b'/' if self.peek(1) == Some(b'/') => {
                    while self.pos < self.bytes.len() && !matches!(self.bytes[self.pos], b'\n' | b'\r') {
                        self.pos += 1;
                    }
                    self.push(TokKind::Comment { doc: false }, start, line);
                }
                b'/' if self.peek(1) == Some(b'*') => {
                    let doc = self.peek(2) == Some(b'*') && self.peek(3) != Some(b'/');
                    self.pos += 2;
                    let mut closed = false;
                    while self.pos < self.bytes.len() {
                        if self.bytes[self.pos] == b'*' && self.peek(1) == Some(b'/') {
                            self.pos += 2;
                            closed = true;
                            break;
                        }
                        self.bump();
                    }
                    if !closed {
                        self.out.errors.push(start);
                    }
                    self.push(TokKind::Comment { doc }, start, line);
                }
                b'"' if self.peek(1) == Some(b'"') && self.peek(2) == Some(b'"') => self.text_block(start, line),
                b'"' | b'\'' => self.quoted(b, start, line),
                b'0'..=b'9' => {
                    while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_alphanumeric() || matches!(self.bytes[self.pos], b'_' | b'.')) {
                        self.pos += 1;
                    }
                    self.push(TokKind::Literal, start, line);
                }
                _ if b.is_ascii() => {
                    if b.is_ascii_alphabetic() || b == b'_' || b == b'$' {
                        self.word(start, line);
                    } else {
                        self.pos += 1;
                        self.push(TokKind::Punct(b), start, line);
                    }
                }
                _ => {
                    let c = self.src[self.pos..].chars().next().unwrap();
                    if is_ident_start(c) {
                        self.word(start, line);
                    } else {
                        // Byte-order mark, non-ASCII spaces and stray symbols.
                        self.pos += c.len_utf8();
                    }
                }
            }
        }
        self.out
    }

    fn word(&mut self, start: usize, line: u32) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !is_ident_part(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        self.push(TokKind::Word, start, line);
    }

    /// String or char literal; these cannot span lines. An unterminated one
    /// is recorded as an error and only its quote is consumed, so the rest of
    /// the line is still lexed as code.
    fn quoted(&mut self, quote: u8, start: usize, line: u32) {
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') | Some(b'\r') => {
                    self.out.errors.push(start);
                    self.pos = start + 1;
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    if matches!(self.peek(0), Some(b) if b != b'\n' && b != b'\r') {
                        self.pos += 1;
                    }
                }
                Some(b) if b == quote => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.push(TokKind::Literal, start, line);
    }

    fn text_block(&mut self, start: usize, line: u32) {
        self.pos += 3;
        loop {
            match self.peek(0) {
                None => {
                    self.out.errors.push(start);
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    if self.pos < self.bytes.len() {
                        self.bump();
                    }
                }
                Some(b'"') if self.peek(1) == Some(b'"') && self.peek(2) == Some(b'"') => {
                    self.pos += 3;
                    break;
                }
                Some(_) => self.bump(),
            }
        }
        self.push(TokKind::Literal, start, line);
    }
}

const MODIFIERS: &[&str] = &[
    "public", "protected", "private", "static", "final", "abstract", "synchronized", "native", "strictfp", "default",
    "transient", "volatile", "sealed",
];

const PRIMITIVES: &[&str] = &["void", "boolean", "byte", "char", "short", "int", "long", "float", "double"];

const RESERVED: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const", "continue", "default",
    "do", "double", "else", "enum", "extends", "final", "finally", "float", "for", "goto", "if", "implements",
    "import", "instanceof", "int", "interface", "long", "native", "new", "package", "private", "protected", "public",
    "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "try", "void", "volatile", "while", "true", "false", "null",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
}

struct TypeFrame {
    name: String,
    kind: TypeKind,
    /// Enum bodies start with the constant list, which ends at the first `;`.
    in_constants: bool,
}

/// View over the significant (non-comment) tokens of a file.
struct Scan<'a> {
    src: &'a str,
    tokens: &'a [Token],
    /// Indices into `tokens` of non-comment tokens.
    sig: Vec<usize>,
}

impl<'a> Scan<'a> {
    fn tok(&self, i: usize) -> &Token {
        &self.tokens[self.sig[i]]
    }

    fn text(&self, i: usize) -> &'a str {
        let t = &self.tokens[self.sig[i]];
        &self.src[t.start..t.end]
    }

    fn is_punct(&self, i: usize, c: u8) -> bool {
        self.tok(i).kind == TokKind::Punct(c)
    }

    fn is_word(&self, i: usize) -> bool {
        self.tok(i).kind == TokKind::Word
    }

    /// Index of the `}` matching the `{` at `open`.
    fn matching_brace(&self, open: usize) -> Result<usize, ExtractError> {
        let mut depth = 0usize;
        for i in open..self.sig.len() {
            match self.tok(i).kind {
                TokKind::Punct(b'{') => depth += 1,
                TokKind::Punct(b'}') => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(i);
                    }
                }
                _ => {}
            }
        }
        Err(ExtractError::UnbalancedBraces { line: self.tok(open).line })
    }
}

/// Header shape of a member segment, given as significant-token indices.
struct Header<'s, 'a> {
    scan: &'s Scan<'a>,
    toks: Vec<usize>,
}

impl<'s, 'a> Header<'s, 'a> {
    /// Drops annotations (`@Name`, `@a.b.Name(...)`), keeping `@interface`.
    fn new(scan: &'s Scan<'a>, segment: &[usize]) -> Self {
        let mut toks = Vec::with_capacity(segment.len());
        let mut p = 0;
        while p < segment.len() {
            let i = segment[p];
            if scan.is_punct(i, b'@') && p + 1 < segment.len() && scan.text(segment[p + 1]) != "interface" {
                p += 2;
                while p + 1 < segment.len() && scan.is_punct(segment[p], b'.') && scan.is_word(segment[p + 1]) {
                    p += 2;
                }
                if p < segment.len() && scan.is_punct(segment[p], b'(') {
                    p = skip_balanced(scan, segment, p, b'(', b')');
                }
                continue;
            }
            toks.push(i);
            p += 1;
        }
        Self { scan, toks }
    }

    fn text(&self, p: usize) -> &'a str {
        self.scan.text(self.toks[p])
    }

    fn punct(&self, p: usize, c: u8) -> bool {
        p < self.toks.len() && self.scan.is_punct(self.toks[p], c)
    }

    fn word(&self, p: usize) -> bool {
        p < self.toks.len() && self.scan.is_word(self.toks[p])
    }

    fn name(&self, p: usize) -> bool {
        self.word(p) && !RESERVED.contains(&self.text(p))
    }

    fn skip_modifiers(&self, mut p: usize) -> usize {
        loop {
            if self.word(p) && MODIFIERS.contains(&self.text(p)) {
                p += 1;
            } else if self.word(p) && self.text(p) == "non" && self.punct(p + 1, b'-') && self.word(p + 2) && self.text(p + 2) == "sealed" {
                p += 3;
            } else {
                return p;
            }
        }
    }

    fn skip_angles(&self, p: usize) -> Option<usize> {
        let mut depth = 0usize;
        for q in p..self.toks.len() {
            if self.punct(q, b'<') {
                depth += 1;
            } else if self.punct(q, b'>') {
                depth -= 1;
                if depth == 0 {
                    return Some(q + 1);
                }
            }
        }
        None
    }

    fn skip_parens(&self, p: usize) -> Option<usize> {
        let mut depth = 0usize;
        for q in p..self.toks.len() {
            if self.punct(q, b'(') {
                depth += 1;
            } else if self.punct(q, b')') {
                depth -= 1;
                if depth == 0 {
                    return Some(q + 1);
                }
            }
        }
        None
    }

    fn skip_dims(&self, mut p: usize) -> usize {
        while self.punct(p, b'[') && self.punct(p + 1, b']') {
            p += 2;
        }
        p
    }

    fn skip_type(&self, mut p: usize) -> Option<usize> {
        if !self.word(p) {
            return None;
        }
        let first = self.text(p);
        if RESERVED.contains(&first) && !PRIMITIVES.contains(&first) {
            return None;
        }
        p += 1;
        loop {
            if self.punct(p, b'<') {
                p = self.skip_angles(p)?;
            } else if (self.punct(p, b'.') && self.word(p + 1)) || (self.punct(p, b'[') && self.punct(p + 1, b']')) {
                p += 2;
            } else {
                return Some(p);
            }
        }
    }

    /// `throws A, b.C<D>` running to the end of the header.
    fn throws_clause_ok(&self, p: usize) -> bool {
        if p == self.toks.len() {
            return true;
        }
        if !(self.word(p) && self.text(p) == "throws") {
            return false;
        }
        (p + 1..self.toks.len()).all(|q| self.word(q) || b".,<>?".iter().any(|&c| self.punct(q, c)))
            && p + 1 < self.toks.len()
    }

    /// True when the header declares a method or constructor of `frame`.
    fn is_method(&self, frame: &TypeFrame) -> bool {
        let end = self.toks.len();
        let mut p = self.skip_modifiers(0);
        if self.punct(p, b'<') {
            match self.skip_angles(p) {
                Some(q) => p = q,
                None => return false,
            }
        }
        // Constructor: `Name(...)`, or a compact record constructor `Name`.
        if self.word(p) && self.text(p) == frame.name {
            if self.punct(p + 1, b'(') {
                return match self.skip_parens(p + 1) {
                    Some(q) => self.throws_clause_ok(q),
                    None => false,
                };
            }
            if p + 1 == end && frame.kind == TypeKind::Record {
                return true;
            }
        }
        let Some(q) = self.skip_type(p) else { return false };
        if !(self.name(q) && self.punct(q + 1, b'(')) {
            return false;
        }
        match self.skip_parens(q + 1) {
            Some(r) => self.throws_clause_ok(self.skip_dims(r)),
            None => false,
        }
    }
}

fn skip_balanced(scan: &Scan<'_>, segment: &[usize], p: usize, open: u8, close: u8) -> usize {
    let mut depth = 0usize;
    for (q, &i) in segment.iter().enumerate().skip(p) {
        if scan.is_punct(i, open) {
            depth += 1;
        } else if scan.is_punct(i, close) {
            depth = depth.saturating_sub(1);
            if depth == 0 {
                return q + 1;
            }
        }
    }
    segment.len()
}

/// Finds a type declaration keyword in a segment and returns the type's name.
fn type_declaration(scan: &Scan<'_>, segment: &[usize]) -> Option<(String, TypeKind)> {
    for (p, &i) in segment.iter().enumerate() {
        if !scan.is_word(i) {
            continue;
        }
        let after_dot = p > 0 && scan.is_punct(segment[p - 1], b'.');
        if after_dot {
            continue;
        }
        let next_word = segment.get(p + 1).filter(|&&n| scan.is_word(n)).map(|&n| scan.text(n).to_string());
        let kind = match scan.text(i) {
            "class" => TypeKind::Class,
            "enum" => TypeKind::Enum,
            "interface" if p > 0 && scan.is_punct(segment[p - 1], b'@') => TypeKind::Annotation,
            "interface" => TypeKind::Interface,
            "record" => {
                let opens = segment.get(p + 2).is_some_and(|&n| scan.is_punct(n, b'(') || scan.is_punct(n, b'<'));
                if next_word.is_some() && opens {
                    TypeKind::Record
                } else {
                    continue;
                }
            }
            _ => continue,
        };
        if let Some(name) = next_word {
            return Some((name, kind));
        }
    }
    None
}

/// Extracts every method and constructor declared at class-member depth,
/// in source order.
///
/// Unbalanced braces make the whole file unusable; callers are expected to
/// drop all of its methods.
pub fn extract_java_methods(source: &[u8], project: &str, file_path: &str) -> Result<Vec<MethodRecord>, ExtractError> {
    let src = std::str::from_utf8(source).map_err(|e| ExtractError::NotUtf8 { offset: e.valid_up_to() })?;
    let lexed = Lexer::new(src).run();
    let sig = lexed.tokens.iter().enumerate().filter(|(_, t)| !matches!(t.kind, TokKind::Comment { .. })).map(|(i, _)| i).collect();
    let scan = Scan { src, tokens: &lexed.tokens, sig };

    let mut records = Vec::new();
    let mut frames: Vec<TypeFrame> = Vec::new();
    let mut segment: Vec<usize> = Vec::new();
    let mut paren_depth = 0usize;
    let mut has_assign = false;

    let mut i = 0;
    while i < scan.sig.len() {
        match scan.tok(i).kind {
            TokKind::Punct(b'{') => {
                let in_constants = frames.last().is_some_and(|f| f.in_constants);
                if paren_depth > 0 || has_assign || in_constants {
                    // Initializer, lambda or annotation-argument braces stay in the segment.
                    i = scan.matching_brace(i)? + 1;
                    continue;
                }
                if let Some((name, kind)) = type_declaration(&scan, &segment) {
                    frames.push(TypeFrame { name, kind, in_constants: kind == TypeKind::Enum });
                    segment.clear();
                    i += 1;
                    continue;
                }
                let close = scan.matching_brace(i)?;
                if let Some(frame) = frames.last() {
                    if !segment.is_empty() && Header::new(&scan, &segment).is_method(frame) {
                        records.push(make_record(&scan, &lexed, &segment, i, close, project, file_path, records.len()));
                    }
                }
                segment.clear();
                i = close + 1;
            }
            TokKind::Punct(b'}') => {
                if frames.pop().is_none() {
                    return Err(ExtractError::UnbalancedBraces { line: scan.tok(i).line });
                }
                segment.clear();
                paren_depth = 0;
                has_assign = false;
                i += 1;
            }
            TokKind::Punct(b';') => {
                if let Some(f) = frames.last_mut() {
                    f.in_constants = false;
                }
                segment.clear();
                paren_depth = 0;
                has_assign = false;
                i += 1;
            }
            kind => {
                match kind {
                    TokKind::Punct(b'(') => paren_depth += 1,
                    TokKind::Punct(b')') => paren_depth = paren_depth.saturating_sub(1),
                    TokKind::Punct(b'=') if paren_depth == 0 => has_assign = true,
                    _ => {}
                }
                segment.push(i);
                i += 1;
            }
        }
    }
    if !frames.is_empty() {
        let line = scan.tokens.last().map_or(1, |t| t.end_line);
        return Err(ExtractError::UnbalancedBraces { line });
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn make_record(scan: &Scan<'_>, lexed: &Lexed, segment: &[usize], open: usize, close: usize, project: &str, file_path: &str, ordinal: usize) -> MethodRecord {
    let first = *scan.tok(segment[0]);
    let open_tok = scan.tok(open);
    let close_tok = scan.tok(close);
    let text = scan.src[first.start..close_tok.end].to_string();
    let signature_text = scan.src[first.start..open_tok.start].trim_end().to_string();

    let full_index = scan.sig[segment[0]];
    let doc_comment = full_index
        .checked_sub(1)
        .map(|j| &lexed.tokens[j])
        .filter(|t| t.kind == TokKind::Comment { doc: true } && t.end_line < first.line)
        .map(|t| scan.src[t.start..t.end].to_string());

    let span = first.start..close_tok.end;
    let parse_error = lexed.errors.iter().any(|e| span.contains(e));

    MethodRecord {
        document: Document {
            id: DocId(ordinal as u64),
            kind: DocKind::JavaMethod,
            text,
            provenance: Provenance {
                project: project.to_string(),
                file_path: file_path.to_string(),
                start_line: first.line,
                end_line: close_tok.line,
            },
        },
        signature_text,
        doc_comment,
        parse_error,
    }
}

/// Drops methods with whitespace-only bodies and methods flagged with parse
/// errors, keeping the relative order of the rest.
pub fn filter_methods(records: Vec<MethodRecord>) -> Vec<MethodRecord> {
    records.into_iter().filter(|r| !r.parse_error && !r.body().trim().is_empty()).collect()
}

#[derive(Debug, Clone, Default)]
pub struct JavaIngestOptions {
    /// Prepend the method's doc comment to the stored text.
    pub include_doc_comment: bool,
}

#[derive(Debug, Clone, Default)]
pub struct JavaIngestReport {
    pub projects: usize,
    pub files: usize,
    /// Files dropped wholesale (corrupt or undecodable), with the reason.
    pub discarded_files: Vec<(PathBuf, ExtractError)>,
    pub methods_found: usize,
    pub methods_kept: usize,
    pub first_id: Option<DocId>,
}

/// Ingests a directory of projects: every immediate subdirectory is one
/// project, and `.java` files directly under `root` belong to a project named
/// after `root` itself. Files are visited in sorted path order so ids are
/// stable across runs; extraction runs in parallel.
pub fn ingest_java_tree(store: &mut CorpusStore, root: &Path, options: &JavaIngestOptions) -> Result<JavaIngestReport, CorpusError> {
    let mut units: Vec<(String, PathBuf, String)> = Vec::new();
    let mut projects = 0;
    let mut entries: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| CorpusError::io(root, e))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CorpusError::io(root, e))?;
    entries.sort_by_key(|e| e.file_name());

    let root_name = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            projects += 1;
            let project = entry.file_name().to_string_lossy().into_owned();
            for file in WalkDir::new(&path).sort_by_file_name() {
                let file = file.map_err(|e| CorpusError::io(&path, e.into()))?;
                if file.file_type().is_file() && file.path().extension().is_some_and(|x| x == "java") {
                    let rel = file.path().strip_prefix(&path).unwrap();
                    units.push((project.clone(), file.path().to_path_buf(), rel_string(rel)));
                }
            }
        } else if path.extension().is_some_and(|x| x == "java") {
            units.push((root_name.clone(), path.clone(), entry.file_name().to_string_lossy().into_owned()));
        }
    }
    if units.iter().any(|(p, _, _)| *p == root_name) {
        projects += 1;
    }

    let extracted: Vec<_> = units
        .par_iter()
        .map(|(project, path, rel)| {
            let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
            Ok(extract_java_methods(&bytes, project, rel))
        })
        .collect::<Result<_, CorpusError>>()?;

    let mut report = JavaIngestReport { projects, files: units.len(), ..Default::default() };
    for ((_, path, _), result) in units.iter().zip(extracted) {
        let records = match result {
            Ok(r) => r,
            Err(e) => {
                report.discarded_files.push((path.clone(), e));
                continue;
            }
        };
        report.methods_found += records.len();
        for record in filter_methods(records) {
            let text = match (&record.doc_comment, options.include_doc_comment) {
                (Some(doc), true) => format!("{doc}\n{}", record.document.text),
                _ => record.document.text,
            };
            let id = store.push(DocKind::JavaMethod, text, record.document.provenance);
            report.first_id.get_or_insert(id);
            report.methods_kept += 1;
        }
    }
    Ok(report)
}

fn rel_string(rel: &Path) -> String {
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}
