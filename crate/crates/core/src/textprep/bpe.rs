//! GPT-2 byte-level byte-pair encoding.
//!
//! Vocabularies are read from the published GPT-2 file pair: `encoder.json`
//! (token string to id) and `vocab.bpe` (merges in rank order, one
//! space-separated pair per line after a `#version` header). The Hugging Face
//! names `vocab.json` / `merges.txt` are accepted as well.

use std::collections::HashMap;
use std::path::Path;

use fancy_regex::Regex;

use crate::hash::Digest64;

pub const END_OF_TEXT: &str = "<|endoftext|>";
const MAX_VOCAB: usize = 1 << 16;
const SPLIT_PATTERN: &str = r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("vocabulary references a symbol with no id: {0:?}")]
    VocabMissingSymbol(String),
    #[error("vocabulary has {0} entries; token ids must fit in 16 bits")]
    VocabTooLarge(usize),
    #[error("duplicate merge rule {0:?}")]
    DuplicateMerge(String),
    #[error("malformed vocabulary file: {0}")]
    Malformed(String),
    #[error("unknown token id {0}")]
    UnknownTokenId(u32),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// GPT-2's reversible byte to printable-character table.
fn bytes_to_unicode() -> [char; 256] {
    let mut table = ['\0'; 256];
    let mut extra = 0u32;
    for b in 0..=255u8 {
        let printable = (b'!'..=b'~').contains(&b) || (0xA1..=0xAC).contains(&b) || (0xAE..=0xFF).contains(&b);
        table[b as usize] = if printable {
            char::from(b)
        } else {
            extra += 1;
            char::from_u32(255 + extra).unwrap()
        };
    }
    table
}

#[derive(Debug)]
pub struct BpeVocab {
    byte_encoder: [char; 256],
    byte_decoder: HashMap<char, u8>,
    /// Id of each single-byte symbol, indexed by byte.
    byte_ids: [u32; 256],
    /// (left id, right id) → (rank, merged id).
    merges: HashMap<(u32, u32), (u32, u32)>,
    token_to_id: HashMap<String, u32>,
    id_to_token: HashMap<u32, String>,
    end_of_text: u32,
    splitter: Regex,
    fingerprint: u64,
}

impl BpeVocab {
    /// Loads `encoder.json` + `vocab.bpe` (or `vocab.json` + `merges.txt`)
    /// from a directory.
    pub fn from_dir(dir: &Path) -> Result<Self, BpeError> {
        let pick = |a: &str, b: &str| if dir.join(a).exists() { dir.join(a) } else { dir.join(b) };
        let encoder_path = pick("encoder.json", "vocab.json");
        let merges_path = pick("vocab.bpe", "merges.txt");
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|source| BpeError::Io { path: p.display().to_string(), source });
        Self::from_parts(&read(&encoder_path)?, &read(&merges_path)?)
    }

    pub fn from_parts(encoder_json: &str, merges_text: &str) -> Result<Self, BpeError> {
        let token_to_id: HashMap<String, u32> = serde_json::from_str(encoder_json).map_err(|e| BpeError::Malformed(format!("encoder: {e}")))?;
        if token_to_id.len() > MAX_VOCAB {
            return Err(BpeError::VocabTooLarge(token_to_id.len()));
        }
        let mut id_to_token = HashMap::with_capacity(token_to_id.len());
        for (tok, &id) in &token_to_id {
            if id_to_token.insert(id, tok.clone()).is_some() {
                return Err(BpeError::Malformed(format!("id {id} assigned twice")));
            }
        }
        let lookup = |sym: &str| token_to_id.get(sym).copied().ok_or_else(|| BpeError::VocabMissingSymbol(sym.to_string()));

        let byte_encoder = bytes_to_unicode();
        let byte_decoder = byte_encoder.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
        let mut byte_ids = [0u32; 256];
        for (b, c) in byte_encoder.iter().enumerate() {
            byte_ids[b] = lookup(&c.to_string())?;
        }

        let mut merges = HashMap::new();
        let lines = merges_text.lines().filter(|l| !l.starts_with("#version") && !l.trim().is_empty());
        for (rank, line) in lines.enumerate() {
            let (left, right) = line.split_once(' ').ok_or_else(|| BpeError::Malformed(format!("merge line {line:?}")))?;
            let key = (lookup(left)?, lookup(right)?);
            let merged = lookup(&format!("{left}{right}"))?;
            if merges.insert(key, (rank as u32, merged)).is_some() {
                return Err(BpeError::DuplicateMerge(line.to_string()));
            }
        }
        let end_of_text = lookup(END_OF_TEXT)?;

        let mut fp = Digest64::new();
        fp.update(b"gpt2-bpe/v1");
        let mut sorted: Vec<(&u32, &String)> = id_to_token.iter().collect();
        sorted.sort();
        for (id, tok) in sorted {
            fp.update_u64(u64::from(*id)).update(tok.as_bytes()).update(&[0]);
        }
        fp.update(merges_text.as_bytes());

        Ok(Self {
            byte_encoder,
            byte_decoder,
            byte_ids,
            merges,
            token_to_id,
            id_to_token,
            end_of_text,
            splitter: Regex::new(SPLIT_PATTERN).expect("static pattern"),
            fingerprint: fp.finish(),
        })
    }

    pub fn len(&self) -> usize {
        self.token_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_to_id.is_empty()
    }

    pub fn end_of_text(&self) -> u32 {
        self.end_of_text
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn token_id(&self, symbol: &str) -> Option<u32> {
        self.token_to_id.get(symbol).copied()
    }

    /// Byte-level symbol string of `bytes` (the form used in vocab files).
    pub fn byte_symbols(&self, bytes: &[u8]) -> String {
        bytes.iter().map(|&b| self.byte_encoder[b as usize]).collect()
    }

    /// Encodes text as ordinary text: special-token strings are not recognised.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        for piece in self.splitter.find_iter(text) {
            let piece = piece.expect("split pattern cannot hit backtrack limits");
            self.encode_piece(piece.as_str().as_bytes(), &mut ids);
        }
        ids
    }

    fn encode_piece(&self, bytes: &[u8], out: &mut Vec<u32>) {
        let mut symbols: Vec<u32> = bytes.iter().map(|&b| self.byte_ids[b as usize]).collect();
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.merges.get(&(w[0], w[1])).map(|&(rank, merged)| (rank, w[0], w[1], merged)))
                .min_by_key(|&(rank, ..)| rank);
            let Some((_, left, right, merged)) = best else { break };
            let mut next = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(symbols[i]);
                    i += 1;
                }
            }
            symbols = next;
        }
        out.extend(symbols);
    }

    /// Raw bytes behind a token sequence.
    pub fn decode_bytes(&self, ids: &[u32]) -> Result<Vec<u8>, BpeError> {
        let mut bytes = Vec::new();
        for &id in ids {
            let tok = self.id_to_token.get(&id).ok_or(BpeError::UnknownTokenId(id))?;
            for c in tok.chars() {
                match self.byte_decoder.get(&c) {
                    Some(&b) => bytes.push(b),
                    None => {
                        let mut buf = [0u8; 4];
                        bytes.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                    }
                }
            }
        }
        Ok(bytes)
    }

    /// Inverse of [`encode`](Self::encode). Byte sequences that are not valid
    /// UTF-8 (only possible for ids outside the encoder's image) are decoded
    /// with replacement characters.
    pub fn decode(&self, ids: &[u32]) -> Result<String, BpeError> {
        let bytes = self.decode_bytes(ids)?;
        Ok(match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
        })
    }
}
