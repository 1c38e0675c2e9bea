use serde::{Deserialize, Serialize};

use crate::hash::{bytes_hash, Digest64};

const NGRAM_SEPARATOR: u8 = 0x1f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShingleUnit {
    /// Maximal runs of non-whitespace characters.
    WordToken,
}

/// How documents are cut into shingles. Part of every index's identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShingleConfig {
    pub unit: ShingleUnit,
    /// Shingle width in tokens.
    pub n: usize,
    pub lowercase: bool,
    /// Seed of the 64-bit n-gram hash.
    pub hash_seed: u64,
}

impl Default for ShingleConfig {
    fn default() -> Self {
        Self { unit: ShingleUnit::WordToken, n: 3, lowercase: false, hash_seed: 0 }
    }
}

impl ShingleConfig {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    /// Stable digest of the configuration, stored in index metadata.
    pub fn fingerprint(&self) -> u64 {
        let mut d = Digest64::new();
        d.update(b"shingle/v1")
            .update_u64(match self.unit {
                ShingleUnit::WordToken => 0,
            })
            .update_u64(self.n as u64)
            .update_u64(self.lowercase as u64)
            .update_u64(self.hash_seed);
        d.finish()
    }
}

/// Set of 64-bit shingle hashes, kept sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ShingleSet {
    hashes: Vec<u64>,
}

impl ShingleSet {
    pub fn from_hashes(mut hashes: Vec<u64>) -> Self {
        hashes.sort_unstable();
        hashes.dedup();
        Self { hashes }
    }

    pub fn hashes(&self) -> &[u64] {
        &self.hashes
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    pub fn contains(&self, h: u64) -> bool {
        self.hashes.binary_search(&h).is_ok()
    }

    pub fn intersection_len(&self, other: &ShingleSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.hashes, &other.hashes);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

impl FromIterator<u64> for ShingleSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        Self::from_hashes(iter.into_iter().collect())
    }
}

/// Hashes every run of `n` consecutive whitespace-separated tokens.
/// Texts with fewer than `n` tokens give the empty set.
pub fn shingle(text: &str, config: &ShingleConfig) -> ShingleSet {
    assert!(config.n >= 1, "shingle width must be at least 1");
    let lowered;
    let text = if config.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() < config.n {
        return ShingleSet::default();
    }
    let mut buf = Vec::new();
    let hashes = tokens
        .windows(config.n)
        .map(|gram| {
            buf.clear();
            for (i, tok) in gram.iter().enumerate() {
                if i > 0 {
                    buf.push(NGRAM_SEPARATOR);
                }
                buf.extend_from_slice(tok.as_bytes());
            }
            bytes_hash(&buf, config.hash_seed)
        })
        .collect();
    ShingleSet::from_hashes(hashes)
}

/// |A ∩ B| / |A ∪ B|, with two empty sets counting as identical.
pub fn exact_jaccard(a: &ShingleSet, b: &ShingleSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection_len(b);
    inter as f64 / (a.len() + b.len() - inter) as f64
}
