//! Deterministic synthetic corpora with planted near-duplicates, for
//! benchmarks and end-to-end checks.
//!
//! Documents are sequences of distinct random words, so every word 3-gram of
//! a document is unique and shingle overlap is controlled exactly: a copy
//! that keeps the first `m` of `n` words and replaces the rest shares `m - 2`
//! of its `n - 2` shingles with the original.

use crate::corpus::{CorpusStore, DocId, DocKind, Provenance};
use crate::dedup::TestDoc;
use crate::hash::SplitMix64;

/// Words per generated document.
pub const DEFAULT_WORDS: usize = 120;

pub struct TextGen {
    rng: SplitMix64,
}

impl TextGen {
    pub fn new(seed: u64) -> Self {
        Self { rng: SplitMix64::new(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next()
    }

    /// Uniform in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.rng.next() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.rng.next() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn word(&mut self) -> String {
        format!("w{:012x}", self.rng.next() >> 16)
    }

    pub fn words(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.word()).collect()
    }

    /// `n` random words laid out as a few lines of text.
    pub fn document(&mut self, n: usize) -> String {
        join_words(&self.words(n))
    }

    /// A copy of `words` whose shingle Jaccard with the original is the
    /// smallest achievable value ≥ `target`.
    pub fn near_copy(&mut self, words: &[String], target: f64) -> Vec<String> {
        let keep = keep_for_target(words.len(), target);
        let mut out = words[..keep].to_vec();
        out.extend(self.words(words.len() - keep));
        out
    }
}

pub fn join_words(words: &[String]) -> String {
    words.chunks(12).map(|c| c.join(" ")).collect::<Vec<_>>().join("\n")
}

/// Number of leading words to keep so that `(m-2) / (2(n-2) - (m-2)) ≥ target`.
pub fn keep_for_target(n: usize, target: f64) -> usize {
    assert!(n >= 3);
    let s = (n - 2) as f64;
    let shared = (2.0 * s * target / (1.0 + target) - 1e-9).ceil().clamp(0.0, s) as usize;
    shared + 2
}

/// Shingle Jaccard of a prefix copy, as constructed by [`TextGen::near_copy`].
pub fn copy_jaccard(n: usize, keep: usize) -> f64 {
    let (s, c) = ((n - 2) as f64, keep.saturating_sub(2) as f64);
    c / (2.0 * s - c)
}

/// A corpus plus test documents and the planted (test, corpus, jaccard) pairs.
pub struct PlantedCorpus {
    pub store: CorpusStore,
    pub tests: Vec<TestDoc>,
    pub planted: Vec<(DocId, DocId, f64)>,
}

/// Background documents plus, for each test document, `copies` near-copies
/// planted at random corpus positions. Copy similarities are drawn from
/// `jaccard` (a `[lo, hi)` range) per copy.
pub fn planted_corpus(seed: u64, corpus_size: usize, tests: usize, copies: usize, jaccard: (f64, f64), words: usize) -> PlantedCorpus {
    let strata: Vec<Stratum> = (0..tests).map(|_| Stratum { jaccard, tests: 1, copies }).collect();
    build(seed, corpus_size, &strata, words)
}

/// One similarity level of a stratified corpus.
#[derive(Debug, Clone, Copy)]
pub struct Stratum {
    pub jaccard: (f64, f64),
    pub tests: usize,
    pub copies: usize,
}

/// Test documents grouped in strata; each test's copies are drawn from its
/// stratum's range. Tests beyond the strata are not generated.
pub fn stratified_corpus(seed: u64, corpus_size: usize, strata: &[Stratum], words: usize) -> PlantedCorpus {
    build(seed, corpus_size, strata, words)
}

fn build(seed: u64, corpus_size: usize, strata: &[Stratum], words: usize) -> PlantedCorpus {
    let mut g = TextGen::new(seed);
    let mut texts: Vec<Option<String>> = vec![None; corpus_size];
    let mut tests = Vec::new();
    let mut planted_at = Vec::new();
    let mut free: Vec<usize> = (0..corpus_size).collect();
    for stratum in strata {
        for _ in 0..stratum.tests {
            let id = DocId(tests.len() as u64);
            let base = g.words(words);
            for _ in 0..stratum.copies {
                assert!(!free.is_empty(), "corpus too small for planted copies");
                let slot = free.swap_remove(g.below(free.len() as u64) as usize);
                let target = g.uniform(stratum.jaccard.0, stratum.jaccard.1);
                let copy = g.near_copy(&base, target);
                let keep = copy.iter().zip(&base).take_while(|(a, b)| a == b).count();
                texts[slot] = Some(join_words(&copy));
                planted_at.push((id, slot, copy_jaccard(words, keep)));
            }
            tests.push(TestDoc { id, text: join_words(&base) });
        }
    }
    let mut store = CorpusStore::new();
    for (i, t) in texts.into_iter().enumerate() {
        let text = t.unwrap_or_else(|| g.document(words));
        let provenance = Provenance { project: "synthetic".into(), file_path: format!("doc{i}.txt"), start_line: 1, end_line: 1 + words as u32 / 12 };
        store.push(DocKind::JavaMethod, text, provenance);
    }
    let planted = planted_at.into_iter().map(|(t, slot, j)| (t, DocId(slot as u64), j)).collect();
    PlantedCorpus { store, tests, planted }
}
