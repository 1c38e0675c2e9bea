use rayon::prelude::*;
use serde::Serialize;

use super::BpeVocab;
use crate::corpus::Document;

/// Document/token totals and the share of documents that fit a context window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub context_length: usize,
    pub document_count: u64,
    pub token_count: u64,
    /// Documents whose encoding has at most `context_length` tokens.
    pub within_context: u64,
}

impl CorpusStats {
    pub fn new(context_length: usize) -> Self {
        assert!(context_length >= 1, "context length must be positive");
        Self { context_length, document_count: 0, token_count: 0, within_context: 0 }
    }

    pub fn add_document(&mut self, tokens: usize) {
        self.document_count += 1;
        self.token_count += tokens as u64;
        if tokens <= self.context_length {
            self.within_context += 1;
        }
    }

    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>, context_length: usize) -> Self {
        let mut s = Self::new(context_length);
        for n in lengths {
            s.add_document(n);
        }
        s
    }

    /// Fraction of documents within the context; 1.0 for an empty corpus.
    pub fn coverage(&self) -> f64 {
        if self.document_count == 0 {
            1.0
        } else {
            self.within_context as f64 / self.document_count as f64
        }
    }

    pub fn merge(&self, other: &CorpusStats) -> CorpusStats {
        assert_eq!(self.context_length, other.context_length, "stats over different context lengths");
        CorpusStats {
            context_length: self.context_length,
            document_count: self.document_count + other.document_count,
            token_count: self.token_count + other.token_count,
            within_context: self.within_context + other.within_context,
        }
    }
}

pub fn corpus_stats<'a>(docs: impl IntoIterator<Item = &'a Document>, vocab: &BpeVocab, context_length: usize) -> CorpusStats {
    let docs: Vec<&Document> = docs.into_iter().collect();
    let lengths: Vec<usize> = docs.par_iter().map(|d| vocab.encode(&d.text).len()).collect();
    CorpusStats::from_lengths(lengths, context_length)
}
