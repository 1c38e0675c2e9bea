use std::fmt::Write as _;

use rayon::prelude::*;

use super::build::signatures;
use super::check::TestDoc;
use super::{check_threshold, DedupError, VerifyMode};
use crate::corpus::CorpusStore;
use crate::lsh::{build_shard, optimal_bands, BandPlan, HasherMeta, LshIndexShard, PartId};
use crate::minhash::{MinHasher, DEFAULT_PERMUTATIONS, DEFAULT_SEED};
use crate::textprep::{exact_jaccard, shingle, ShingleConfig};

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub k: usize,
    pub seed: u64,
    pub shingle: ShingleConfig,
    /// Generate candidates once with the lowest threshold's band plan and
    /// filter that single candidate set at every threshold. This makes the
    /// match sets nested. When off, each threshold uses its own plan.
    pub shared_candidates: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { k: DEFAULT_PERMUTATIONS, seed: DEFAULT_SEED, shingle: ShingleConfig::default(), shared_candidates: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub thresholds: Vec<f64>,
    /// Test documents with at least one match, per threshold.
    pub counts: Vec<usize>,
    pub verify: VerifyMode,
    /// Band plan that generated candidates for each threshold.
    pub plans: Vec<BandPlan>,
}

impl ThresholdSweep {
    pub fn render(&self) -> String {
        let shared = self.plans.windows(2).all(|w| w[0] == w[1]);
        let mut s = format!("# verify={} candidates={}\n", self.verify, if shared { "shared" } else { "per-threshold" });
        for (t, c) in self.thresholds.iter().zip(&self.counts) {
            writeln!(s, "{t}\t{c}").unwrap();
        }
        s
    }
}

/// Counts, for each threshold, the test documents with at least one corpus
/// document at exact shingle Jaccard ≥ threshold among the LSH candidates.
pub fn threshold_sweep(tests: &[TestDoc], corpus: &CorpusStore, thresholds: &[f64], options: &SweepOptions) -> Result<ThresholdSweep, DedupError> {
    for &t in thresholds {
        check_threshold(t)?;
    }
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DedupError::UnsortedThresholds);
    }
    let hasher = MinHasher::new(options.k, options.seed)?;
    let meta = HasherMeta::new(&hasher, &options.shingle);
    let sigs = signatures(corpus.documents(), &hasher, &options.shingle);
    let build = |plan: BandPlan| -> Result<LshIndexShard, DedupError> { Ok(build_shard(sigs.iter().map(|(id, s)| (*id, s)), plan, meta, PartId::whole())?) };

    let plans: Vec<BandPlan> = if options.shared_candidates {
        vec![optimal_bands(thresholds[0], options.k)?; thresholds.len()]
    } else {
        thresholds.iter().map(|&t| optimal_bands(t, options.k)).collect::<Result<_, _>>()?
    };
    let mut shards: Vec<LshIndexShard> = Vec::new();
    let mut shard_of = Vec::with_capacity(plans.len());
    for plan in &plans {
        match shards.iter().position(|s| s.plan() == plan) {
            Some(i) => shard_of.push(i),
            None => {
                shards.push(build(*plan)?);
                shard_of.push(shards.len() - 1);
            }
        }
    }

    let hits: Vec<Vec<bool>> = tests
        .par_iter()
        .map(|t| {
            let set = shingle(&t.text, &options.shingle);
            let sig = hasher.signature(&set);
            let mut best_per_shard = Vec::with_capacity(shards.len());
            for shard in &shards {
                let mut best = 0.0f64;
                for id in shard.query(&sig)? {
                    let doc = corpus.get(id).ok_or(DedupError::UnknownCandidate(id))?;
                    best = best.max(exact_jaccard(&set, &shingle(&doc.text, &options.shingle)));
                }
                best_per_shard.push(best);
            }
            Ok(thresholds.iter().zip(&shard_of).map(|(&th, &i)| best_per_shard[i] >= th).collect())
        })
        .collect::<Result<_, DedupError>>()?;

    let counts = (0..thresholds.len()).map(|i| hits.iter().filter(|h| h[i]).count()).collect();
    Ok(ThresholdSweep { thresholds: thresholds.to_vec(), counts, verify: VerifyMode::Exact, plans })
}
