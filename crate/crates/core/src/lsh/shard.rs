use std::collections::{BTreeSet, HashMap, HashSet};

use super::format::StoredBuckets;
use super::{BandPlan, HasherMeta, LshError, PartId};
use crate::corpus::DocId;
use crate::hash::bytes_hash;
use crate::minhash::MinHashSignature;

pub type CandidateSet = BTreeSet<DocId>;

/// Bucket key of one band: a digest of the band index followed by the band's
/// slot values, all little-endian `u64`.
pub fn band_key(band: usize, slots: &[u64]) -> u64 {
    let mut buf = [0u8; 8 * 257];
    let len = 8 * (slots.len() + 1);
    buf[..8].copy_from_slice(&(band as u64).to_le_bytes());
    for (i, s) in slots.iter().enumerate() {
        buf[8 * (i + 1)..8 * (i + 2)].copy_from_slice(&s.to_le_bytes());
    }
    bytes_hash(&buf[..len], 0)
}

fn validate_plan(plan: &BandPlan, k: u32) -> Result<(), LshError> {
    if plan.bands == 0 || plan.rows == 0 || plan.slots() > k as usize || plan.rows > 256 {
        return Err(LshError::PlanExceedsK { bands: plan.bands, rows: plan.rows, k: k as usize });
    }
    Ok(())
}

pub(super) enum Buckets {
    Memory(Vec<HashMap<u64, Vec<DocId>>>),
    Stored(StoredBuckets),
}

/// One part of a banded index: for every band, bucket key → document ids.
pub struct LshIndexShard {
    pub(super) plan: BandPlan,
    pub(super) meta: HasherMeta,
    pub(super) part: PartId,
    pub(super) doc_count: u64,
    pub(super) buckets: Buckets,
}

impl std::fmt::Debug for LshIndexShard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LshIndexShard")
            .field("plan", &self.plan)
            .field("meta", &self.meta)
            .field("part", &self.part)
            .field("doc_count", &self.doc_count)
            .field("mapped", &self.is_stored())
            .finish()
    }
}

impl LshIndexShard {
    pub fn plan(&self) -> &BandPlan {
        &self.plan
    }

    pub fn meta(&self) -> &HasherMeta {
        &self.meta
    }

    pub fn part(&self) -> PartId {
        self.part
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    /// True when buckets are read from a serialized image rather than built in memory.
    pub fn is_stored(&self) -> bool {
        matches!(self.buckets, Buckets::Stored(_))
    }

    pub fn ensure_compatible(&self, found: &HasherMeta) -> Result<(), LshError> {
        if *found != self.meta {
            return Err(LshError::HasherMismatch { expected: self.meta, found: *found });
        }
        Ok(())
    }

    pub fn bucket(&self, band: usize, key: u64) -> Result<Vec<DocId>, LshError> {
        match &self.buckets {
            Buckets::Memory(maps) => Ok(maps.get(band).and_then(|m| m.get(&key)).cloned().unwrap_or_default()),
            Buckets::Stored(stored) => stored.bucket(band, key),
        }
    }

    /// All buckets of a band, ordered by key.
    pub fn band_entries(&self, band: usize) -> Result<Vec<(u64, Vec<DocId>)>, LshError> {
        match &self.buckets {
            Buckets::Memory(maps) => {
                let mut out: Vec<(u64, Vec<DocId>)> = maps[band].iter().map(|(k, v)| (*k, v.clone())).collect();
                out.sort_unstable_by_key(|e| e.0);
                Ok(out)
            }
            Buckets::Stored(stored) => stored.band_entries(band),
        }
    }

    /// Documents sharing at least one bucket with `sig`.
    pub fn query(&self, sig: &MinHashSignature) -> Result<CandidateSet, LshError> {
        if sig.k() != self.meta.k as usize {
            let found = HasherMeta { k: sig.k() as u32, ..self.meta };
            return Err(LshError::HasherMismatch { expected: self.meta, found });
        }
        let mut out = CandidateSet::new();
        if sig.is_sentinel() {
            return Ok(out);
        }
        let rows = self.plan.rows;
        for band in 0..self.plan.bands {
            let key = band_key(band, &sig.mins()[band * rows..(band + 1) * rows]);
            out.extend(self.bucket(band, key)?);
        }
        Ok(out)
    }
}

pub struct ShardBuilder {
    plan: BandPlan,
    meta: HasherMeta,
    part: PartId,
    bands: Vec<HashMap<u64, Vec<DocId>>>,
    seen: HashSet<DocId>,
}

impl ShardBuilder {
    pub fn new(plan: BandPlan, meta: HasherMeta, part: PartId) -> Result<Self, LshError> {
        validate_plan(&plan, meta.k)?;
        Ok(Self { plan, meta, part, bands: vec![HashMap::new(); plan.bands], seen: HashSet::new() })
    }

    /// Adds a document. Empty-set signatures are counted but never bucketed.
    pub fn insert(&mut self, id: DocId, sig: &MinHashSignature) -> Result<(), LshError> {
        if sig.k() != self.meta.k as usize {
            let found = HasherMeta { k: sig.k() as u32, ..self.meta };
            return Err(LshError::HasherMismatch { expected: self.meta, found });
        }
        if !self.seen.insert(id) {
            return Err(LshError::DuplicateId(id));
        }
        if sig.is_sentinel() {
            return Ok(());
        }
        let rows = self.plan.rows;
        for (band, map) in self.bands.iter_mut().enumerate() {
            let key = band_key(band, &sig.mins()[band * rows..(band + 1) * rows]);
            map.entry(key).or_default().push(id);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn finish(mut self) -> LshIndexShard {
        for map in &mut self.bands {
            for ids in map.values_mut() {
                ids.sort_unstable();
            }
        }
        LshIndexShard {
            plan: self.plan,
            meta: self.meta,
            part: self.part,
            doc_count: self.seen.len() as u64,
            buckets: Buckets::Memory(self.bands),
        }
    }
}

pub fn build_shard<'a>(
    docs: impl IntoIterator<Item = (DocId, &'a MinHashSignature)>,
    plan: BandPlan,
    meta: HasherMeta,
    part: PartId,
) -> Result<LshIndexShard, LshError> {
    let mut builder = ShardBuilder::new(plan, meta, part)?;
    for (id, sig) in docs {
        builder.insert(id, sig)?;
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minhash::MinHasher;
    use crate::textprep::ShingleSet;

    fn meta(k: u32) -> HasherMeta {
        HasherMeta { k, seed: 1, shingle_fingerprint: 0 }
    }

    fn plan(bands: usize, rows: usize) -> BandPlan {
        BandPlan { bands, rows, threshold: 0.5 }
    }

    #[test]
    fn identical_signature_is_always_a_candidate() {
        let h = MinHasher::new(16, 1).unwrap();
        let sig = h.signature(&ShingleSet::from_hashes(vec![1, 2, 3]));
        let shard = build_shard([(DocId(7), &sig)], plan(4, 4), meta(16), PartId::whole()).unwrap();
        assert_eq!(shard.query(&sig).unwrap(), CandidateSet::from([DocId(7)]));
    }

    #[test]
    fn duplicate_id_rejected() {
        let sig = MinHashSignature::from_mins(vec![1; 4]);
        let err = build_shard([(DocId(1), &sig), (DocId(1), &sig)], plan(2, 2), meta(4), PartId::whole()).unwrap_err();
        assert!(matches!(err, LshError::DuplicateId(DocId(1))));
    }

    #[test]
    fn k_mismatch_is_hasher_mismatch() {
        let sig = MinHashSignature::from_mins(vec![1; 4]);
        let shard = build_shard([(DocId(1), &sig)], plan(2, 2), meta(4), PartId::whole()).unwrap();
        let other = MinHashSignature::from_mins(vec![1; 8]);
        assert!(matches!(shard.query(&other), Err(LshError::HasherMismatch { .. })));
    }

    #[test]
    fn plan_must_fit() {
        assert!(matches!(ShardBuilder::new(plan(3, 3), meta(8), PartId::whole()), Err(LshError::PlanExceedsK { .. })));
    }

    #[test]
    fn sentinel_never_bucketed() {
        let empty = MinHashSignature::sentinel(4);
        let shard = build_shard([(DocId(1), &empty)], plan(2, 2), meta(4), PartId::whole()).unwrap();
        assert_eq!(shard.doc_count(), 1);
        assert!(shard.query(&empty).unwrap().is_empty());
        assert!(shard.band_entries(0).unwrap().is_empty());
    }

    #[test]
    fn single_band_match_suffices() {
        let a = MinHashSignature::from_mins(vec![1, 2, 3, 4]);
        let b = MinHashSignature::from_mins(vec![9, 9, 3, 4]);
        let shard = build_shard([(DocId(1), &a)], plan(2, 2), meta(4), PartId::whole()).unwrap();
        assert_eq!(shard.query(&b).unwrap().len(), 1);
        let c = MinHashSignature::from_mins(vec![1, 9, 3, 9]);
        assert!(shard.query(&c).unwrap().is_empty());
    }

    #[test]
    fn band_index_is_part_of_key() {
        assert_ne!(band_key(0, &[5, 6]), band_key(1, &[5, 6]));
    }
}
