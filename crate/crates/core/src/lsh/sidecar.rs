//! Per-part signature store used to re-score LSH candidates.
//!
//! ```text
//! magic[8] version:u32 k:u32 seed:u64 shingle_fingerprint:u64 n:u64
//! ids      n x u64, ascending
//! mins     n x k x u64, in id order
//! trailer  xxh3_64 of everything before it
//! ```

use std::path::Path;

use super::format::{map_file, read_u32, read_u64, verify_envelope, write_atomic, Bytes};
use super::{HasherMeta, LshError};
use crate::corpus::DocId;
use crate::minhash::MinHashSignature;

const MAGIC: &[u8; 8] = b"CDLSHSIG";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

pub fn write_sidecar(path: &Path, meta: &HasherMeta, entries: &[(DocId, MinHashSignature)]) -> Result<(), LshError> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_unstable_by_key(|&i| entries[i].0);
    if let Some(w) = order.windows(2).find(|w| entries[w[0]].0 == entries[w[1]].0) {
        return Err(LshError::DuplicateId(entries[w[0]].0));
    }
    let k = meta.k as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + entries.len() * (k + 1) * 8 + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&meta.k.to_le_bytes());
    for v in [meta.seed, meta.shingle_fingerprint, entries.len() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &i in &order {
        out.extend_from_slice(&entries[i].0 .0.to_le_bytes());
    }
    for &i in &order {
        let sig = &entries[i].1;
        if sig.k() != k {
            let found = HasherMeta { k: sig.k() as u32, ..*meta };
            return Err(LshError::HasherMismatch { expected: *meta, found });
        }
        for m in sig.mins() {
            out.extend_from_slice(&m.to_le_bytes());
        }
    }
    let checksum = crate::hash::bytes_hash(&out, 0);
    out.extend_from_slice(&checksum.to_le_bytes());
    write_atomic(path, &out)
}

pub struct SignatureSidecar {
    bytes: Bytes,
    meta: HasherMeta,
    len: usize,
}

impl SignatureSidecar {
    pub fn open(path: &Path) -> Result<Self, LshError> {
        let bytes = map_file(path)?;
        let body = verify_envelope(&bytes, MAGIC, VERSION)?;
        if body < HEADER_LEN {
            return Err(LshError::Corrupt("sidecar header too short".into()));
        }
        let meta = HasherMeta { k: read_u32(&bytes, 12), seed: read_u64(&bytes, 16), shingle_fingerprint: read_u64(&bytes, 24) };
        let len = read_u64(&bytes, 32) as usize;
        let expected = (meta.k as usize + 1).checked_mul(8).and_then(|row| row.checked_mul(len)).and_then(|n| n.checked_add(HEADER_LEN));
        if expected != Some(body) {
            return Err(LshError::Corrupt("sidecar length does not match header".into()));
        }
        Ok(Self { bytes, meta, len })
    }

    pub fn meta(&self) -> &HasherMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn id_at(&self, i: usize) -> DocId {
        DocId(read_u64(&self.bytes, HEADER_LEN + i * 8))
    }

    pub fn ids(&self) -> impl Iterator<Item = DocId> + '_ {
        (0..self.len).map(|i| self.id_at(i))
    }

    pub fn get(&self, id: DocId) -> Option<MinHashSignature> {
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.id_at(mid).cmp(&id) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => {
                    let k = self.meta.k as usize;
                    let base = HEADER_LEN + self.len * 8 + mid * k * 8;
                    return Some(MinHashSignature::from_mins((0..k).map(|j| read_u64(&self.bytes, base + j * 8)).collect()));
                }
            }
        }
        None
    }
}
