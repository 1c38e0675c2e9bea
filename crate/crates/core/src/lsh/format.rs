//! Binary shard image. All integers little-endian.
//!
//! ```text
//! header   magic[8] version:u32 reserved:u32
//!          k:u32 bands:u32 rows:u32 reserved:u32
//!          seed:u64 shingle_fingerprint:u64 threshold:f64
//!          part_index:u32 part_count:u32 doc_count:u64
//! table    bands x (keys_offset:u64 n_keys:u64)
//!          ids_offset:u64 ids_len:u64
//! keys     per band, ascending: key:u64 ids_start:u64 count:u64
//! ids      per bucket, ascending ids as LEB128 deltas
//! trailer  xxh3_64 of everything before it
//! ```

use std::ops::Deref;
use std::path::Path;

use memmap2::Mmap;

use super::shard::Buckets;
use super::{BandPlan, HasherMeta, LshError, LshIndexShard, PartId};
use crate::corpus::DocId;
use crate::hash::bytes_hash;

pub const SHARD_MAGIC: &[u8; 8] = b"CDLSHIDX";
pub const SHARD_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 72;
const KEY_ENTRY: usize = 24;

pub(super) enum Bytes {
    Owned(Vec<u8>),
    Mapped(Mmap),
}

impl Deref for Bytes {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        match self {
            Bytes::Owned(v) => v,
            Bytes::Mapped(m) => m,
        }
    }
}

pub(super) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LshError + '_ {
    move |source| LshError::Io { path: path.to_path_buf(), source }
}

pub(super) fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub(super) fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub(super) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LshError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub(super) fn map_file(path: &Path) -> Result<Bytes, LshError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let len = file.metadata().map_err(io_err(path))?.len();
    if len == 0 {
        return Ok(Bytes::Owned(Vec::new()));
    }
    // SAFETY: index files are written once via rename and never modified in place.
    let map = unsafe { Mmap::map(&file) }.map_err(io_err(path))?;
    Ok(Bytes::Mapped(map))
}

/// Checks magic, version and trailing checksum; returns the payload length.
pub(super) fn verify_envelope(b: &[u8], magic: &[u8; 8], version: u32) -> Result<usize, LshError> {
    if b.len() < 16 {
        return Err(LshError::ChecksumMismatch);
    }
    if &b[..8] != magic {
        return Err(LshError::BadMagic);
    }
    let found = read_u32(b, 8);
    if found != version {
        return Err(LshError::FormatVersionMismatch { found, expected: version });
    }
    let body = b.len() - 8;
    if read_u64(b, body) != bytes_hash(&b[..body], 0) {
        return Err(LshError::ChecksumMismatch);
    }
    Ok(body)
}

fn put_leb128(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn get_leb128(b: &[u8], pos: &mut usize) -> Option<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *b.get(*pos)?;
        *pos += 1;
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Some(v);
        }
    }
    None
}

pub(super) struct StoredBuckets {
    bytes: Bytes,
    table: Vec<(usize, usize)>,
    ids: std::ops::Range<usize>,
}

impl StoredBuckets {
    fn entry(&self, band: usize, i: usize) -> (u64, u64, u64) {
        let at = self.table[band].0 + i * KEY_ENTRY;
        (read_u64(&self.bytes, at), read_u64(&self.bytes, at + 8), read_u64(&self.bytes, at + 16))
    }

    fn decode_ids(&self, start: u64, count: u64) -> Result<Vec<DocId>, LshError> {
        let blob = &self.bytes[self.ids.clone()];
        let corrupt = || LshError::Corrupt(format!("bucket ids at {start} out of range"));
        let mut pos = usize::try_from(start).map_err(|_| corrupt())?;
        let mut out = Vec::with_capacity(count.min(1 << 16) as usize);
        let mut prev = 0u64;
        for i in 0..count {
            let delta = get_leb128(blob, &mut pos).ok_or_else(corrupt)?;
            prev = if i == 0 { delta } else { prev.checked_add(delta).ok_or_else(corrupt)? };
            out.push(DocId(prev));
        }
        Ok(out)
    }

    pub(super) fn bucket(&self, band: usize, key: u64) -> Result<Vec<DocId>, LshError> {
        let Some(&(_, n)) = self.table.get(band) else { return Ok(Vec::new()) };
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let (k, start, count) = self.entry(band, mid);
            match k.cmp(&key) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.decode_ids(start, count),
            }
        }
        Ok(Vec::new())
    }

    pub(super) fn band_entries(&self, band: usize) -> Result<Vec<(u64, Vec<DocId>)>, LshError> {
        (0..self.table[band].1)
            .map(|i| {
                let (k, start, count) = self.entry(band, i);
                Ok((k, self.decode_ids(start, count)?))
            })
            .collect()
    }
}

impl LshIndexShard {
    pub fn to_bytes(&self) -> Result<Vec<u8>, LshError> {
        let bands = self.plan.bands;
        let mut keys_region = Vec::new();
        let mut ids_blob = Vec::new();
        let mut table = Vec::with_capacity(bands);
        let keys_base = HEADER_LEN + bands * 16 + 16;
        for band in 0..bands {
            let entries = self.band_entries(band)?;
            table.push(((keys_base + keys_region.len()) as u64, entries.len() as u64));
            for (key, ids) in entries {
                keys_region.extend_from_slice(&key.to_le_bytes());
                keys_region.extend_from_slice(&(ids_blob.len() as u64).to_le_bytes());
                keys_region.extend_from_slice(&(ids.len() as u64).to_le_bytes());
                let mut prev = 0;
                for (i, id) in ids.iter().enumerate() {
                    put_leb128(&mut ids_blob, if i == 0 { id.0 } else { id.0 - prev });
                    prev = id.0;
                }
            }
        }

        let mut out = Vec::with_capacity(keys_base + keys_region.len() + ids_blob.len() + 8);
        out.extend_from_slice(SHARD_MAGIC);
        for v in [SHARD_FORMAT_VERSION, 0, self.meta.k, bands as u32, self.plan.rows as u32, 0] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.meta.seed, self.meta.shingle_fingerprint, self.plan.threshold.to_bits()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.part.index.to_le_bytes());
        out.extend_from_slice(&self.part.count.to_le_bytes());
        out.extend_from_slice(&self.doc_count.to_le_bytes());
        for (offset, n) in table {
            out.extend_from_slice(&offset.to_le_bytes());
            out.extend_from_slice(&n.to_le_bytes());
        }
        out.extend_from_slice(&((keys_base + keys_region.len()) as u64).to_le_bytes());
        out.extend_from_slice(&(ids_blob.len() as u64).to_le_bytes());
        out.extend_from_slice(&keys_region);
        out.extend_from_slice(&ids_blob);
        let checksum = bytes_hash(&out, 0);
        out.extend_from_slice(&checksum.to_le_bytes());
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), LshError> {
        write_atomic(path, &self.to_bytes()?)
    }

    /// Memory-maps a saved shard after validating its checksum and layout.
    pub fn load(path: &Path) -> Result<Self, LshError> {
        Self::from_image(map_file(path)?)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, LshError> {
        Self::from_image(Bytes::Owned(bytes))
    }

    fn from_image(bytes: Bytes) -> Result<Self, LshError> {
        let body = verify_envelope(&bytes, SHARD_MAGIC, SHARD_FORMAT_VERSION)?;
        let corrupt = |m: &str| LshError::Corrupt(m.to_string());
        if body < HEADER_LEN {
            return Err(corrupt("header too short"));
        }
        let b = &bytes[..];
        let k = read_u32(b, 16);
        let bands = read_u32(b, 20) as usize;
        let rows = read_u32(b, 24) as usize;
        let meta = HasherMeta { k, seed: read_u64(b, 32), shingle_fingerprint: read_u64(b, 40) };
        let plan = BandPlan { bands, rows, threshold: f64::from_bits(read_u64(b, 48)) };
        if bands == 0 || rows == 0 || bands * rows > k as usize {
            return Err(corrupt("band plan does not fit signature"));
        }
        let part = PartId::new(read_u32(b, 56), read_u32(b, 60)).map_err(|_| corrupt("bad part"))?;
        let doc_count = read_u64(b, 64);

        let table_end = HEADER_LEN + bands * 16 + 16;
        if table_end > body {
            return Err(corrupt("band table truncated"));
        }
        let mut table = Vec::with_capacity(bands);
        for band in 0..bands {
            let at = HEADER_LEN + band * 16;
            let (offset, n) = (read_u64(b, at) as usize, read_u64(b, at + 8) as usize);
            let end = n.checked_mul(KEY_ENTRY).and_then(|len| offset.checked_add(len));
            if offset < table_end || end.is_none_or(|e| e > body) {
                return Err(corrupt("key region out of bounds"));
            }
            table.push((offset, n));
        }
        let ids_offset = read_u64(b, HEADER_LEN + bands * 16) as usize;
        let ids_len = read_u64(b, HEADER_LEN + bands * 16 + 8) as usize;
        if ids_offset.checked_add(ids_len) != Some(body) {
            return Err(corrupt("ids blob out of bounds"));
        }
        Ok(Self {
            plan,
            meta,
            part,
            doc_count,
            buckets: Buckets::Stored(StoredBuckets { bytes, table, ids: ids_offset..ids_offset + ids_len }),
        })
    }
}
