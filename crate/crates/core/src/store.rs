//! Content-addressed key-value store standing in for a DHT-backed bulk
//! storage network. In-process map with optional directory persistence;
//! every read re-verifies the stored content hash.

use crate::crypto;
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("key must not be empty")]
    EmptyKey,
    #[error("key not found")]
    NotFound,
    #[error("stored content failed integrity check")]
    IntegrityFailure,
    #[error("missing chunk {index} of {total}")]
    MissingChunk { index: u64, total: u64 },
    #[error("chunk size must be positive")]
    ZeroChunkSize,
    #[error("i/o failure: {0}")]
    Io(String),
}

struct Stored {
    bytes: Vec<u8>,
    hash: [u8; 32],
}

/// Multi-reader multi-writer store with per-key atomicity.
pub struct BulkStore {
    entries: RwLock<HashMap<Vec<u8>, Stored>>,
    backing_dir: Option<PathBuf>,
}

impl Default for BulkStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl BulkStore {
    pub fn in_memory() -> Self {
        BulkStore {
            entries: RwLock::new(HashMap::new()),
            backing_dir: None,
        }
    }

    /// Store that mirrors every value into `dir`, one hash-named file per
    /// entry.
    pub fn with_directory(dir: PathBuf) -> Result<Self, StoreError> {
        std::fs::create_dir_all(&dir).map_err(|e| StoreError::Io(e.to_string()))?;
        Ok(BulkStore {
            entries: RwLock::new(HashMap::new()),
            backing_dir: Some(dir),
        })
    }

    /// Insert or replace a value; returns its content hash.
    pub fn put(&self, key: &[u8], value: &[u8]) -> Result<[u8; 32], StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        let hash = crypto::sha256(value);
        if let Some(dir) = &self.backing_dir {
            let path = dir.join(hex::encode(hash));
            if !path.exists() {
                std::fs::write(&path, value).map_err(|e| StoreError::Io(e.to_string()))?;
            }
        }
        self.entries.write().unwrap().insert(
            key.to_vec(),
            Stored {
                bytes: value.to_vec(),
                hash,
            },
        );
        Ok(hash)
    }

    pub fn get(&self, key: &[u8]) -> Result<Vec<u8>, StoreError> {
        let entries = self.entries.read().unwrap();
        let stored = entries.get(key).ok_or(StoreError::NotFound)?;
        if crypto::sha256(&stored.bytes) != stored.hash {
            return Err(StoreError::IntegrityFailure);
        }
        Ok(stored.bytes.clone())
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.entries.read().unwrap().contains_key(key)
    }

    pub fn content_hash(&self, key: &[u8]) -> Result<[u8; 32], StoreError> {
        let entries = self.entries.read().unwrap();
        entries
            .get(key)
            .map(|s| s.hash)
            .ok_or(StoreError::NotFound)
    }

    /// Store a large value as `ceil(len / chunk_size)` separately keyed
    /// chunks plus a manifest. Returns the whole-value content hash.
    pub fn put_chunked(
        &self,
        key: &[u8],
        value: &[u8],
        chunk_size: usize,
    ) -> Result<[u8; 32], StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        if chunk_size == 0 {
            return Err(StoreError::ZeroChunkSize);
        }
        let total_hash = crypto::sha256(value);
        let chunks: Vec<&[u8]> = value.chunks(chunk_size).collect();
        let count = chunks.len().max(1) as u64;
        for (i, chunk) in chunks.iter().enumerate() {
            self.put(&chunk_key(key, i as u64), chunk)?;
        }
        if chunks.is_empty() {
            // Zero-length value: a single empty chunk keeps reads uniform.
            self.put(&chunk_key(key, 0), &[])?;
        }
        let mut manifest = Vec::with_capacity(8 + 8 + 32);
        manifest.extend_from_slice(&count.to_be_bytes());
        manifest.extend_from_slice(&(value.len() as u64).to_be_bytes());
        manifest.extend_from_slice(&total_hash);
        self.put(&manifest_key(key), &manifest)?;
        Ok(total_hash)
    }

    pub fn get_chunked(&self, key: &[u8]) -> Result<Vec<u8>, StoreError> {
        let manifest = self.get(&manifest_key(key))?;
        if manifest.len() != 48 {
            return Err(StoreError::IntegrityFailure);
        }
        let count = u64::from_be_bytes(manifest[..8].try_into().unwrap());
        let total_len = u64::from_be_bytes(manifest[8..16].try_into().unwrap());
        let expected_hash: [u8; 32] = manifest[16..].try_into().unwrap();
        let mut out = Vec::with_capacity(total_len as usize);
        for i in 0..count {
            let chunk = self
                .get(&chunk_key(key, i))
                .map_err(|e| match e {
                    StoreError::NotFound => StoreError::MissingChunk { index: i, total: count },
                    other => other,
                })?;
            out.extend_from_slice(&chunk);
        }
        if out.len() as u64 != total_len || crypto::sha256(&out) != expected_hash {
            return Err(StoreError::IntegrityFailure);
        }
        Ok(out)
    }

    /// Chunk count recorded for a chunked value.
    pub fn chunk_count(&self, key: &[u8]) -> Result<u64, StoreError> {
        let manifest = self.get(&manifest_key(key))?;
        if manifest.len() != 48 {
            return Err(StoreError::IntegrityFailure);
        }
        Ok(u64::from_be_bytes(manifest[..8].try_into().unwrap()))
    }

    /// Drop one chunk, for integrity-failure tests.
    #[doc(hidden)]
    pub fn remove_chunk(&self, key: &[u8], index: u64) {
        self.entries.write().unwrap().remove(&chunk_key(key, index));
    }
}

fn chunk_key(key: &[u8], index: u64) -> Vec<u8> {
    let mut k = Vec::with_capacity(key.len() + 9);
    k.extend_from_slice(key);
    k.push(0x00);
    k.extend_from_slice(&index.to_be_bytes());
    k
}

fn manifest_key(key: &[u8]) -> Vec<u8> {
    let mut k = Vec::with_capacity(key.len() + 1);
    k.extend_from_slice(key);
    k.push(0x01);
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_small_and_large() {
        let store = BulkStore::in_memory();
        let h1 = store.put(b"k1", &[42]).unwrap();
        assert_eq!(store.get(b"k1").unwrap(), vec![42]);

        let big = vec![7u8; 10 << 20];
        store.put(b"k2", &big).unwrap();
        assert_eq!(store.get(b"k2").unwrap(), big);

        // Content hash is stable across re-puts of the same bytes.
        let h1_again = store.put(b"k1", &[42]).unwrap();
        assert_eq!(h1, h1_again);
        assert_eq!(store.content_hash(b"k1").unwrap(), h1);
    }

    #[test]
    fn absent_key_and_empty_key() {
        let store = BulkStore::in_memory();
        assert_eq!(store.get(b"nope"), Err(StoreError::NotFound));
        assert_eq!(store.put(b"", &[1]), Err(StoreError::EmptyKey));
    }

    #[test]
    fn chunked_round_trip_matches_whole() {
        let store = BulkStore::in_memory();
        let value: Vec<u8> = (0..100_000u32).map(|i| (i % 251) as u8).collect();
        let h_whole = store.put(b"whole", &value).unwrap();
        let h_chunked = store.put_chunked(b"chunked", &value, 4096).unwrap();
        assert_eq!(h_whole, h_chunked);
        assert_eq!(store.get_chunked(b"chunked").unwrap(), value);
        assert_eq!(
            store.chunk_count(b"chunked").unwrap(),
            (value.len() as u64).div_ceil(4096)
        );

        // Empty value still round-trips.
        store.put_chunked(b"empty", &[], 1024).unwrap();
        assert_eq!(store.get_chunked(b"empty").unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn missing_chunk_is_integrity_error() {
        let store = BulkStore::in_memory();
        let value = vec![9u8; 10_000];
        store.put_chunked(b"v", &value, 1000).unwrap();
        store.remove_chunk(b"v", 3);
        assert_eq!(
            store.get_chunked(b"v"),
            Err(StoreError::MissingChunk { index: 3, total: 10 })
        );
    }

    #[test]
    fn directory_backing_persists_files() {
        let dir = tempfile::tempdir().unwrap();
        let store = BulkStore::with_directory(dir.path().to_path_buf()).unwrap();
        let hash = store.put(b"k", b"payload").unwrap();
        let path = dir.path().join(hex::encode(hash));
        assert!(path.exists());
        assert_eq!(std::fs::read(path).unwrap(), b"payload");
    }
}
