//! Identifiers shared across subsystems.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Pseudorandom object identifier (OID). Independent of object content;
/// doubles as the bulk-store key of the encrypted payload.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectId(pub [u8; 16]);

impl ObjectId {
    pub const LEN: usize = 16;

    pub fn from_rng(rng: &mut impl rand::Rng) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        ObjectId(b)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn from_slice(s: &[u8]) -> Option<Self> {
        s.try_into().ok().map(ObjectId)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ObjectId({})", hex::encode(self.0))
    }
}

/// Index identifier (IID) published on the ledger so buyers can locate an
/// encrypted index or ciphertext flat file in bulk storage.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexId(pub [u8; 16]);

impl IndexId {
    pub fn from_rng(rng: &mut impl rand::Rng) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        IndexId(b)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Display for IndexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for IndexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexId({})", hex::encode(self.0))
    }
}
