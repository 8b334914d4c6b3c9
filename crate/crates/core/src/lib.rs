//! A desk-scale, end-to-end prototype of a privacy-preserving, accountable
//! and spam-resilient geo-marketplace.
//!
//! Owners advertise geo-tagged objects under searchable encryption, buyers
//! match them with encrypted spatial range queries, and a deterministic
//! in-process ledger enforces accountability (vector commitments) and spam
//! resistance (fees, deposits, rate caps). Two encrypted-search designs are
//! provided: a symmetric scheme with a sub-linear index held by a trusted
//! curator, and an asymmetric hidden-vector-encryption scheme where owners
//! encrypt locations themselves and a trusted authority only issues tokens.

pub mod bench;
pub mod crypto;
pub mod geo;
pub mod group;
pub mod hve;
pub mod ledger;
pub mod market;
pub mod scenario;
pub mod sse;
pub mod store;
pub mod types;
pub mod vc;
