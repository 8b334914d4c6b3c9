//! Constant-size vector commitments over an RSA-style group.
//!
//! A commitment binds an ordered batch of (geo-tag, object-id) messages into
//! a single group element whose size depends only on the modulus, never on
//! the batch size. Position `i` can later be opened with a proof that
//! verifies against the commitment alone; binding rests on the hardness of
//! extracting prime-indexed roots modulo the composite. A hidden extra slot
//! carries fresh per-commit randomness so equal message vectors do not
//! produce recognizable commitments.
//!
//! Messages occupy a 64-bit space: the coordinate word packs the cell
//! coordinates (x high, y low), and the committed exponent hashes the word
//! together with the object id under a per-position domain label.

use crate::crypto::{self, CryptoError};
use crate::geo::GridLocation;
use crate::types::ObjectId;
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::rngs::ChaCha20Rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VcError {
    #[error("batch capacity must be at least 1")]
    ZeroCapacity,
    #[error("modulus must be at least 128 bits, got {0}")]
    ModulusTooSmall(u32),
    #[error("batch of {got} messages exceeds capacity {capacity}")]
    CapacityExceeded { got: usize, capacity: usize },
    #[error("position {index} outside committed batch of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Bit length of the committed message space.
const MESSAGE_BITS: u64 = 64;
/// Position primes must strictly exceed any message exponent.
const POSITION_PRIME_BITS: u64 = MESSAGE_BITS + 1;

/// Public parameters: composite modulus, a base of the full group, and one
/// prime plus derived base per position. The last position is reserved for
/// the hiding randomness and not exposed as capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentParams {
    modulus: BigUint,
    base: BigUint,
    primes: Vec<BigUint>,
    bases: Vec<BigUint>,
    capacity: usize,
}

/// The commitment string: one group element, fixed width.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommitmentString(pub Vec<u8>);

/// Opening proof for one position; same width as the commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpeningProof(pub Vec<u8>);

/// One committed message: packed cell coordinates plus the object id the
/// advertisement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMessage {
    pub coord_word: u64,
    pub object_id: ObjectId,
}

/// Committer-held state needed to open positions later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitAux {
    pub messages: Vec<CommitMessage>,
    hiding: u64,
}

impl CommitmentParams {
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn modulus_bytes(&self) -> usize {
        self.modulus.bits().div_ceil(8) as usize
    }

    /// Digest published on the ledger; disputes check submitted parameters
    /// against it.
    pub fn digest(&self) -> [u8; 32] {
        let parts: Vec<Vec<u8>> = std::iter::once(self.modulus.to_bytes_be())
            .chain(std::iter::once(self.base.to_bytes_be()))
            .chain(self.primes.iter().map(|p| p.to_bytes_be()))
            .collect();
        let refs: Vec<&[u8]> = parts.iter().map(|v| v.as_slice()).collect();
        crypto::sha256_parts(&refs)
    }
}

/// Exponent committed at `position` for a message: a 64-bit hash of the
/// coordinate word and object id under a position label.
fn message_exponent(position: usize, msg: &CommitMessage) -> BigUint {
    let mut data = Vec::with_capacity(8 + 16);
    data.extend_from_slice(&msg.coord_word.to_be_bytes());
    data.extend_from_slice(msg.object_id.as_bytes());
    crypto::hash_to_int(
        &format!("vc/msg/{position}"),
        &data,
        &(BigUint::one() << MESSAGE_BITS),
    )
}

fn hiding_exponent(value: u64) -> BigUint {
    BigUint::from(value)
}

/// Generate parameters for batches of up to `q` messages under a
/// `security_bits` modulus. Deterministic for a fixed seed.
pub fn vc_keygen(security_bits: u32, q: usize, seed: &[u8]) -> Result<CommitmentParams, VcError> {
    if q == 0 {
        return Err(VcError::ZeroCapacity);
    }
    if security_bits < 128 {
        return Err(VcError::ModulusTooSmall(security_bits));
    }
    let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"vc-keygen", seed]));
    let half = (security_bits / 2) as u64;
    let p1 = crypto::gen_prime(half, &mut rng)?;
    let p2 = loop {
        let c = crypto::gen_prime(half, &mut rng)?;
        if c != p1 {
            break c;
        }
    };
    let modulus = &p1 * &p2;
    let base = loop {
        let a = crypto::random_below(&mut rng, &modulus);
        if a > BigUint::one() && a.gcd(&modulus).is_one() {
            break a;
        }
    };
    // One prime per message slot plus the hiding slot; all distinct and
    // larger than the 64-bit message space.
    let slots = q + 1;
    let mut primes: Vec<BigUint> = Vec::with_capacity(slots);
    while primes.len() < slots {
        let e = crypto::gen_prime(POSITION_PRIME_BITS, &mut rng)?;
        if !primes.contains(&e) {
            primes.push(e);
        }
    }
    // S_i = base^(prod of all other primes).
    let bases = (0..slots)
        .map(|i| {
            let mut exp = BigUint::one();
            for (j, e) in primes.iter().enumerate() {
                if j != i {
                    exp *= e;
                }
            }
            base.modpow(&exp, &modulus)
        })
        .collect();
    Ok(CommitmentParams {
        modulus,
        base,
        primes,
        bases,
        capacity: q,
    })
}

/// Commit to an ordered batch. The commitment width equals the modulus
/// width regardless of the batch size.
pub fn vc_commit(
    pp: &CommitmentParams,
    messages: &[CommitMessage],
    rng: &mut ChaCha20Rng,
) -> Result<(CommitmentString, CommitAux), VcError> {
    if messages.len() > pp.capacity {
        return Err(VcError::CapacityExceeded {
            got: messages.len(),
            capacity: pp.capacity,
        });
    }
    let mut hiding_bytes = [0u8; 8];
    rng.fill_bytes(&mut hiding_bytes);
    let hiding = u64::from_be_bytes(hiding_bytes);

    let mut acc = BigUint::one();
    for (i, msg) in messages.iter().enumerate() {
        acc = acc * pp.bases[i].modpow(&message_exponent(i, msg), &pp.modulus) % &pp.modulus;
    }
    let hiding_base = &pp.bases[pp.capacity];
    acc = acc * hiding_base.modpow(&hiding_exponent(hiding), &pp.modulus) % &pp.modulus;

    Ok((
        CommitmentString(crypto::to_fixed_be(&acc, pp.modulus_bytes())),
        CommitAux {
            messages: messages.to_vec(),
            hiding,
        },
    ))
}

/// Produce a proof that `aux.messages[index]` is the index-th committed
/// message.
pub fn vc_open(
    pp: &CommitmentParams,
    aux: &CommitAux,
    index: usize,
) -> Result<OpeningProof, VcError> {
    if index >= aux.messages.len() {
        return Err(VcError::IndexOutOfRange {
            index,
            len: aux.messages.len(),
        });
    }
    // P_i = prod over other slots j of base^(prod of primes except e_i and
    // e_j, times the slot-j exponent).
    let mut acc = BigUint::one();
    let slots = pp.capacity + 1;
    for j in 0..slots {
        if j == index {
            continue;
        }
        let exponent = if j < aux.messages.len() {
            message_exponent(j, &aux.messages[j])
        } else if j == pp.capacity {
            hiding_exponent(aux.hiding)
        } else {
            continue; // position never committed
        };
        let mut prime_prod = BigUint::one();
        for (k, e) in pp.primes.iter().enumerate() {
            if k != index && k != j {
                prime_prod *= e;
            }
        }
        let cross_base = pp.base.modpow(&prime_prod, &pp.modulus);
        acc = acc * cross_base.modpow(&exponent, &pp.modulus) % &pp.modulus;
    }
    Ok(OpeningProof(crypto::to_fixed_be(&acc, pp.modulus_bytes())))
}

/// Check a positional opening against the commitment.
pub fn vc_verify(
    pp: &CommitmentParams,
    cc: &CommitmentString,
    message: &CommitMessage,
    index: usize,
    proof: &OpeningProof,
) -> bool {
    if index >= pp.capacity {
        return false;
    }
    if cc.0.len() != pp.modulus_bytes() || proof.0.len() != pp.modulus_bytes() {
        return false;
    }
    let cc_val = BigUint::from_bytes_be(&cc.0);
    let proof_val = BigUint::from_bytes_be(&proof.0);
    if cc_val >= pp.modulus || proof_val >= pp.modulus {
        return false;
    }
    let lhs = cc_val;
    let rhs = proof_val.modpow(&pp.primes[index], &pp.modulus)
        * pp.bases[index].modpow(&message_exponent(index, message), &pp.modulus)
        % &pp.modulus;
    lhs == rhs
}

/// Pack a grid cell and object id into a commitment message: x in the high
/// 32 bits of the coordinate word, y in the low 32.
pub fn encode_location_message(loc: GridLocation, object_id: ObjectId) -> CommitMessage {
    CommitMessage {
        coord_word: ((loc.x as u64) << 32) | loc.y as u64,
        object_id,
    }
}

/// Recover the cell from a commitment message's coordinate word.
pub fn decode_location(msg: &CommitMessage) -> GridLocation {
    GridLocation::new((msg.coord_word >> 32) as u32, (msg.coord_word & 0xffff_ffff) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::seeded_rng;
    use rand::RngExt;

    fn test_params(q: usize) -> CommitmentParams {
        vc_keygen(256, q, b"vc-tests").unwrap()
    }

    fn oid(n: u64) -> ObjectId {
        let mut b = [0u8; 16];
        b[..8].copy_from_slice(&n.to_be_bytes());
        ObjectId(b)
    }

    fn msg(x: u32, y: u32, id: u64) -> CommitMessage {
        encode_location_message(GridLocation::new(x, y), oid(id))
    }

    #[test]
    fn keygen_shapes() {
        let pp1 = vc_keygen(256, 1, b"a").unwrap();
        assert_eq!(pp1.capacity(), 1);
        assert_eq!(pp1.primes.len(), 2);
        assert_eq!(pp1.bases.len(), 2);

        let pp20 = vc_keygen(256, 20, b"a").unwrap();
        assert_eq!(pp20.capacity(), 20);
        assert_eq!(pp20.primes.len(), 21);

        // Deterministic under seed.
        let again = vc_keygen(256, 20, b"a").unwrap();
        assert_eq!(pp20, again);
        assert_ne!(pp20, vc_keygen(256, 20, b"b").unwrap());

        assert!(matches!(vc_keygen(256, 0, b"a"), Err(VcError::ZeroCapacity)));
        assert!(matches!(
            vc_keygen(64, 1, b"a"),
            Err(VcError::ModulusTooSmall(64))
        ));
    }

    #[test]
    fn commitment_size_independent_of_batch() {
        let pp = test_params(20);
        let mut rng = seeded_rng(b"size");
        let single = vc_commit(&pp, &[msg(1, 2, 1)], &mut rng).unwrap().0;
        let batch: Vec<CommitMessage> = (0..20).map(|i| msg(i, i + 1, i as u64)).collect();
        let full = vc_commit(&pp, &batch, &mut rng).unwrap().0;
        assert_eq!(single.0.len(), pp.modulus_bytes());
        assert_eq!(single.0.len(), full.0.len());

        let too_many: Vec<CommitMessage> = (0..21).map(|i| msg(i, i, i as u64)).collect();
        assert!(matches!(
            vc_commit(&pp, &too_many, &mut rng),
            Err(VcError::CapacityExceeded { got: 21, capacity: 20 })
        ));
    }

    #[test]
    fn commit_deterministic_given_randomness_seed() {
        let pp = test_params(4);
        let batch = [msg(5, 6, 7), msg(8, 9, 10)];
        let (a, _) = vc_commit(&pp, &batch, &mut seeded_rng(b"r1")).unwrap();
        let (b, _) = vc_commit(&pp, &batch, &mut seeded_rng(b"r1")).unwrap();
        let (c, _) = vc_commit(&pp, &batch, &mut seeded_rng(b"r2")).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn open_verify_round_trip() {
        let pp = test_params(5);
        let mut rng = seeded_rng(b"ov");
        let batch: Vec<CommitMessage> = (0..5).map(|i| msg(i, 31 - i, 100 + i as u64)).collect();
        let (cc, aux) = vc_commit(&pp, &batch, &mut rng).unwrap();
        for (i, m) in batch.iter().enumerate() {
            let proof = vc_open(&pp, &aux, i).unwrap();
            assert!(vc_verify(&pp, &cc, m, i, &proof));
            // Wrong index.
            let wrong_i = (i + 1) % batch.len();
            assert!(!vc_verify(&pp, &cc, m, wrong_i, &proof));
            // Wrong message.
            let tampered = msg(99, 99, 999);
            assert!(!vc_verify(&pp, &cc, &tampered, i, &proof));
        }
        assert!(matches!(
            vc_open(&pp, &aux, 5),
            Err(VcError::IndexOutOfRange { index: 5, len: 5 })
        ));
    }

    #[test]
    fn partial_batches_open_correctly() {
        // Batch smaller than capacity: unused slots contribute nothing.
        let pp = test_params(8);
        let mut rng = seeded_rng(b"part");
        let batch = [msg(1, 1, 1), msg(2, 2, 2), msg(3, 3, 3)];
        let (cc, aux) = vc_commit(&pp, &batch, &mut rng).unwrap();
        for (i, m) in batch.iter().enumerate() {
            let proof = vc_open(&pp, &aux, i).unwrap();
            assert!(vc_verify(&pp, &cc, m, i, &proof));
        }
    }

    #[test]
    fn cross_params_proofs_rejected() {
        let pp_a = test_params(3);
        let pp_b = vc_keygen(256, 3, b"other").unwrap();
        let mut rng = seeded_rng(b"cross");
        let batch = [msg(1, 2, 3)];
        let (cc_a, aux_a) = vc_commit(&pp_a, &batch, &mut rng).unwrap();
        let proof_a = vc_open(&pp_a, &aux_a, 0).unwrap();
        assert!(vc_verify(&pp_a, &cc_a, &batch[0], 0, &proof_a));
        assert!(!vc_verify(&pp_b, &cc_a, &batch[0], 0, &proof_a));
    }

    #[test]
    fn distinct_vectors_distinct_commitments() {
        let pp = test_params(3);
        let mut rng = seeded_rng(b"collide");
        let mut seen = std::collections::HashSet::new();
        for trial in 0..10_000u64 {
            let batch = [msg(
                rng.random_range(0..1024),
                rng.random_range(0..1024),
                trial,
            )];
            let (cc, _) = vc_commit(&pp, &batch, &mut rng).unwrap();
            assert!(seen.insert(cc.0), "collision at trial {trial}");
        }
    }

    #[test]
    fn distinct_oids_same_cell_distinct_exponents() {
        let a = msg(3, 4, 1);
        let b = msg(3, 4, 2);
        assert_eq!(a.coord_word, b.coord_word);
        assert_ne!(message_exponent(0, &a), message_exponent(0, &b));
    }

    #[test]
    fn coordinate_word_examples() {
        assert_eq!(msg(0, 0, 1).coord_word, 0);
        assert_eq!(msg(3, 4, 1).coord_word, 3 * (1u64 << 32) + 4);
        let m = msg(3, 4, 1);
        assert_eq!(decode_location(&m), GridLocation::new(3, 4));
    }

    #[test]
    fn forged_proofs_rejected() {
        let pp = test_params(2);
        let mut rng = seeded_rng(b"forge");
        let batch = [msg(7, 7, 7), msg(8, 8, 8)];
        let (cc, _) = vc_commit(&pp, &batch, &mut rng).unwrap();
        let width = pp.modulus_bytes();
        for _ in 0..2_000 {
            let mut bytes = vec![0u8; width];
            rng.fill_bytes(&mut bytes);
            let forged = OpeningProof(bytes);
            assert!(!vc_verify(&pp, &cc, &batch[0], 0, &forged));
        }
    }

    /// Two-sample chi-square over the leading commitment byte for two fixed
    /// message vectors under fresh hiding randomness.
    #[test]
    fn hiding_smoke_distributions_overlap() {
        let pp = test_params(2);
        let mut rng = seeded_rng(b"hide");
        let vec_a = [msg(1, 1, 1), msg(2, 2, 2)];
        let vec_b = [msg(30, 30, 30), msg(31, 31, 31)];
        let mut ha = [0f64; 16];
        let mut hb = [0f64; 16];
        for _ in 0..400 {
            let (ca, _) = vc_commit(&pp, &vec_a, &mut rng).unwrap();
            let (cb, _) = vc_commit(&pp, &vec_b, &mut rng).unwrap();
            ha[(ca.0[0] >> 4) as usize] += 1.0;
            hb[(cb.0[0] >> 4) as usize] += 1.0;
        }
        let mut stat = 0f64;
        for i in 0..16 {
            let total = ha[i] + hb[i];
            if total == 0.0 {
                continue;
            }
            let diff = ha[i] - hb[i];
            stat += diff * diff / total;
        }
        // df = 15; 37.7 is the ~0.999 quantile. Seeded, so frozen.
        assert!(stat < 37.7, "chi-square statistic {stat}");

        // And fresh randomness makes repeat commits of one vector differ.
        let (c1, _) = vc_commit(&pp, &vec_a, &mut rng).unwrap();
        let (c2, _) = vc_commit(&pp, &vec_a, &mut rng).unwrap();
        assert_ne!(c1, c2);
    }
}
