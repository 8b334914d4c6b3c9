//! Hidden vector encryption over a composite-order bilinear group, plus the
//! per-level spatial matching built on it.
//!
//! Setup produces a key pair whose public half blinds every source-group
//! element with fresh order-q randomizers. A ciphertext encrypts a sentinel
//! target-group element under an attribute vector; a token embeds a pattern
//! vector (scalars or wildcards). Matching recovers the sentinel exactly
//! when attribute and pattern agree on all non-wildcard positions, and a
//! pseudorandom target-group element otherwise.
//!
//! For spatial use the attribute width is one: an object is encrypted once
//! per domain-tree level with the level's scalar, and a query token carries
//! both the scalar and the level, so matching evaluates a single ciphertext
//! (the `SingleLevel` variation). Every match costs `1 + 2 * |J|` pairings,
//! which is 3 for the one-slot spatial tokens.

use crate::geo::{self, DomainParams, GeoError, GridLocation, SpatialRange};
use crate::group::{BilinearGroup, GroupElem, GroupError, GtElem};
use crate::types::ObjectId;
use num_bigint::BigUint;
use rand::rngs::ChaCha20Rng;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HveError {
    #[error("attribute width mismatch: key has {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("attribute {attr} outside the attribute space bound {bound}")]
    AttributeOutOfRange { attr: u64, bound: u64 },
    #[error("ciphertext and token come from different group parameters")]
    GroupMismatch,
    #[error("key width must be at least 1")]
    ZeroWidth,
    #[error("domain scalars (bound {scalar_bound}) exceed the group attribute space")]
    DomainTooLarge { scalar_bound: u64 },
    #[error("malformed container: {0}")]
    MalformedContainer(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

const FILE_MAGIC: &[u8; 4] = b"GMHF";
const FILE_VERSION: u16 = 1;
const TOKEN_MAGIC: &[u8; 4] = b"GMHT";

struct SkSlot {
    u: GroupElem,
    h: GroupElem,
    w: GroupElem,
}

/// Secret key: order-p basis elements and the master exponent.
pub struct HveSecretKey {
    group: BilinearGroup,
    a: BigUint,
    g: GroupElem,
    v: GroupElem,
    slots: Vec<SkSlot>,
}

#[derive(Debug, Clone)]
struct PkSlot {
    u: GroupElem,
    h: GroupElem,
    w: GroupElem,
}

/// Public key: the secret basis blinded by fresh order-q randomizers, the
/// pairing constant `A = e(g, v)^a`, and the public match sentinel derived
/// from the key material.
#[derive(Debug, Clone)]
pub struct HvePublicKey {
    group_digest: [u8; 32],
    gq: GroupElem,
    v_blind: GroupElem,
    a_pair: GtElem,
    slots: Vec<PkSlot>,
    sentinel: GtElem,
}

impl HvePublicKey {
    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn sentinel(&self) -> &GtElem {
        &self.sentinel
    }

    /// Element count of the public key: g_q and V, three blinded elements
    /// per slot, plus the pairing constant A.
    pub fn element_count(&self) -> usize {
        2 + 3 * self.slots.len() + 1
    }
}

impl HveSecretKey {
    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn group(&self) -> &BilinearGroup {
        &self.group
    }
}

/// One pattern position: an exact scalar or a wildcard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternEntry {
    Scalar(u64),
    Wildcard,
}

/// Ciphertext for one attribute vector at one domain-tree level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HveCiphertext {
    pub level: u8,
    group_digest: [u8; 32],
    c_prime: GtElem,
    c0: GroupElem,
    slots: Vec<(GroupElem, GroupElem)>,
}

impl HveCiphertext {
    /// 2 + 2l group elements (C', C0 and two per slot).
    pub fn element_count(&self) -> usize {
        2 + 2 * self.slots.len()
    }
}

/// Search token embedding a pattern vector and the tree level it targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HveToken {
    pub level: u8,
    group_digest: [u8; 32],
    pattern: Vec<PatternEntry>,
    k0: GroupElem,
    slots: Vec<Option<(GroupElem, GroupElem)>>,
    sentinel: GtElem,
}

/// All per-level ciphertexts of one advertised object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectCipherBundle {
    pub object_id: ObjectId,
    pub ciphertexts: Vec<HveCiphertext>,
}

impl ObjectCipherBundle {
    pub fn levels(&self) -> impl Iterator<Item = u8> + '_ {
        self.ciphertexts.iter().map(|c| c.level)
    }
}

/// Generate an HVE key pair of attribute width `l`.
pub fn hve_setup(
    group: &BilinearGroup,
    width: usize,
    rng: &mut ChaCha20Rng,
) -> Result<(HveSecretKey, HvePublicKey), HveError> {
    if width == 0 {
        return Err(HveError::ZeroWidth);
    }
    let a = group.random_scalar_p(rng);
    let g = group.random_gp(rng);
    let v = group.random_gp(rng);
    let gq = group.random_gq(rng);
    let mut sk_slots = Vec::with_capacity(width);
    let mut pk_slots = Vec::with_capacity(width);
    for _ in 0..width {
        let slot = SkSlot {
            u: group.random_gp(rng),
            h: group.random_gp(rng),
            w: group.random_gp(rng),
        };
        pk_slots.push(PkSlot {
            u: group.mul(&slot.u, &group.random_gq(rng)),
            h: group.mul(&slot.h, &group.random_gq(rng)),
            w: group.mul(&slot.w, &group.random_gq(rng)),
        });
        sk_slots.push(slot);
    }
    let v_blind = group.mul(&v, &group.random_gq(rng));
    let a_pair = group.gt_pow(&group.pair(&g, &v), &a);

    // Public match sentinel, bound to the key material.
    let mut pk_bytes = Vec::new();
    pk_bytes.extend_from_slice(&group.elem_to_bytes(&gq));
    pk_bytes.extend_from_slice(&group.elem_to_bytes(&v_blind));
    pk_bytes.extend_from_slice(&group.gt_to_bytes(&a_pair));
    for s in &pk_slots {
        for e in [&s.u, &s.h, &s.w] {
            pk_bytes.extend_from_slice(&group.elem_to_bytes(e));
        }
    }
    let sentinel = group.hash_to_gt("hve/sentinel", &pk_bytes);

    Ok((
        HveSecretKey {
            group: group.clone(),
            a,
            g,
            v,
            slots: sk_slots,
        },
        HvePublicKey {
            group_digest: group.digest(),
            gq,
            v_blind,
            a_pair,
            slots: pk_slots,
            sentinel,
        },
    ))
}

/// Largest attribute value the group can hold; attributes live in `Z_m`
/// with `m` below both prime factors.
pub fn attribute_bound(group: &BilinearGroup) -> u64 {
    let m = group.subgroup_order_p().min(group.subgroup_order_q());
    u64::try_from(m - 1u32).unwrap_or(u64::MAX)
}

/// Encrypt the public sentinel under an attribute vector. Fresh exponent
/// and blinders per call: two encryptions of the same attribute differ.
pub fn hve_encrypt(
    pk: &HvePublicKey,
    group: &BilinearGroup,
    attrs: &[u64],
    level: u8,
    rng: &mut ChaCha20Rng,
) -> Result<HveCiphertext, HveError> {
    if pk.group_digest != group.digest() {
        return Err(HveError::GroupMismatch);
    }
    if attrs.len() != pk.slots.len() {
        return Err(HveError::WidthMismatch {
            expected: pk.slots.len(),
            got: attrs.len(),
        });
    }
    let bound = attribute_bound(group);
    for &attr in attrs {
        if attr > bound {
            return Err(HveError::AttributeOutOfRange { attr, bound });
        }
    }
    let s = group.random_scalar(rng);
    // Blinders are sampled through the published g_q: encryption only
    // needs the public key.
    let mut blinder = || group.pow(&pk.gq, &group.random_scalar(rng));
    let c_prime = group.gt_mul(&pk.sentinel, &group.gt_pow(&pk.a_pair, &s));
    let c0 = group.mul(&group.pow(&pk.v_blind, &s), &blinder());
    let mut slots = Vec::with_capacity(attrs.len());
    for (slot, &attr) in pk.slots.iter().zip(attrs) {
        let u_pow = group.pow(&slot.u, &BigUint::from(attr));
        let base = group.mul(&u_pow, &slot.h);
        let c1 = group.mul(&group.pow(&base, &s), &blinder());
        let c2 = group.mul(&group.pow(&slot.w, &s), &blinder());
        slots.push((c1, c2));
    }
    Ok(HveCiphertext {
        level,
        group_digest: pk.group_digest,
        c_prime,
        c0,
        slots,
    })
}

/// Issue a token for a pattern vector. Exponents are sampled fresh per
/// call, so tokens for the same pattern are unlinkable byte-wise.
pub fn hve_token(
    sk: &HveSecretKey,
    pattern: &[PatternEntry],
    level: u8,
    sentinel: &GtElem,
    rng: &mut ChaCha20Rng,
) -> Result<HveToken, HveError> {
    if pattern.len() != sk.slots.len() {
        return Err(HveError::WidthMismatch {
            expected: sk.slots.len(),
            got: pattern.len(),
        });
    }
    let group = &sk.group;
    let mut k0 = group.pow(&sk.g, &sk.a);
    let mut slots = Vec::with_capacity(pattern.len());
    for (slot, entry) in sk.slots.iter().zip(pattern) {
        match entry {
            PatternEntry::Wildcard => slots.push(None),
            PatternEntry::Scalar(value) => {
                let r1 = group.random_scalar_p(rng);
                let r2 = group.random_scalar_p(rng);
                let base = group.mul(&group.pow(&slot.u, &BigUint::from(*value)), &slot.h);
                k0 = group.mul(&k0, &group.pow(&base, &r1));
                k0 = group.mul(&k0, &group.pow(&slot.w, &r2));
                slots.push(Some((group.pow(&sk.v, &r1), group.pow(&sk.v, &r2))));
            }
        }
    }
    Ok(HveToken {
        level,
        group_digest: group.digest(),
        pattern: pattern.to_vec(),
        k0,
        slots,
        sentinel: sentinel.clone(),
    })
}

/// Result of one predicate evaluation, with the pairing work it consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    pub matched: bool,
    pub pairings: u32,
}

/// Recover the candidate message of the query equation:
/// `C' * prod_J e(C_i1, K_i1) e(C_i2, K_i2) / e(C0, K0)`.
pub fn recover_message(
    group: &BilinearGroup,
    c: &HveCiphertext,
    tk: &HveToken,
) -> Result<(GtElem, u32), HveError> {
    if c.group_digest != tk.group_digest
        || c.group_digest != group.digest()
        || c.slots.len() != tk.slots.len()
    {
        return Err(HveError::GroupMismatch);
    }
    let mut pairings = 1u32;
    let denom = group.pair(&c.c0, &tk.k0);
    let mut cross = group.gt_identity();
    for (cs, ts) in c.slots.iter().zip(&tk.slots) {
        if let Some((k1, k2)) = ts {
            cross = group.gt_mul(&cross, &group.pair(&cs.0, k1));
            cross = group.gt_mul(&cross, &group.pair(&cs.1, k2));
            pairings += 2;
        }
    }
    let recovered = group.gt_div(&group.gt_mul(&c.c_prime, &cross), &denom);
    Ok((recovered, pairings))
}

/// Evaluate the token predicate against one ciphertext: true iff the
/// recovered value equals the public sentinel.
pub fn hve_match(
    group: &BilinearGroup,
    c: &HveCiphertext,
    tk: &HveToken,
) -> Result<MatchOutcome, HveError> {
    let (recovered, pairings) = recover_message(group, c, tk)?;
    Ok(MatchOutcome {
        matched: recovered == tk.sentinel,
        pairings,
    })
}

/// Encrypt an object's location: one single-slot ciphertext per tree level
/// from h_max to the leaf level.
pub fn encrypt_object(
    pk: &HvePublicKey,
    group: &BilinearGroup,
    object_id: ObjectId,
    loc: GridLocation,
    params: &DomainParams,
    rng: &mut ChaCha20Rng,
) -> Result<ObjectCipherBundle, HveError> {
    if pk.width() != 1 {
        return Err(HveError::WidthMismatch {
            expected: 1,
            got: pk.width(),
        });
    }
    if params.scalar_bound() > attribute_bound(group) {
        return Err(HveError::DomainTooLarge {
            scalar_bound: params.scalar_bound(),
        });
    }
    let ciphertexts = geo::hve_level_values(loc, params)
        .into_iter()
        .map(|lv| hve_encrypt(pk, group, &[lv.value], lv.level, rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObjectCipherBundle {
        object_id,
        ciphertexts,
    })
}

/// Issue the single token for a square node-aligned range: scalar plus
/// level.
pub fn token_for_range(
    sk: &HveSecretKey,
    sentinel: &GtElem,
    range: &SpatialRange,
    params: &DomainParams,
    rng: &mut ChaCha20Rng,
) -> Result<HveToken, HveError> {
    if sk.width() != 1 {
        return Err(HveError::WidthMismatch {
            expected: 1,
            got: sk.width(),
        });
    }
    if params.scalar_bound() > attribute_bound(&sk.group) {
        return Err(HveError::DomainTooLarge {
            scalar_bound: params.scalar_bound(),
        });
    }
    let qv = geo::hve_query_value(range, params)?;
    hve_token(
        sk,
        &[PatternEntry::Scalar(qv.value)],
        qv.level,
        sentinel,
        rng,
    )
}

/// Verdict of a level-targeted bundle evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleLevelVerdict {
    Match { pairings: u32 },
    NoMatch { pairings: u32 },
    /// The token's level is outside the bundle's level range; treated as a
    /// non-match, diagnosable by the caller.
    LevelAbsent,
}

impl SingleLevelVerdict {
    pub fn is_match(&self) -> bool {
        matches!(self, SingleLevelVerdict::Match { .. })
    }

    pub fn pairings(&self) -> u32 {
        match self {
            SingleLevelVerdict::Match { pairings } | SingleLevelVerdict::NoMatch { pairings } => {
                *pairings
            }
            SingleLevelVerdict::LevelAbsent => 0,
        }
    }
}

/// Evaluate only the bundle ciphertext whose level equals the token's
/// level. Equivalent to scanning the whole bundle, at a fraction of the
/// pairing cost.
pub fn single_level_match(
    group: &BilinearGroup,
    bundle: &ObjectCipherBundle,
    tk: &HveToken,
) -> Result<SingleLevelVerdict, HveError> {
    let Some(c) = bundle.ciphertexts.iter().find(|c| c.level == tk.level) else {
        return Ok(SingleLevelVerdict::LevelAbsent);
    };
    let outcome = hve_match(group, c, tk)?;
    Ok(if outcome.matched {
        SingleLevelVerdict::Match {
            pairings: outcome.pairings,
        }
    } else {
        SingleLevelVerdict::NoMatch {
            pairings: outcome.pairings,
        }
    })
}

/// Evaluate every ciphertext in the bundle; true iff any level matches.
pub fn full_bundle_match(
    group: &BilinearGroup,
    bundle: &ObjectCipherBundle,
    tk: &HveToken,
) -> Result<(bool, u32), HveError> {
    let mut pairings = 0u32;
    let mut hits = 0u32;
    for c in &bundle.ciphertexts {
        let outcome = hve_match(group, c, tk)?;
        pairings += outcome.pairings;
        if outcome.matched {
            hits += 1;
        }
    }
    debug_assert!(hits <= 1, "multiple levels matched one token");
    Ok((hits > 0, pairings))
}

/// Result of a flat-file scan.
#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    pub matches: BTreeSet<ObjectId>,
    pub pairings: u64,
    pub bundles_scanned: u64,
}

/// Match a token against every bundle of a flat file with `workers`
/// threads over static partitions. The result is independent of the worker
/// count; per-worker pairing counters are summed.
pub fn linear_scan(
    group: &BilinearGroup,
    bundles: &[ObjectCipherBundle],
    tk: &HveToken,
    workers: usize,
) -> Result<ScanOutcome, HveError> {
    let workers = workers.max(1);
    if bundles.is_empty() {
        return Ok(ScanOutcome::default());
    }
    let chunk = bundles.len().div_ceil(workers);
    let results: Vec<Result<ScanOutcome, HveError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = bundles
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut out = ScanOutcome::default();
                    for bundle in part {
                        let verdict = single_level_match(group, bundle, tk)?;
                        out.bundles_scanned += 1;
                        out.pairings += verdict.pairings() as u64;
                        if verdict.is_match() {
                            out.matches.insert(bundle.object_id);
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut total = ScanOutcome::default();
    for r in results {
        let r = r?;
        total.matches.extend(r.matches);
        total.pairings += r.pairings;
        total.bundles_scanned += r.bundles_scanned;
    }
    Ok(total)
}

/// Flat file of encrypted object locations: length-prefixed records of
/// (object id, level, ciphertext elements), grouped into bundles on read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatFile {
    pub bundles: Vec<ObjectCipherBundle>,
}

impl FlatFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, bundle: ObjectCipherBundle) {
        self.bundles.push(bundle);
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn to_bytes(&self, group: &BilinearGroup) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(FILE_MAGIC);
        out.extend_from_slice(&FILE_VERSION.to_be_bytes());
        out.extend_from_slice(&group.digest());
        let records: u64 = self.bundles.iter().map(|b| b.ciphertexts.len() as u64).sum();
        out.extend_from_slice(&records.to_be_bytes());
        for bundle in &self.bundles {
            for c in &bundle.ciphertexts {
                let body = ciphertext_record(group, bundle.object_id, c);
                out.extend_from_slice(&(body.len() as u32).to_be_bytes());
                out.extend_from_slice(&body);
            }
        }
        out
    }

    pub fn from_bytes(data: &[u8], group: &BilinearGroup) -> Result<Self, HveError> {
        let err = |m: &str| HveError::MalformedContainer(m.into());
        if data.len() < 4 + 2 + 32 + 8 || &data[..4] != FILE_MAGIC {
            return Err(err("bad header"));
        }
        let version = u16::from_be_bytes(data[4..6].try_into().unwrap());
        if version != FILE_VERSION {
            return Err(err("unsupported version"));
        }
        if data[6..38] != group.digest() {
            return Err(HveError::GroupMismatch);
        }
        let records = u64::from_be_bytes(data[38..46].try_into().unwrap());
        let mut pos = 46usize;
        let mut file = FlatFile::new();
        for _ in 0..records {
            if pos + 4 > data.len() {
                return Err(err("truncated record header"));
            }
            let len = u32::from_be_bytes(data[pos..pos + 4].try_into().unwrap()) as usize;
            pos += 4;
            if pos + len > data.len() {
                return Err(err("truncated record"));
            }
            let (oid, c) = parse_ciphertext_record(group, &data[pos..pos + len])?;
            pos += len;
            match file.bundles.last_mut() {
                Some(last) if last.object_id == oid => last.ciphertexts.push(c),
                _ => file.bundles.push(ObjectCipherBundle {
                    object_id: oid,
                    ciphertexts: vec![c],
                }),
            }
        }
        if pos != data.len() {
            return Err(err("trailing bytes"));
        }
        Ok(file)
    }
}

fn ciphertext_record(group: &BilinearGroup, oid: ObjectId, c: &HveCiphertext) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(oid.as_bytes());
    out.push(c.level);
    out.extend_from_slice(&(c.slots.len() as u16).to_be_bytes());
    out.extend_from_slice(&group.gt_to_bytes(&c.c_prime));
    out.extend_from_slice(&group.elem_to_bytes(&c.c0));
    for (c1, c2) in &c.slots {
        out.extend_from_slice(&group.elem_to_bytes(c1));
        out.extend_from_slice(&group.elem_to_bytes(c2));
    }
    out
}

fn parse_ciphertext_record(
    group: &BilinearGroup,
    data: &[u8],
) -> Result<(ObjectId, HveCiphertext), HveError> {
    let err = |m: &str| HveError::MalformedContainer(m.into());
    let gt_len = group.gt_len();
    let el_len = group.elem_len();
    if data.len() < 16 + 1 + 2 {
        return Err(err("record too short"));
    }
    let oid = ObjectId::from_slice(&data[..16]).ok_or_else(|| err("bad object id"))?;
    let level = data[16];
    let width = u16::from_be_bytes(data[17..19].try_into().unwrap()) as usize;
    let expected = 19 + gt_len + el_len + width * 2 * el_len;
    if data.len() != expected {
        return Err(err("record length mismatch"));
    }
    let mut pos = 19;
    let c_prime = group.gt_from_bytes(&data[pos..pos + gt_len])?;
    pos += gt_len;
    let c0 = group.elem_from_bytes(&data[pos..pos + el_len])?;
    pos += el_len;
    let mut slots = Vec::with_capacity(width);
    for _ in 0..width {
        let c1 = group.elem_from_bytes(&data[pos..pos + el_len])?;
        pos += el_len;
        let c2 = group.elem_from_bytes(&data[pos..pos + el_len])?;
        pos += el_len;
        slots.push((c1, c2));
    }
    Ok((
        oid,
        HveCiphertext {
            level,
            group_digest: group.digest(),
            c_prime,
            c0,
            slots,
        },
    ))
}

impl HveToken {
    /// Wire format for authority-to-buyer transport.
    pub fn to_bytes(&self, group: &BilinearGroup) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TOKEN_MAGIC);
        out.push(self.level);
        out.extend_from_slice(&(self.pattern.len() as u16).to_be_bytes());
        for p in &self.pattern {
            match p {
                PatternEntry::Wildcard => out.push(0),
                PatternEntry::Scalar(v) => {
                    out.push(1);
                    out.extend_from_slice(&v.to_be_bytes());
                }
            }
        }
        out.extend_from_slice(&group.elem_to_bytes(&self.k0));
        for s in self.slots.iter().flatten() {
            out.extend_from_slice(&group.elem_to_bytes(&s.0));
            out.extend_from_slice(&group.elem_to_bytes(&s.1));
        }
        out.extend_from_slice(&group.gt_to_bytes(&self.sentinel));
        out
    }

    pub fn from_bytes(data: &[u8], group: &BilinearGroup) -> Result<Self, HveError> {
        let err = |m: &str| HveError::MalformedContainer(m.into());
        if data.len() < 7 || &data[..4] != TOKEN_MAGIC {
            return Err(err("bad token header"));
        }
        let level = data[4];
        let width = u16::from_be_bytes(data[5..7].try_into().unwrap()) as usize;
        let mut pos = 7usize;
        let mut pattern = Vec::with_capacity(width);
        for _ in 0..width {
            if pos >= data.len() {
                return Err(err("truncated pattern"));
            }
            match data[pos] {
                0 => {
                    pattern.push(PatternEntry::Wildcard);
                    pos += 1;
                }
                1 => {
                    if pos + 9 > data.len() {
                        return Err(err("truncated scalar"));
                    }
                    let v = u64::from_be_bytes(data[pos + 1..pos + 9].try_into().unwrap());
                    pattern.push(PatternEntry::Scalar(v));
                    pos += 9;
                }
                _ => return Err(err("bad pattern tag")),
            }
        }
        let el_len = group.elem_len();
        let gt_len = group.gt_len();
        let non_wild = pattern
            .iter()
            .filter(|p| matches!(p, PatternEntry::Scalar(_)))
            .count();
        if data.len() != pos + el_len + non_wild * 2 * el_len + gt_len {
            return Err(err("token length mismatch"));
        }
        let k0 = group.elem_from_bytes(&data[pos..pos + el_len])?;
        pos += el_len;
        let mut slots = Vec::with_capacity(width);
        for p in &pattern {
            match p {
                PatternEntry::Wildcard => slots.push(None),
                PatternEntry::Scalar(_) => {
                    let k1 = group.elem_from_bytes(&data[pos..pos + el_len])?;
                    pos += el_len;
                    let k2 = group.elem_from_bytes(&data[pos..pos + el_len])?;
                    pos += el_len;
                    slots.push(Some((k1, k2)));
                }
            }
        }
        let sentinel = group.gt_from_bytes(&data[pos..pos + gt_len])?;
        Ok(HveToken {
            level,
            group_digest: group.digest(),
            pattern,
            k0,
            slots,
            sentinel,
        })
    }
}
