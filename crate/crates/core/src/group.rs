//! Symmetric bilinear groups of composite order `n = p * q`.
//!
//! Production-grade composite-order pairings are out of scope for this
//! prototype; the default backend here represents group elements by their
//! exponents modulo `n`, making the pairing a single modular multiplication.
//! Every algebraic identity of a symmetric composite-order pairing holds
//! exactly (bilinearity, subgroup orthogonality, G_T arithmetic), but
//! discrete logarithms are trivial, so the backend provides no hardness at
//! all. A second backend implements a genuine Tate pairing on a
//! supersingular curve with a distortion map; it is slower and exists to
//! validate the same algebra against a real pairing.
//!
//! Group handles are cheaply clonable and thread-safe; the pairing counter
//! is shared across clones so parallel scans aggregate naturally.

use crate::crypto::{self, CryptoError};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::rngs::ChaCha20Rng;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use thiserror::Error;

mod curve;

pub use curve::CurvePoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("group order must be at least 32 bits, got {0}")]
    OrderTooSmall(u32),
    #[error("parameter generation failed: {0}")]
    ParameterGeneration(String),
    #[error("element does not belong to this group")]
    ForeignElement,
    #[error("malformed element encoding")]
    MalformedElement,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Backend selection for [`BilinearGroup::setup_with_backend`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingBackend {
    /// Exponent-transparent arithmetic modulo `n`. Fast and exact, zero
    /// hardness; the default for tests and benchmarks.
    Transparent,
    /// Tate pairing on a supersingular curve over F_P with a distortion
    /// map, P = k*n - 1. Real pairing arithmetic at desk-scale sizes.
    Supersingular,
}

pub(crate) enum BackendState {
    Transparent,
    Supersingular(curve::CurveParams),
}

pub struct GroupInner {
    backend: BackendState,
    n: BigUint,
    p: BigUint,
    q: BigUint,
    digest: [u8; 32],
    pairing_counter: AtomicU64,
}

/// A symmetric bilinear group `e : G x G -> G_T` with `|G| = n = p * q`.
#[derive(Clone)]
pub struct BilinearGroup {
    inner: Arc<GroupInner>,
}

/// Element of the source group G.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElem(pub(crate) ElemRepr);

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ElemRepr {
    /// Exponent relative to the canonical generator, modulo n.
    Zn(BigUint),
    Curve(CurvePoint),
}

/// Element of the target group G_T.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtElem(pub(crate) GtRepr);

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum GtRepr {
    Zn(BigUint),
    Fp2(curve::Fp2),
}

impl BilinearGroup {
    /// Generate group parameters with `bits`-bit composite order from a
    /// seed, using the transparent backend.
    pub fn setup(bits: u32, seed: &[u8]) -> Result<Self, GroupError> {
        Self::setup_with_backend(bits, seed, PairingBackend::Transparent)
    }

    pub fn setup_with_backend(
        bits: u32,
        seed: &[u8],
        backend: PairingBackend,
    ) -> Result<Self, GroupError> {
        if bits < 32 {
            return Err(GroupError::OrderTooSmall(bits));
        }
        let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"group-setup", seed]));
        let half = (bits / 2) as u64;
        let p = crypto::gen_prime(half, &mut rng)?;
        let q = loop {
            let c = crypto::gen_prime(half, &mut rng)?;
            if c != p {
                break c;
            }
        };
        let n = &p * &q;
        let backend_state = match backend {
            PairingBackend::Transparent => BackendState::Transparent,
            PairingBackend::Supersingular => {
                BackendState::Supersingular(curve::CurveParams::generate(&n, &p, &q, &mut rng)?)
            }
        };
        let digest = {
            let tag: &[u8] = match backend {
                PairingBackend::Transparent => b"zn",
                PairingBackend::Supersingular => b"ss",
            };
            crypto::sha256_parts(&[b"group", tag, &n.to_bytes_be()])
        };
        Ok(BilinearGroup {
            inner: Arc::new(GroupInner {
                backend: backend_state,
                n,
                p,
                q,
                digest,
                pairing_counter: AtomicU64::new(0),
            }),
        })
    }

    pub fn order(&self) -> &BigUint {
        &self.inner.n
    }

    pub fn subgroup_order_p(&self) -> &BigUint {
        &self.inner.p
    }

    pub fn subgroup_order_q(&self) -> &BigUint {
        &self.inner.q
    }

    /// Stable identifier binding serialized material to its group.
    pub fn digest(&self) -> [u8; 32] {
        self.inner.digest
    }

    /// Total pairings evaluated through this group handle (shared across
    /// clones).
    pub fn pairing_count(&self) -> u64 {
        self.inner.pairing_counter.load(Ordering::Relaxed)
    }

    pub fn reset_pairing_count(&self) {
        self.inner.pairing_counter.store(0, Ordering::Relaxed);
    }

    /// Canonical generator of the full group.
    pub fn generator(&self) -> GroupElem {
        match &self.inner.backend {
            BackendState::Transparent => GroupElem(ElemRepr::Zn(BigUint::one())),
            BackendState::Supersingular(c) => GroupElem(ElemRepr::Curve(c.generator.clone())),
        }
    }

    /// Generator of the order-q subgroup G_q: the generator raised to p.
    pub fn generator_gq(&self) -> GroupElem {
        self.pow(&self.generator(), &self.inner.p)
    }

    /// Generator of the order-p subgroup G_p.
    pub fn generator_gp(&self) -> GroupElem {
        self.pow(&self.generator(), &self.inner.q)
    }

    /// Uniform scalar in `[0, n)`.
    pub fn random_scalar(&self, rng: &mut ChaCha20Rng) -> BigUint {
        crypto::random_below(rng, &self.inner.n)
    }

    /// Uniform nonzero scalar in `[1, p)`, the exponent space of G_p.
    pub fn random_scalar_p(&self, rng: &mut ChaCha20Rng) -> BigUint {
        loop {
            let s = crypto::random_below(rng, &self.inner.p);
            if !s.is_zero() {
                return s;
            }
        }
    }

    /// Uniform non-identity element of G_p.
    pub fn random_gp(&self, rng: &mut ChaCha20Rng) -> GroupElem {
        let s = self.random_scalar_p(rng);
        self.pow(&self.generator_gp(), &s)
    }

    /// Uniform element of G_q (identity excluded).
    pub fn random_gq(&self, rng: &mut ChaCha20Rng) -> GroupElem {
        loop {
            let s = crypto::random_below(rng, &self.inner.q);
            if !s.is_zero() {
                return self.pow(&self.generator_gq(), &s);
            }
        }
    }

    pub fn identity(&self) -> GroupElem {
        match &self.inner.backend {
            BackendState::Transparent => GroupElem(ElemRepr::Zn(BigUint::zero())),
            BackendState::Supersingular(_) => GroupElem(ElemRepr::Curve(CurvePoint::Infinity)),
        }
    }

    pub fn mul(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        match (&self.inner.backend, &a.0, &b.0) {
            (BackendState::Transparent, ElemRepr::Zn(x), ElemRepr::Zn(y)) => {
                GroupElem(ElemRepr::Zn((x + y) % &self.inner.n))
            }
            (BackendState::Supersingular(c), ElemRepr::Curve(x), ElemRepr::Curve(y)) => {
                GroupElem(ElemRepr::Curve(c.add(x, y)))
            }
            _ => panic!("group element backend mismatch"),
        }
    }

    pub fn pow(&self, a: &GroupElem, k: &BigUint) -> GroupElem {
        match (&self.inner.backend, &a.0) {
            (BackendState::Transparent, ElemRepr::Zn(x)) => {
                GroupElem(ElemRepr::Zn(x * k % &self.inner.n))
            }
            (BackendState::Supersingular(c), ElemRepr::Curve(x)) => {
                GroupElem(ElemRepr::Curve(c.mul_scalar(x, k)))
            }
            _ => panic!("group element backend mismatch"),
        }
    }

    pub fn inv(&self, a: &GroupElem) -> GroupElem {
        match (&self.inner.backend, &a.0) {
            (BackendState::Transparent, ElemRepr::Zn(x)) => {
                let n = &self.inner.n;
                GroupElem(ElemRepr::Zn((n - x % n) % n))
            }
            (BackendState::Supersingular(c), ElemRepr::Curve(x)) => {
                GroupElem(ElemRepr::Curve(c.neg(x)))
            }
            _ => panic!("group element backend mismatch"),
        }
    }

    /// Bilinear pairing into G_T. Increments the shared pairing counter.
    pub fn pair(&self, a: &GroupElem, b: &GroupElem) -> GtElem {
        self.inner.pairing_counter.fetch_add(1, Ordering::Relaxed);
        match (&self.inner.backend, &a.0, &b.0) {
            (BackendState::Transparent, ElemRepr::Zn(x), ElemRepr::Zn(y)) => {
                GtElem(GtRepr::Zn(x * y % &self.inner.n))
            }
            (BackendState::Supersingular(c), ElemRepr::Curve(x), ElemRepr::Curve(y)) => {
                GtElem(GtRepr::Fp2(c.tate_pairing(x, y)))
            }
            _ => panic!("group element backend mismatch"),
        }
    }

    pub fn gt_identity(&self) -> GtElem {
        match &self.inner.backend {
            BackendState::Transparent => GtElem(GtRepr::Zn(BigUint::zero())),
            BackendState::Supersingular(c) => GtElem(GtRepr::Fp2(c.fp2_one())),
        }
    }

    pub fn gt_mul(&self, a: &GtElem, b: &GtElem) -> GtElem {
        match (&self.inner.backend, &a.0, &b.0) {
            (BackendState::Transparent, GtRepr::Zn(x), GtRepr::Zn(y)) => {
                GtElem(GtRepr::Zn((x + y) % &self.inner.n))
            }
            (BackendState::Supersingular(c), GtRepr::Fp2(x), GtRepr::Fp2(y)) => {
                GtElem(GtRepr::Fp2(c.fp2_mul(x, y)))
            }
            _ => panic!("target element backend mismatch"),
        }
    }

    pub fn gt_inv(&self, a: &GtElem) -> GtElem {
        match (&self.inner.backend, &a.0) {
            (BackendState::Transparent, GtRepr::Zn(x)) => {
                let n = &self.inner.n;
                GtElem(GtRepr::Zn((n - x % n) % n))
            }
            (BackendState::Supersingular(c), GtRepr::Fp2(x)) => GtElem(GtRepr::Fp2(c.fp2_inv(x))),
            _ => panic!("target element backend mismatch"),
        }
    }

    pub fn gt_div(&self, a: &GtElem, b: &GtElem) -> GtElem {
        self.gt_mul(a, &self.gt_inv(b))
    }

    pub fn gt_pow(&self, a: &GtElem, k: &BigUint) -> GtElem {
        match (&self.inner.backend, &a.0) {
            (BackendState::Transparent, GtRepr::Zn(x)) => {
                GtElem(GtRepr::Zn(x * k % &self.inner.n))
            }
            (BackendState::Supersingular(c), GtRepr::Fp2(x)) => {
                GtElem(GtRepr::Fp2(c.fp2_pow(x, k)))
            }
            _ => panic!("target element backend mismatch"),
        }
    }

    /// `e(g, g)` for the canonical generator; generates G_T.
    pub fn gt_generator(&self) -> GtElem {
        let g = self.generator();
        // Not counted as query work.
        self.inner.pairing_counter.fetch_sub(1, Ordering::Relaxed);
        self.pair(&g, &g)
    }

    /// Deterministic map from bytes into G_T.
    pub fn hash_to_gt(&self, label: &str, data: &[u8]) -> GtElem {
        let e = crypto::hash_to_int(label, data, &self.inner.n);
        self.gt_pow(&self.gt_generator(), &e)
    }

    /// Canonical fixed-width encoding of a source-group element.
    pub fn elem_to_bytes(&self, a: &GroupElem) -> Vec<u8> {
        match (&self.inner.backend, &a.0) {
            (BackendState::Transparent, ElemRepr::Zn(x)) => {
                crypto::to_fixed_be(x, self.elem_len())
            }
            (BackendState::Supersingular(c), ElemRepr::Curve(pt)) => c.point_to_bytes(pt),
            _ => panic!("group element backend mismatch"),
        }
    }

    pub fn elem_from_bytes(&self, data: &[u8]) -> Result<GroupElem, GroupError> {
        if data.len() != self.elem_len() {
            return Err(GroupError::MalformedElement);
        }
        match &self.inner.backend {
            BackendState::Transparent => {
                let v = BigUint::from_bytes_be(data);
                if v >= self.inner.n {
                    return Err(GroupError::MalformedElement);
                }
                Ok(GroupElem(ElemRepr::Zn(v)))
            }
            BackendState::Supersingular(c) => {
                Ok(GroupElem(ElemRepr::Curve(c.point_from_bytes(data)?)))
            }
        }
    }

    pub fn gt_to_bytes(&self, a: &GtElem) -> Vec<u8> {
        match (&self.inner.backend, &a.0) {
            (BackendState::Transparent, GtRepr::Zn(x)) => crypto::to_fixed_be(x, self.gt_len()),
            (BackendState::Supersingular(c), GtRepr::Fp2(x)) => c.fp2_to_bytes(x),
            _ => panic!("target element backend mismatch"),
        }
    }

    pub fn gt_from_bytes(&self, data: &[u8]) -> Result<GtElem, GroupError> {
        if data.len() != self.gt_len() {
            return Err(GroupError::MalformedElement);
        }
        match &self.inner.backend {
            BackendState::Transparent => {
                let v = BigUint::from_bytes_be(data);
                if v >= self.inner.n {
                    return Err(GroupError::MalformedElement);
                }
                Ok(GtElem(GtRepr::Zn(v)))
            }
            BackendState::Supersingular(c) => Ok(GtElem(GtRepr::Fp2(c.fp2_from_bytes(data)?))),
        }
    }

    /// Serialized length of a source-group element.
    pub fn elem_len(&self) -> usize {
        match &self.inner.backend {
            BackendState::Transparent => self.inner.n.bits().div_ceil(8) as usize,
            BackendState::Supersingular(c) => c.point_len(),
        }
    }

    pub fn gt_len(&self) -> usize {
        match &self.inner.backend {
            BackendState::Transparent => self.inner.n.bits().div_ceil(8) as usize,
            BackendState::Supersingular(c) => c.fp2_len(),
        }
    }

    /// Verify `e(a^u, b^v) = e(a, b)^(u*v)` on random probes.
    pub fn bilinearity_check(&self, probes: u32, rng: &mut ChaCha20Rng) -> bool {
        let g = self.generator();
        for _ in 0..probes {
            let u = self.random_scalar(rng);
            let v = self.random_scalar(rng);
            let lhs = self.pair(&self.pow(&g, &u), &self.pow(&g, &v));
            let rhs = self.gt_pow(&self.pair(&g, &g), &(u * v % self.order()));
            if lhs != rhs {
                return false;
            }
        }
        true
    }
}
