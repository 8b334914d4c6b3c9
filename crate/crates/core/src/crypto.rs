//! Shared cryptographic plumbing: PRFs, authenticated encryption, and
//! arbitrary-precision number helpers used by the commitment and pairing
//! code.
//!
//! Everything here is deliberately seedable so that index builds, key
//! generation and benchmarks are reproducible.

use aes_gcm::aead::{Aead, Payload};
use aes_gcm::{Aes128Gcm, Aes256Gcm, KeyInit};
use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};

pub use rand::rngs::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unsupported security level: {0} bits")]
    UnsupportedSecurityBits(u32),
    #[error("ciphertext too short")]
    CiphertextTooShort,
    #[error("authentication failed")]
    AuthenticationFailed,
    #[error("prime generation failed after {0} attempts")]
    PrimeGenerationFailed(u32),
}

type HmacSha256 = Hmac<Sha256>;

/// Keyed PRF: HMAC-SHA256 over a domain label and message.
pub fn prf(key: &[u8], label: &str, msg: &[u8]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(label.as_bytes());
    mac.update(&[0x1f]);
    mac.update(msg);
    mac.finalize().into_bytes().into()
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// Hash several framed segments; each segment is length-prefixed so that
/// concatenation ambiguity cannot occur.
pub fn sha256_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Deterministic RNG seeded from arbitrary bytes.
pub fn seeded_rng(seed: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(sha256(seed))
}

/// Fork a child RNG for an independent purpose.
pub fn fork_rng(rng: &mut ChaCha20Rng, label: &str) -> ChaCha20Rng {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let mixed = sha256_parts(&[&seed, label.as_bytes()]);
    ChaCha20Rng::from_seed(mixed)
}

/// Authenticated symmetric encryption (AES-GCM). The nonce is carried in
/// the ciphertext header; keys are 16 or 32 bytes.
pub fn aead_encrypt(
    key: &[u8],
    plaintext: &[u8],
    aad: &[u8],
    rng: &mut ChaCha20Rng,
) -> Result<Vec<u8>, CryptoError> {
    let mut nonce = [0u8; 12];
    rng.fill_bytes(&mut nonce);
    let payload = Payload {
        msg: plaintext,
        aad,
    };
    let nonce_arr = aes_gcm::Nonce::try_from(&nonce[..]).expect("12-byte nonce");
    let ct = match key.len() {
        16 => Aes128Gcm::new_from_slice(key).unwrap().encrypt(&nonce_arr, payload),
        32 => Aes256Gcm::new_from_slice(key).unwrap().encrypt(&nonce_arr, payload),
        other => return Err(CryptoError::UnsupportedSecurityBits(8 * other as u32)),
    }
    .map_err(|_| CryptoError::AuthenticationFailed)?;
    let mut out = Vec::with_capacity(12 + ct.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ct);
    Ok(out)
}

pub fn aead_decrypt(key: &[u8], ciphertext: &[u8], aad: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.len() < 12 + 16 {
        return Err(CryptoError::CiphertextTooShort);
    }
    let (nonce, body) = ciphertext.split_at(12);
    let payload = Payload { msg: body, aad };
    let nonce_arr = aes_gcm::Nonce::try_from(nonce).expect("12-byte nonce");
    match key.len() {
        16 => Aes128Gcm::new_from_slice(key).unwrap().decrypt(&nonce_arr, payload),
        32 => Aes256Gcm::new_from_slice(key).unwrap().decrypt(&nonce_arr, payload),
        other => return Err(CryptoError::UnsupportedSecurityBits(8 * other as u32)),
    }
    .map_err(|_| CryptoError::AuthenticationFailed)
}

/// Uniform random integer in `[0, bound)`.
pub fn random_below(rng: &mut ChaCha20Rng, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let shift = (8 * bytes as u64 - bits) as u32;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        let mut v = BigUint::from_bytes_be(&buf);
        v >>= shift;
        if &v < bound {
            return v;
        }
    }
}

/// Uniform random integer with exactly `bits` bits (top bit set).
pub fn random_bits(rng: &mut ChaCha20Rng, bits: u64) -> BigUint {
    assert!(bits >= 2);
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    let mut v = BigUint::from_bytes_be(&buf);
    v >>= (8 * bytes as u64 - bits) as u32;
    v |= BigUint::one() << (bits - 1);
    v
}

/// Miller-Rabin probabilistic primality test with 32 random bases, plus a
/// small-prime sieve.
pub fn is_probable_prime(n: &BigUint, rng: &mut ChaCha20Rng) -> bool {
    const SMALL_PRIMES: [u32; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for p in SMALL_PRIMES {
        let pb = BigUint::from(p);
        if n == &pb {
            return true;
        }
        if (n % pb).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - BigUint::one();
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..32 {
        let a = random_below(rng, &(n - BigUint::from(3u32))) + &two;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Generate a random probable prime of exactly `bits` bits.
pub fn gen_prime(bits: u64, rng: &mut ChaCha20Rng) -> Result<BigUint, CryptoError> {
    let attempts = 40 * bits as u32;
    for _ in 0..attempts {
        let mut candidate = random_bits(rng, bits);
        candidate |= BigUint::one();
        if is_probable_prime(&candidate, rng) {
            return Ok(candidate);
        }
    }
    Err(CryptoError::PrimeGenerationFailed(attempts))
}

/// Hash bytes to an integer below `bound`, with a domain-separation label.
pub fn hash_to_int(label: &str, data: &[u8], bound: &BigUint) -> BigUint {
    // Expand with counter blocks until we exceed the bound's bit length by
    // 64 bits, then reduce; bias is negligible at these sizes.
    let need_bits = bound.bits() + 64;
    let need_bytes = need_bits.div_ceil(8) as usize;
    let mut out = Vec::with_capacity(need_bytes);
    let mut counter = 0u32;
    while out.len() < need_bytes {
        let mut h = Sha256::new();
        h.update(label.as_bytes());
        h.update([0x1f]);
        h.update(counter.to_be_bytes());
        h.update(data);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(need_bytes);
    BigUint::from_bytes_be(&out) % bound
}

/// Fixed-width big-endian encoding, left-padded with zeros.
pub fn to_fixed_be(v: &BigUint, width: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    assert!(raw.len() <= width, "value does not fit width {width}");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// 1536-bit MODP group (RFC 3526, group 5), generator 2. Used for sealing
/// key envelopes to an account's public key.
const MODP_1536_HEX: &str = "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E08\
8A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245\
E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7EDEE386BFB5A899FA5AE9F24117C4B1FE649286651\
ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA237327FFFFFFFFFFFFFFFF";

fn modp_group() -> (BigUint, BigUint) {
    let p = BigUint::parse_bytes(MODP_1536_HEX.as_bytes(), 16).expect("constant parses");
    (p, BigUint::from(2u32))
}

/// Key pair for receiving sealed envelopes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvelopeKeys {
    secret: BigUint,
    pub public: BigUint,
}

impl EnvelopeKeys {
    pub fn generate(rng: &mut ChaCha20Rng) -> Self {
        let (p, g) = modp_group();
        let secret = random_below(rng, &(&p - BigUint::from(2u32))) + BigUint::one();
        let public = g.modpow(&secret, &p);
        EnvelopeKeys { secret, public }
    }

    pub fn public_bytes(&self) -> Vec<u8> {
        self.public.to_bytes_be()
    }
}

/// Seal a payload to a recipient public key: ephemeral Diffie-Hellman
/// share followed by authenticated encryption under the derived key.
pub fn seal_envelope(
    recipient_public: &BigUint,
    payload: &[u8],
    rng: &mut ChaCha20Rng,
) -> Result<Vec<u8>, CryptoError> {
    let (p, g) = modp_group();
    let eph = random_below(rng, &(&p - BigUint::from(2u32))) + BigUint::one();
    let share = g.modpow(&eph, &p);
    let secret_point = recipient_public.modpow(&eph, &p);
    let key = sha256_parts(&[b"envelope-key", &secret_point.to_bytes_be()]);
    let body = aead_encrypt(&key[..16], payload, b"envelope", rng)?;
    let share_bytes = share.to_bytes_be();
    let mut out = Vec::with_capacity(2 + share_bytes.len() + body.len());
    out.extend_from_slice(&(share_bytes.len() as u16).to_be_bytes());
    out.extend_from_slice(&share_bytes);
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn open_envelope(keys: &EnvelopeKeys, envelope: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if envelope.len() < 2 {
        return Err(CryptoError::CiphertextTooShort);
    }
    let share_len = u16::from_be_bytes(envelope[..2].try_into().unwrap()) as usize;
    if envelope.len() < 2 + share_len {
        return Err(CryptoError::CiphertextTooShort);
    }
    let (p, _) = modp_group();
    let share = BigUint::from_bytes_be(&envelope[2..2 + share_len]);
    let secret_point = share.modpow(&keys.secret, &p);
    let key = sha256_parts(&[b"envelope-key", &secret_point.to_bytes_be()]);
    aead_decrypt(&key[..16], &envelope[2 + share_len..], b"envelope")
}
