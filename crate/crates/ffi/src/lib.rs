//! C ABI over the geomarket core: domain encoding, the symmetric encrypted
//! index, asymmetric location matching, and vector commitments.
//!
//! Conventions:
//! * handles are opaque pointers created by `*_new` and released by the
//!   matching `*_free`; they are not thread-safe, one thread at a time;
//! * fallible calls return [`GmStatus`]; `GM_STATUS_OK` is zero;
//! * result sets are returned as JSON in newly allocated strings released
//!   with [`gm_string_free`]; byte buffers are released with
//!   [`gm_bytes_free`];
//! * on failure, [`gm_last_error_message`] returns a description of the
//!   most recent error on the calling thread.

use geomarket::crypto::{self, ChaCha20Rng};
use geomarket::geo::{self, BoundingBox, DomainParams, GridLocation, SpatialRange};
use geomarket::group::BilinearGroup;
use geomarket::hve;
use geomarket::sse;
use geomarket::types::ObjectId;
use geomarket::vc;
use std::cell::RefCell;
use std::ffi::{c_char, CString};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

/// Result code of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    NotAligned = 4,
    CryptoFailure = 5,
    Internal = 6,
}

macro_rules! require_nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error("null pointer argument");
                return GmStatus::NullPointer;
            }
        }
    };
}

/// Message describing the most recent error on this thread, or NULL.
/// Release with [`gm_string_free`].
#[no_mangle]
pub extern "C" fn gm_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a function in this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn gm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Release a byte buffer returned by this library.
///
/// # Safety
/// `(ptr, len)` must be a pair returned by a function in this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gm_bytes_free(ptr: *mut u8, len: usize) {
    if !ptr.is_null() {
        drop(unsafe { Vec::from_raw_parts(ptr, len, len) });
    }
}

fn string_out(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error("interior NUL in output");
            std::ptr::null_mut()
        }
    }
}

fn bytes_out(bytes: Vec<u8>, out_ptr: *mut *mut u8, out_len: *mut usize) -> GmStatus {
    if out_ptr.is_null() || out_len.is_null() {
        set_error("null output pointer");
        return GmStatus::NullPointer;
    }
    let mut boxed = bytes.into_boxed_slice();
    let ptr = boxed.as_mut_ptr();
    let len = boxed.len();
    std::mem::forget(boxed);
    unsafe {
        *out_ptr = ptr;
        *out_len = len;
    }
    GmStatus::Ok
}

fn read_seed(seed: *const u8, seed_len: usize) -> Option<Vec<u8>> {
    if seed.is_null() {
        if seed_len == 0 {
            return Some(Vec::new());
        }
        return None;
    }
    Some(unsafe { std::slice::from_raw_parts(seed, seed_len) }.to_vec())
}

fn read_oid(oid: *const u8) -> Option<ObjectId> {
    if oid.is_null() {
        return None;
    }
    ObjectId::from_slice(unsafe { std::slice::from_raw_parts(oid, 16) })
}

// ---------------------------------------------------------------------
// Domain encoding
// ---------------------------------------------------------------------

/// Grid-domain parameters.
pub struct GmDomainParams {
    inner: DomainParams,
}

/// Create domain parameters for an `l x l` grid (`l` a power of two) over
/// the given bounding box. Returns NULL on invalid input.
#[no_mangle]
pub extern "C" fn gm_domain_params_new(
    l: u32,
    h_max: u8,
    min_lat: f64,
    max_lat: f64,
    min_lon: f64,
    max_lon: f64,
) -> *mut GmDomainParams {
    if !l.is_power_of_two() {
        set_error(format!("grid side {l} is not a power of two"));
        return std::ptr::null_mut();
    }
    let bbox = BoundingBox {
        min_lat,
        max_lat,
        min_lon,
        max_lon,
    };
    match DomainParams::new(l.trailing_zeros() as u8, h_max, bbox) {
        Ok(inner) => Box::into_raw(Box::new(GmDomainParams { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `params` must be a live handle from [`gm_domain_params_new`].
#[no_mangle]
pub unsafe extern "C" fn gm_domain_params_free(params: *mut GmDomainParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Snap a coordinate to its grid cell.
///
/// # Safety
/// `params` must be a live handle; `x_out`/`y_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_snap_to_grid(
    params: *const GmDomainParams,
    lat: f64,
    lon: f64,
    x_out: *mut u32,
    y_out: *mut u32,
) -> GmStatus {
    let params = require_nonnull!(params);
    if x_out.is_null() || y_out.is_null() {
        set_error("null output pointer");
        return GmStatus::NullPointer;
    }
    match geo::snap_to_grid(lat, lon, &params.inner) {
        Ok(loc) => {
            unsafe {
                *x_out = loc.x;
                *y_out = loc.y;
            }
            GmStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            GmStatus::OutOfDomain
        }
    }
}

/// Keyword set of a grid cell as a JSON array of strings; NULL on error.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_object_keywords_json(
    params: *const GmDomainParams,
    x: u32,
    y: u32,
) -> *mut c_char {
    let Some(params) = (unsafe { params.as_ref() }) else {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    };
    match geo::object_keywords(GridLocation::new(x, y), &params.inner) {
        Ok(kws) => string_out(serde_json::to_string(&kws).unwrap()),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Conjunctive keyword pairs covering a rectangle, as a JSON array of
/// two-element arrays; NULL on error.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_range_decompose_json(
    params: *const GmDomainParams,
    x_lo: u32,
    x_hi: u32,
    y_lo: u32,
    y_hi: u32,
) -> *mut c_char {
    let Some(params) = (unsafe { params.as_ref() }) else {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    };
    let range = SpatialRange::new(x_lo, x_hi, y_lo, y_hi);
    match geo::decompose_range_query(&range, &params.inner) {
        Ok(pairs) => string_out(serde_json::to_string(&pairs).unwrap()),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Per-level scalar values of a cell as a JSON array of
/// `{"level": n, "value": v}` records; NULL on error.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gm_level_values_json(
    params: *const GmDomainParams,
    x: u32,
    y: u32,
) -> *mut c_char {
    let Some(params) = (unsafe { params.as_ref() }) else {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    };
    let values = geo::hve_level_values(GridLocation::new(x, y), &params.inner);
    string_out(serde_json::to_string(&values).unwrap())
}

/// Scalar and level of a square node-aligned query range.
///
/// # Safety
/// `params` must be a live handle; `value_out`/`level_out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gm_query_level_value(
    params: *const GmDomainParams,
    x_lo: u32,
    x_hi: u32,
    y_lo: u32,
    y_hi: u32,
    value_out: *mut u64,
    level_out: *mut u8,
) -> GmStatus {
    let params = require_nonnull!(params);
    if value_out.is_null() || level_out.is_null() {
        set_error("null output pointer");
        return GmStatus::NullPointer;
    }
    let range = SpatialRange::new(x_lo, x_hi, y_lo, y_hi);
    match geo::hve_query_value(&range, &params.inner) {
        Ok(v) => {
            unsafe {
                *value_out = v.value;
                *level_out = v.level;
            }
            GmStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            GmStatus::NotAligned
        }
    }
}

// ---------------------------------------------------------------------
// Symmetric encrypted index
// ---------------------------------------------------------------------

/// A symmetric searchable index together with its secret keys.
pub struct GmSseIndex {
    keys: sse::SseKeys,
    index: sse::EncryptedIndex,
}

/// Create an empty keyed index. `security_bits` is 128 or 256; the seed
/// makes key generation reproducible.
#[no_mangle]
pub extern "C" fn gm_sse_index_new(
    security_bits: u32,
    seed: *const u8,
    seed_len: usize,
) -> *mut GmSseIndex {
    let Some(seed) = read_seed(seed, seed_len) else {
        set_error("null seed with nonzero length");
        return std::ptr::null_mut();
    };
    let keys = match sse::SseKeys::generate(security_bits, &seed) {
        Ok(k) => k,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    let index = match sse::EncryptedIndex::new_empty(security_bits) {
        Ok(i) => i,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    Box::into_raw(Box::new(GmSseIndex { keys, index }))
}

/// # Safety
/// `handle` must be a live handle from [`gm_sse_index_new`].
#[no_mangle]
pub unsafe extern "C" fn gm_sse_index_free(handle: *mut GmSseIndex) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Index an object at a grid cell. `oid` points to 16 bytes.
///
/// # Safety
/// `handle` and `params` must be live handles; `oid` must point to 16
/// readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gm_sse_index_insert(
    handle: *mut GmSseIndex,
    params: *const GmDomainParams,
    oid: *const u8,
    x: u32,
    y: u32,
) -> GmStatus {
    let params = require_nonnull!(params);
    let Some(handle) = (unsafe { handle.as_mut() }) else {
        set_error("null pointer argument");
        return GmStatus::NullPointer;
    };
    let Some(oid) = read_oid(oid) else {
        set_error("object id must be 16 bytes");
        return GmStatus::NullPointer;
    };
    let keywords = match geo::object_keywords(GridLocation::new(x, y), &params.inner) {
        Ok(k) => k,
        Err(e) => {
            set_error(e.to_string());
            return GmStatus::OutOfDomain;
        }
    };
    match sse::sse_insert(&mut handle.index, &handle.keys, oid, &keywords) {
        Ok(()) => GmStatus::Ok,
        Err(e) => {
            set_error(e.to_string());
            GmStatus::InvalidArgument
        }
    }
}

/// Evaluate an encrypted range query; returns a JSON array of matching
/// object ids in hex, or NULL on error.
///
/// # Safety
/// `handle` and `params` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn gm_sse_range_query_json(
    handle: *const GmSseIndex,
    params: *const GmDomainParams,
    x_lo: u32,
    x_hi: u32,
    y_lo: u32,
    y_hi: u32,
) -> *mut c_char {
    let (Some(handle), Some(params)) = (unsafe { handle.as_ref() }, unsafe { params.as_ref() })
    else {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    };
    let range = SpatialRange::new(x_lo, x_hi, y_lo, y_hi);
    match sse::encrypted_spatial_range_query(&handle.index, &handle.keys, &range, &params.inner) {
        Ok(outcome) => {
            let ids: Vec<String> = outcome.ids.iter().map(|id| id.to_string()).collect();
            string_out(serde_json::to_string(&ids).unwrap())
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Serialize the encrypted index container into a fresh buffer.
///
/// # Safety
/// `handle` must be a live handle; `out`/`out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_sse_index_serialize(
    handle: *const GmSseIndex,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> GmStatus {
    let handle = require_nonnull!(handle);
    bytes_out(handle.index.to_bytes(), out, out_len)
}

// ---------------------------------------------------------------------
// Asymmetric location matching
// ---------------------------------------------------------------------

/// An asymmetric matching deployment: group parameters, key pair, and the
/// ciphertext flat file.
pub struct GmHveSystem {
    group: BilinearGroup,
    secret_key: hve::HveSecretKey,
    public_key: hve::HvePublicKey,
    bundles: Vec<hve::ObjectCipherBundle>,
    rng: ChaCha20Rng,
}

/// Create a deployment with a fresh composite-order group of the given
/// size (at least 32 bits; 128 is the tested desk-scale default).
#[no_mangle]
pub extern "C" fn gm_hve_system_new(
    group_bits: u32,
    seed: *const u8,
    seed_len: usize,
) -> *mut GmHveSystem {
    let Some(seed) = read_seed(seed, seed_len) else {
        set_error("null seed with nonzero length");
        return std::ptr::null_mut();
    };
    let group = match BilinearGroup::setup(group_bits, &seed) {
        Ok(g) => g,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"ffi-hve", &seed]));
    match hve::hve_setup(&group, 1, &mut rng) {
        Ok((secret_key, public_key)) => Box::into_raw(Box::new(GmHveSystem {
            group,
            secret_key,
            public_key,
            bundles: Vec::new(),
            rng,
        })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `handle` must be a live handle from [`gm_hve_system_new`].
#[no_mangle]
pub unsafe extern "C" fn gm_hve_system_free(handle: *mut GmHveSystem) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Encrypt an object's cell into the flat file (one ciphertext per tree
/// level).
///
/// # Safety
/// `handle` and `params` must be live handles; `oid` must point to 16
/// readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gm_hve_add_object(
    handle: *mut GmHveSystem,
    params: *const GmDomainParams,
    oid: *const u8,
    x: u32,
    y: u32,
) -> GmStatus {
    let params = require_nonnull!(params);
    let Some(system) = (unsafe { handle.as_mut() }) else {
        set_error("null pointer argument");
        return GmStatus::NullPointer;
    };
    let Some(oid) = read_oid(oid) else {
        set_error("object id must be 16 bytes");
        return GmStatus::NullPointer;
    };
    match hve::encrypt_object(
        &system.public_key,
        &system.group,
        oid,
        GridLocation::new(x, y),
        &params.inner,
        &mut system.rng,
    ) {
        Ok(bundle) => {
            system.bundles.push(bundle);
            GmStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            GmStatus::CryptoFailure
        }
    }
}

/// Issue a token for a square node-aligned range and scan the flat file
/// with `workers` threads; returns a JSON array of matching object ids in
/// hex, or NULL on error.
///
/// # Safety
/// `handle` and `params` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn gm_hve_query_json(
    handle: *mut GmHveSystem,
    params: *const GmDomainParams,
    x_lo: u32,
    x_hi: u32,
    y_lo: u32,
    y_hi: u32,
    workers: u32,
) -> *mut c_char {
    let (Some(system), Some(params)) = (unsafe { handle.as_mut() }, unsafe { params.as_ref() })
    else {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    };
    let range = SpatialRange::new(x_lo, x_hi, y_lo, y_hi);
    let token = match hve::token_for_range(
        &system.secret_key,
        system.public_key.sentinel(),
        &range,
        &params.inner,
        &mut system.rng,
    ) {
        Ok(t) => t,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    match hve::linear_scan(&system.group, &system.bundles, &token, workers.max(1) as usize) {
        Ok(outcome) => {
            let ids: Vec<String> = outcome.matches.iter().map(|id| id.to_string()).collect();
            string_out(serde_json::to_string(&ids).unwrap())
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

// ---------------------------------------------------------------------
// Vector commitments
// ---------------------------------------------------------------------

/// Commitment public parameters.
pub struct GmVcParams {
    inner: vc::CommitmentParams,
}

/// A commitment together with the aux data needed to open positions.
pub struct GmVcCommitment {
    commitment: vc::CommitmentString,
    aux: vc::CommitAux,
}

/// Generate commitment parameters for batches of up to `capacity`
/// messages under a modulus of `modulus_bits` (at least 128).
#[no_mangle]
pub extern "C" fn gm_vc_params_new(
    modulus_bits: u32,
    capacity: usize,
    seed: *const u8,
    seed_len: usize,
) -> *mut GmVcParams {
    let Some(seed) = read_seed(seed, seed_len) else {
        set_error("null seed with nonzero length");
        return std::ptr::null_mut();
    };
    match vc::vc_keygen(modulus_bits, capacity, &seed) {
        Ok(inner) => Box::into_raw(Box::new(GmVcParams { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `params` must be a live handle from [`gm_vc_params_new`].
#[no_mangle]
pub unsafe extern "C" fn gm_vc_params_free(params: *mut GmVcParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Commit to `count` messages given as packed coordinate words and 16-byte
/// object ids. Returns NULL on error.
///
/// # Safety
/// `params` must be a live handle; `coord_words` must point to `count`
/// u64 values and `oids` to `16 * count` bytes.
#[no_mangle]
pub unsafe extern "C" fn gm_vc_commit(
    params: *const GmVcParams,
    coord_words: *const u64,
    oids: *const u8,
    count: usize,
    seed: *const u8,
    seed_len: usize,
) -> *mut GmVcCommitment {
    let Some(params) = (unsafe { params.as_ref() }) else {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    };
    if coord_words.is_null() || oids.is_null() || count == 0 {
        set_error("empty batch or null message pointers");
        return std::ptr::null_mut();
    }
    let Some(seed) = read_seed(seed, seed_len) else {
        set_error("null seed with nonzero length");
        return std::ptr::null_mut();
    };
    let words = unsafe { std::slice::from_raw_parts(coord_words, count) };
    let oid_bytes = unsafe { std::slice::from_raw_parts(oids, 16 * count) };
    let messages: Vec<vc::CommitMessage> = words
        .iter()
        .zip(oid_bytes.chunks_exact(16))
        .map(|(word, oid)| vc::CommitMessage {
            coord_word: *word,
            object_id: ObjectId::from_slice(oid).unwrap(),
        })
        .collect();
    let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"ffi-vc-commit", &seed]));
    match vc::vc_commit(&params.inner, &messages, &mut rng) {
        Ok((commitment, aux)) => Box::into_raw(Box::new(GmVcCommitment { commitment, aux })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `commitment` must be a live handle from [`gm_vc_commit`].
#[no_mangle]
pub unsafe extern "C" fn gm_vc_commitment_free(commitment: *mut GmVcCommitment) {
    if !commitment.is_null() {
        drop(unsafe { Box::from_raw(commitment) });
    }
}

/// The commitment string (fixed width, modulus bytes).
///
/// # Safety
/// `commitment` must be a live handle; `out`/`out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gm_vc_commitment_bytes(
    commitment: *const GmVcCommitment,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> GmStatus {
    let commitment = require_nonnull!(commitment);
    bytes_out(commitment.commitment.0.clone(), out, out_len)
}

/// Produce the opening proof for one position.
///
/// # Safety
/// `params` and `commitment` must be live handles; `out`/`out_len` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gm_vc_open(
    params: *const GmVcParams,
    commitment: *const GmVcCommitment,
    index: usize,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> GmStatus {
    let params = require_nonnull!(params);
    let commitment = require_nonnull!(commitment);
    match vc::vc_open(&params.inner, &commitment.aux, index) {
        Ok(proof) => bytes_out(proof.0, out, out_len),
        Err(e) => {
            set_error(e.to_string());
            GmStatus::InvalidArgument
        }
    }
}

/// Verify a positional opening: 1 accepted, 0 rejected, negative on
/// argument errors.
///
/// # Safety
/// `params` must be a live handle; `cc` and `proof` must point to buffers
/// of the given lengths; `oid` must point to 16 readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gm_vc_verify(
    params: *const GmVcParams,
    cc: *const u8,
    cc_len: usize,
    coord_word: u64,
    oid: *const u8,
    index: usize,
    proof: *const u8,
    proof_len: usize,
) -> i32 {
    let Some(params) = (unsafe { params.as_ref() }) else {
        set_error("null pointer argument");
        return -1;
    };
    if cc.is_null() || proof.is_null() {
        set_error("null buffer argument");
        return -1;
    }
    let Some(object_id) = read_oid(oid) else {
        set_error("object id must be 16 bytes");
        return -1;
    };
    let cc = vc::CommitmentString(unsafe { std::slice::from_raw_parts(cc, cc_len) }.to_vec());
    let proof =
        vc::OpeningProof(unsafe { std::slice::from_raw_parts(proof, proof_len) }.to_vec());
    let message = vc::CommitMessage {
        coord_word,
        object_id,
    };
    vc::vc_verify(&params.inner, &cc, &message, index, &proof) as i32
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn la_params() -> *mut GmDomainParams {
        gm_domain_params_new(8, 0, 33.6996, 34.3423, -118.6846, -118.1444)
    }

    fn take_string(ptr: *mut c_char) -> String {
        assert!(!ptr.is_null());
        let s = unsafe { std::ffi::CStr::from_ptr(ptr) }
            .to_string_lossy()
            .into_owned();
        unsafe { gm_string_free(ptr) };
        s
    }

    fn take_set(json: *mut c_char) -> BTreeSet<String> {
        serde_json::from_str::<Vec<String>>(&take_string(json))
            .unwrap()
            .into_iter()
            .collect()
    }

    #[test]
    fn domain_round_trip_and_errors() {
        let params = la_params();
        assert!(!params.is_null());

        let (mut x, mut y) = (0u32, 0u32);
        let status = unsafe { gm_snap_to_grid(params, 34.0, -118.4, &mut x, &mut y) };
        assert_eq!(status, GmStatus::Ok);
        assert!(x < 8 && y < 8);

        let status = unsafe { gm_snap_to_grid(params, 0.0, 0.0, &mut x, &mut y) };
        assert_eq!(status, GmStatus::OutOfDomain);
        let msg = take_string(gm_last_error_message());
        assert!(msg.contains("outside"));

        // Not a power of two.
        assert!(gm_domain_params_new(10, 0, 0.0, 1.0, 0.0, 1.0).is_null());

        unsafe { gm_domain_params_free(params) };
    }

    #[test]
    fn keyword_and_level_value_json() {
        let params = la_params();
        let kws = take_set(unsafe { gm_object_keywords_json(params, 3, 4) });
        let expected: BTreeSet<String> = ["x011", "x01", "x0", "y100", "y10", "y1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(kws, expected);

        let (mut value, mut level) = (0u64, 0u8);
        let status =
            unsafe { gm_query_level_value(params, 2, 3, 4, 5, &mut value, &mut level) };
        assert_eq!(status, GmStatus::Ok);
        assert_eq!((value, level), (89, 2));

        let status =
            unsafe { gm_query_level_value(params, 0, 2, 0, 2, &mut value, &mut level) };
        assert_eq!(status, GmStatus::NotAligned);

        let pairs = take_string(unsafe { gm_range_decompose_json(params, 2, 7, 2, 6) });
        let parsed: Vec<(String, String)> = serde_json::from_str(&pairs).unwrap();
        assert_eq!(parsed.len(), 6);

        let values = take_string(unsafe { gm_level_values_json(params, 3, 4) });
        assert!(values.contains("122"));

        unsafe { gm_domain_params_free(params) };
    }

    #[test]
    fn sse_index_over_ffi() {
        let params = la_params();
        let index = gm_sse_index_new(128, b"ffi".as_ptr(), 3);
        assert!(!index.is_null());

        let oid = [7u8; 16];
        let status = unsafe { gm_sse_index_insert(index, params, oid.as_ptr(), 3, 4) };
        assert_eq!(status, GmStatus::Ok);
        // Duplicate rejected.
        let status = unsafe { gm_sse_index_insert(index, params, oid.as_ptr(), 3, 4) };
        assert_eq!(status, GmStatus::InvalidArgument);

        let hits = take_set(unsafe { gm_sse_range_query_json(index, params, 2, 5, 4, 7) });
        assert_eq!(hits.len(), 1);
        assert!(hits.contains(&hex::encode(oid)));

        let misses = take_set(unsafe { gm_sse_range_query_json(index, params, 0, 1, 0, 1) });
        assert!(misses.is_empty());

        let (mut ptr, mut len) = (std::ptr::null_mut(), 0usize);
        let status = unsafe { gm_sse_index_serialize(index, &mut ptr, &mut len) };
        assert_eq!(status, GmStatus::Ok);
        assert!(len > 0);
        let bytes = unsafe { std::slice::from_raw_parts(ptr, len) }.to_vec();
        assert_eq!(&bytes[..4], b"GMED");
        unsafe { gm_bytes_free(ptr, len) };

        unsafe {
            gm_sse_index_free(index);
            gm_domain_params_free(params);
        }
    }

    #[test]
    fn hve_system_over_ffi() {
        let params = la_params();
        let system = gm_hve_system_new(64, b"ffi-hve".as_ptr(), 7);
        assert!(!system.is_null());

        let inside = [1u8; 16];
        let outside = [2u8; 16];
        assert_eq!(
            unsafe { gm_hve_add_object(system, params, inside.as_ptr(), 3, 4) },
            GmStatus::Ok
        );
        assert_eq!(
            unsafe { gm_hve_add_object(system, params, outside.as_ptr(), 7, 0) },
            GmStatus::Ok
        );

        let hits = take_set(unsafe { gm_hve_query_json(system, params, 2, 3, 4, 5, 2) });
        assert_eq!(hits.len(), 1);
        assert!(hits.contains(&hex::encode(inside)));

        // Non-aligned range errors and reports a message.
        let ptr = unsafe { gm_hve_query_json(system, params, 1, 2, 1, 2, 1) };
        assert!(ptr.is_null());
        let msg = take_string(gm_last_error_message());
        assert!(msg.contains("aligned"));

        unsafe {
            gm_hve_system_free(system);
            gm_domain_params_free(params);
        }
    }

    #[test]
    fn vc_commit_open_verify_over_ffi() {
        let params = gm_vc_params_new(256, 4, b"ffi-vc".as_ptr(), 6);
        assert!(!params.is_null());

        let words = [3u64 << 32 | 4, 9u64 << 32 | 9];
        let oids = [[5u8; 16], [6u8; 16]].concat();
        let commitment = unsafe {
            gm_vc_commit(
                params,
                words.as_ptr(),
                oids.as_ptr(),
                2,
                b"r".as_ptr(),
                1,
            )
        };
        assert!(!commitment.is_null());

        let (mut cc_ptr, mut cc_len) = (std::ptr::null_mut(), 0usize);
        assert_eq!(
            unsafe { gm_vc_commitment_bytes(commitment, &mut cc_ptr, &mut cc_len) },
            GmStatus::Ok
        );
        let (mut proof_ptr, mut proof_len) = (std::ptr::null_mut(), 0usize);
        assert_eq!(
            unsafe { gm_vc_open(params, commitment, 0, &mut proof_ptr, &mut proof_len) },
            GmStatus::Ok
        );

        let ok = unsafe {
            gm_vc_verify(
                params,
                cc_ptr,
                cc_len,
                words[0],
                oids[..16].as_ptr(),
                0,
                proof_ptr,
                proof_len,
            )
        };
        assert_eq!(ok, 1);
        // Wrong coordinate word rejected.
        let bad = unsafe {
            gm_vc_verify(
                params,
                cc_ptr,
                cc_len,
                words[0] ^ 1,
                oids[..16].as_ptr(),
                0,
                proof_ptr,
                proof_len,
            )
        };
        assert_eq!(bad, 0);

        unsafe {
            gm_bytes_free(cc_ptr, cc_len);
            gm_bytes_free(proof_ptr, proof_len);
            gm_vc_commitment_free(commitment);
            gm_vc_params_free(params);
        }
    }

    #[test]
    fn generated_header_exists() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/geomarket.h");
        let text = std::fs::read_to_string(header).unwrap();
        assert!(text.contains("GEOMARKET_H"));
        assert!(text.contains("gm_sse_index_new"));
        assert!(text.contains("gm_hve_query_json"));
        assert!(text.contains("gm_vc_verify"));
        assert!(text.contains("GmStatus"));
    }
}
