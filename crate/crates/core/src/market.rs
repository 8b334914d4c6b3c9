//! End-to-end marketplace orchestration across owners, buyers, the trusted
//! curator (symmetric search), the trusted authority (asymmetric search),
//! bulk storage and the ledger.
//!
//! Two advertisement/search designs coexist in one world:
//!
//! * symmetric: owners hand plaintext locations to the curator, who holds
//!   the index keys and maintains a sub-linear encrypted index. Buyers get
//!   per-pair search tokens and run the index lookups themselves.
//! * asymmetric: owners encrypt locations under the authority's public
//!   key; the authority holds only the secret key and issues one token per
//!   (square, node-aligned) query. Search is a parallel linear scan over a
//!   ciphertext flat file. The authority never sees a plaintext location:
//!   its intake accepts ciphertext bundles only.
//!
//! Every advertised object is covered by exactly one on-ledger vector
//! commitment position binding (geo-tag, object id); the key envelope
//! delivered on purchase carries the opening so the buyer can verify it or
//! dispute with it.

use crate::crypto::{self, EnvelopeKeys};
use crate::geo::{self, DomainParams, GeoError, GridLocation, SpatialRange};
use crate::group::{BilinearGroup, GroupError};
use crate::hve::{self, FlatFile, HveError, HvePublicKey, HveSecretKey, ObjectCipherBundle};
use crate::ledger::{
    Address, DisputeEvidence, GasSchedule, Ledger, LedgerError, OfferId, OfferStatus, SpamPolicy,
    WEI_PER_ETHER,
};
use crate::sse::{self, DocumentDatabase, EncryptedIndex, SseError, SseKeys};
use crate::store::{BulkStore, StoreError};
use crate::types::{IndexId, ObjectId};
use crate::vc::{self, CommitAux, CommitmentParams, VcError};
use rand::rngs::ChaCha20Rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::ledger::CommitmentId as LedgerCommitmentId;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("unknown owner account")]
    UnknownOwner,
    #[error("unknown buyer account")]
    UnknownBuyer,
    #[error("unknown object")]
    UnknownObject,
    #[error("curator refused: owner reached the {limit}-object encryption limit")]
    CuratorLimitExceeded { limit: u32 },
    #[error("batch of {got} exceeds the commitment capacity {capacity}")]
    BatchTooLarge { got: usize, capacity: usize },
    #[error("empty advertisement batch")]
    EmptyBatch,
    #[error("key envelope missing or unreadable")]
    EnvelopeUnavailable,
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Sse(#[from] SseError),
    #[error(transparent)]
    Hve(#[from] HveError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Crypto(#[from] crypto::CryptoError),
}

/// Tunables for a marketplace world.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketConfig {
    pub domain: DomainParams,
    /// Symmetric index security level (128 or 256).
    pub sse_security_bits: u32,
    /// Composite-order group size for the asymmetric design.
    pub group_bits: u32,
    pub vc_modulus_bits: u32,
    /// Commitment batch capacity (objects per on-chain commitment).
    pub vc_batch_capacity: usize,
    /// Fee per issued search token, paid to the curator or authority.
    pub token_fee_wei: u128,
    pub default_price_wei: u128,
    /// Curator-side cap on objects encrypted per owner.
    pub curator_object_limit: u32,
    pub initial_balance_wei: u128,
    /// Chunk size for bulk-stored index payloads.
    pub chunk_size: usize,
    /// Worker threads for linear scans.
    pub scan_workers: usize,
    pub gas: GasSchedule,
    pub policy: SpamPolicy,
}

impl MarketConfig {
    pub fn desk_scale(domain: DomainParams) -> Self {
        MarketConfig {
            domain,
            sse_security_bits: 128,
            group_bits: 128,
            vc_modulus_bits: 256,
            vc_batch_capacity: 20,
            token_fee_wei: WEI_PER_ETHER / 10_000,
            default_price_wei: WEI_PER_ETHER / 100,
            curator_object_limit: 1_000,
            initial_balance_wei: 10 * WEI_PER_ETHER,
            chunk_size: 1 << 16,
            scan_workers: 1,
            gas: GasSchedule::default(),
            policy: SpamPolicy::default(),
        }
    }
}

/// One object to advertise: a geo-tagged payload with an optional price
/// and an optional fake advertised position (fraud scenarios commit and
/// index the fake cell while the payload's true cell differs).
#[derive(Debug, Clone)]
pub struct AdvertiseItem {
    pub lat: f64,
    pub lon: f64,
    pub payload: Vec<u8>,
    pub price_wei: Option<u128>,
    pub advertised_override: Option<(f64, f64)>,
}

impl AdvertiseItem {
    pub fn new(lat: f64, lon: f64, payload: Vec<u8>) -> Self {
        AdvertiseItem {
            lat,
            lon,
            payload,
            price_wei: None,
            advertised_override: None,
        }
    }
}

/// What a buyer learns from a search: pseudonymous owner plus object id,
/// nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub object_id: ObjectId,
    pub owner: Address,
}

/// Work counters attached to a search.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub tokens_issued: u64,
    pub conjunctive_queries: u64,
    pub cross_tag_tests: u64,
    pub first_keyword_postings: u64,
    pub pairings: u64,
    pub fee_paid_wei: u128,
}

#[derive(Debug, Clone)]
pub struct SearchResponse {
    pub hits: Vec<SearchHit>,
    pub stats: SearchStats,
}

/// Sealed key-delivery payload: the object key plus the commitment opening
/// the buyer can verify or dispute with.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct KeyDelivery {
    aes_key: Vec<u8>,
    commitment_id: u64,
    index: usize,
    opened: vc::CommitMessage,
    proof: vc::OpeningProof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurchaseOutcome {
    pub offer_id: OfferId,
    pub status: OfferStatus,
    /// Decrypted payload bytes (present when key delivery succeeded).
    pub payload: Option<Vec<u8>>,
    /// Whether the delivered commitment opening verified on-chain data.
    pub opening_verified: bool,
}

struct OwnedObject {
    true_location: GridLocation,
    advertised_location: GridLocation,
    aes_key: Vec<u8>,
    price_wei: u128,
    commitment_ref: (usize, usize), // (batch, position)
}

struct CommitmentBatch {
    ledger_id: LedgerCommitmentId,
    aux: CommitAux,
}

/// Owner-side state: commitment parameters and aux data, object registry.
pub struct OwnerSession {
    pub account: Address,
    vc_params: CommitmentParams,
    batches: Vec<CommitmentBatch>,
    objects: BTreeMap<ObjectId, OwnedObject>,
}

impl OwnerSession {
    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &ObjectId> {
        self.objects.keys()
    }

    /// The on-ledger commitment reference binding an object: commitment id
    /// and position.
    pub fn commitment_ref(&self, object_id: &ObjectId) -> Option<(LedgerCommitmentId, usize)> {
        let obj = self.objects.get(object_id)?;
        let batch = &self.batches[obj.commitment_ref.0];
        Some((batch.ledger_id, obj.commitment_ref.1))
    }

    pub fn advertised_location(&self, object_id: &ObjectId) -> Option<GridLocation> {
        self.objects.get(object_id).map(|o| o.advertised_location)
    }

    pub fn true_location(&self, object_id: &ObjectId) -> Option<GridLocation> {
        self.objects.get(object_id).map(|o| o.true_location)
    }

    fn open_commitment(
        &self,
        object_id: &ObjectId,
    ) -> Option<(LedgerCommitmentId, usize, vc::CommitMessage, vc::OpeningProof)> {
        let obj = self.objects.get(object_id)?;
        let batch = &self.batches[obj.commitment_ref.0];
        let idx = obj.commitment_ref.1;
        let proof = vc::vc_open(&self.vc_params, &batch.aux, idx).ok()?;
        Some((batch.ledger_id, idx, batch.aux.messages[idx], proof))
    }
}

/// Curator state (symmetric design): index keys, the live encrypted
/// index, plaintext intake records, and the per-owner spam counter.
pub struct CuratorState {
    pub account: Address,
    pub index_id: IndexId,
    keys: SseKeys,
    index: EncryptedIndex,
    ddb: DocumentDatabase,
    locations: BTreeMap<ObjectId, GridLocation>,
    directory: BTreeMap<ObjectId, Address>,
    owner_counts: BTreeMap<Address, u32>,
    dirty: bool,
}

impl CuratorState {
    pub fn index(&self) -> &EncryptedIndex {
        &self.index
    }

    pub fn keys(&self) -> &SseKeys {
        &self.keys
    }

    /// Plaintext intake held by the curator; the correctness oracle for
    /// benchmarks.
    pub fn plaintext_locations(&self) -> &BTreeMap<ObjectId, GridLocation> {
        &self.locations
    }

    pub fn document_database(&self) -> &DocumentDatabase {
        &self.ddb
    }
}

/// Authority state (asymmetric design): the secret key, published public
/// key, and the ciphertext flat file. Holds no plaintext locations; its
/// intake accepts only ciphertext bundles.
pub struct AuthorityState {
    pub account: Address,
    pub file_handle: IndexId,
    group: BilinearGroup,
    secret_key: HveSecretKey,
    public_key: HvePublicKey,
    file: FlatFile,
    directory: BTreeMap<ObjectId, Address>,
    dirty: bool,
}

impl AuthorityState {
    pub fn public_key(&self) -> &HvePublicKey {
        &self.public_key
    }

    pub fn group(&self) -> &BilinearGroup {
        &self.group
    }

    pub fn flat_file(&self) -> &FlatFile {
        &self.file
    }

    /// Ciphertext intake: bundle plus pseudonymous submitter only.
    fn append(&mut self, bundle: ObjectCipherBundle, owner: Address) {
        self.directory.insert(bundle.object_id, owner);
        self.file.append(bundle);
        self.dirty = true;
    }
}

/// Buyer-side state: envelope keys and accumulated results.
pub struct BuyerSession {
    pub account: Address,
    envelope: EnvelopeKeys,
    pub results: Vec<SearchHit>,
}

/// The whole simulated deployment.
pub struct World {
    pub config: MarketConfig,
    pub ledger: Ledger,
    pub store: BulkStore,
    curator: CuratorState,
    authority: AuthorityState,
    owners: BTreeMap<Address, OwnerSession>,
    buyers: BTreeMap<Address, BuyerSession>,
    rng: ChaCha20Rng,
}

impl World {
    pub fn new(config: MarketConfig, seed: &[u8]) -> Result<Self, MarketError> {
        let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"world", seed]));
        let mut ledger = Ledger::new(config.gas.clone(), config.policy.clone())?;
        let store = BulkStore::in_memory();

        // Curator bootstrap: keys, empty index, on-ledger handle.
        let curator_account = Address::from_public_key(&rng_bytes(&mut rng));
        ledger.create_account(curator_account, config.initial_balance_wei)?;
        let sse_keys = SseKeys::generate(config.sse_security_bits, &rng_bytes(&mut rng))?;
        let index_id = IndexId::from_rng(&mut rng);
        ledger.publish_index_info(curator_account, index_id.as_bytes().to_vec())?;

        // Authority bootstrap: group, key pair, empty flat file, handle.
        let authority_account = Address::from_public_key(&rng_bytes(&mut rng));
        ledger.create_account(authority_account, config.initial_balance_wei)?;
        let group = BilinearGroup::setup(config.group_bits, &rng_bytes(&mut rng))?;
        let mut hve_rng = crypto::fork_rng(&mut rng, "hve-setup");
        let (secret_key, public_key) = hve::hve_setup(&group, 1, &mut hve_rng)?;
        let file_handle = IndexId::from_rng(&mut rng);
        ledger.publish_index_info(authority_account, file_handle.as_bytes().to_vec())?;

        Ok(World {
            config,
            ledger,
            store,
            curator: CuratorState {
                account: curator_account,
                index_id,
                keys: sse_keys,
                index: EncryptedIndex::new_empty(128)?,
                ddb: DocumentDatabase::new(),
                locations: BTreeMap::new(),
                directory: BTreeMap::new(),
                owner_counts: BTreeMap::new(),
                dirty: true,
            },
            authority: AuthorityState {
                account: authority_account,
                file_handle,
                group,
                secret_key,
                public_key,
                file: FlatFile::new(),
                directory: BTreeMap::new(),
                dirty: true,
            },
            owners: BTreeMap::new(),
            buyers: BTreeMap::new(),
            rng,
        })
    }

    pub fn curator(&self) -> &CuratorState {
        &self.curator
    }

    pub fn authority(&self) -> &AuthorityState {
        &self.authority
    }

    pub fn owner(&self, account: &Address) -> Option<&OwnerSession> {
        self.owners.get(account)
    }

    pub fn buyer(&self, account: &Address) -> Option<&BuyerSession> {
        self.buyers.get(account)
    }

    /// Create, fund and register an owner; publishes commitment parameters
    /// on the ledger.
    pub fn create_owner(&mut self) -> Result<Address, MarketError> {
        let account = Address::from_public_key(&rng_bytes(&mut self.rng));
        self.ledger
            .create_account(account, self.config.initial_balance_wei)?;
        self.ledger.register_owner(account)?;
        let vc_params = vc::vc_keygen(
            self.config.vc_modulus_bits,
            self.config.vc_batch_capacity,
            &rng_bytes(&mut self.rng),
        )?;
        self.ledger
            .set_commitment_params(account, vc_params.digest())?;
        self.owners.insert(
            account,
            OwnerSession {
                account,
                vc_params,
                batches: Vec::new(),
                objects: BTreeMap::new(),
            },
        );
        Ok(account)
    }

    pub fn create_buyer(&mut self) -> Result<Address, MarketError> {
        let account = Address::from_public_key(&rng_bytes(&mut self.rng));
        self.ledger
            .create_account(account, self.config.initial_balance_wei)?;
        let envelope = EnvelopeKeys::generate(&mut self.rng);
        self.buyers.insert(
            account,
            BuyerSession {
                account,
                envelope,
                results: Vec::new(),
            },
        );
        Ok(account)
    }

    /// Common advertisement front half: snap locations, store encrypted
    /// payloads, post one commitment covering the batch.
    fn advertise_common(
        &mut self,
        owner_addr: Address,
        items: &[AdvertiseItem],
    ) -> Result<Vec<(ObjectId, GridLocation, GridLocation)>, MarketError> {
        if items.is_empty() {
            return Err(MarketError::EmptyBatch);
        }
        if items.len() > self.config.vc_batch_capacity {
            return Err(MarketError::BatchTooLarge {
                got: items.len(),
                capacity: self.config.vc_batch_capacity,
            });
        }
        if !self.owners.contains_key(&owner_addr) {
            return Err(MarketError::UnknownOwner);
        }

        // Snap all coordinates first so a bad item aborts before any state
        // changes.
        let mut placed = Vec::with_capacity(items.len());
        for item in items {
            let true_loc = geo::snap_to_grid(item.lat, item.lon, &self.config.domain)?;
            let adv_loc = match item.advertised_override {
                Some((lat, lon)) => geo::snap_to_grid(lat, lon, &self.config.domain)?,
                None => true_loc,
            };
            placed.push((true_loc, adv_loc));
        }

        let mut out = Vec::with_capacity(items.len());
        let mut messages = Vec::with_capacity(items.len());
        let mut object_keys = Vec::with_capacity(items.len());
        for (item, (true_loc, adv_loc)) in items.iter().zip(&placed) {
            let object_id = ObjectId::from_rng(&mut self.rng);
            let mut aes_key = vec![0u8; 16];
            self.rng.fill_bytes(&mut aes_key);
            let mut enc_rng = crypto::fork_rng(&mut self.rng, "payload");
            let ciphertext =
                crypto::aead_encrypt(&aes_key, &item.payload, object_id.as_bytes(), &mut enc_rng)?;
            self.store.put(object_id.as_bytes(), &ciphertext)?;
            messages.push(vc::encode_location_message(*adv_loc, object_id));
            object_keys.push((object_id, aes_key));
            out.push((object_id, *true_loc, *adv_loc));
        }

        // One on-ledger commitment covers the whole batch; deposit per the
        // spam policy.
        let owner = self.owners.get_mut(&owner_addr).unwrap();
        let mut commit_rng = crypto::fork_rng(&mut self.rng, "commit");
        let (cc, aux) = vc::vc_commit(&owner.vc_params, &messages, &mut commit_rng)?;
        let deposit = self.ledger.policy().min_deposit_wei;
        let (_, ledger_id) = self.ledger.submit_commitment(owner_addr, cc, deposit)?;
        let batch_index = owner.batches.len();
        owner.batches.push(CommitmentBatch { ledger_id, aux });

        for (pos, ((object_id, aes_key), (true_loc, adv_loc))) in
            object_keys.into_iter().zip(&placed).enumerate()
        {
            let price = items[pos].price_wei.unwrap_or(self.config.default_price_wei);
            owner.objects.insert(
                object_id,
                OwnedObject {
                    true_location: *true_loc,
                    advertised_location: *adv_loc,
                    aes_key,
                    price_wei: price,
                    commitment_ref: (batch_index, pos),
                },
            );
        }
        Ok(out)
    }

    /// Advertise through the curator: plaintext locations go to the
    /// curator, which indexes them under its symmetric keys.
    pub fn sse_advertise(
        &mut self,
        owner_addr: Address,
        items: &[AdvertiseItem],
    ) -> Result<Vec<ObjectId>, MarketError> {
        // Curator spam cap, checked before anything changes hands.
        let current = self
            .curator
            .owner_counts
            .get(&owner_addr)
            .copied()
            .unwrap_or(0);
        if current + items.len() as u32 > self.config.curator_object_limit {
            return Err(MarketError::CuratorLimitExceeded {
                limit: self.config.curator_object_limit,
            });
        }
        let placed = self.advertise_common(owner_addr, items)?;
        for (object_id, _true_loc, adv_loc) in &placed {
            let keywords = geo::object_keywords(*adv_loc, &self.config.domain)?;
            sse::sse_insert(&mut self.curator.index, &self.curator.keys, *object_id, &keywords)?;
            self.curator.ddb.insert(*object_id, keywords)?;
            self.curator.locations.insert(*object_id, *adv_loc);
            self.curator.directory.insert(*object_id, owner_addr);
        }
        *self.curator.owner_counts.entry(owner_addr).or_insert(0) += placed.len() as u32;
        self.curator.dirty = true;
        Ok(placed.into_iter().map(|(id, _, _)| id).collect())
    }

    /// Advertise through the authority: the owner encrypts the advertised
    /// cell locally and submits ciphertext bundles only.
    pub fn hve_advertise(
        &mut self,
        owner_addr: Address,
        items: &[AdvertiseItem],
    ) -> Result<Vec<ObjectId>, MarketError> {
        let placed = self.advertise_common(owner_addr, items)?;
        for (object_id, _true_loc, adv_loc) in &placed {
            let mut enc_rng = crypto::fork_rng(&mut self.rng, "hve-encrypt");
            let bundle = hve::encrypt_object(
                &self.authority.public_key,
                &self.authority.group,
                *object_id,
                *adv_loc,
                &self.config.domain,
                &mut enc_rng,
            )?;
            self.authority.append(bundle, owner_addr);
        }
        Ok(placed.into_iter().map(|(id, _, _)| id).collect())
    }

    /// Push the curator's current index into bulk storage under its
    /// published handle.
    fn sync_curator_index(&mut self) -> Result<(), MarketError> {
        if self.curator.dirty {
            let bytes = self.curator.index.to_bytes();
            self.store.put_chunked(
                self.curator.index_id.as_bytes(),
                &bytes,
                self.config.chunk_size,
            )?;
            // Pseudonym directory rides alongside the index.
            let dir: Vec<(ObjectId, Address)> = self
                .curator
                .directory
                .iter()
                .map(|(k, v)| (*k, *v))
                .collect();
            self.store
                .put(&dir_key(&self.curator.index_id), &serde_json::to_vec(&dir).unwrap())?;
            self.curator.dirty = false;
        }
        Ok(())
    }

    fn sync_authority_file(&mut self) -> Result<(), MarketError> {
        if self.authority.dirty {
            let bytes = self.authority.file.to_bytes(&self.authority.group);
            self.store.put_chunked(
                self.authority.file_handle.as_bytes(),
                &bytes,
                self.config.chunk_size,
            )?;
            let dir: Vec<(ObjectId, Address)> = self
                .authority
                .directory
                .iter()
                .map(|(k, v)| (*k, *v))
                .collect();
            self.store.put(
                &dir_key(&self.authority.file_handle),
                &serde_json::to_vec(&dir).unwrap(),
            )?;
            self.authority.dirty = false;
        }
        Ok(())
    }

    /// Buyer-side symmetric range search: fee per token, tokens from the
    /// curator, index fetched from bulk storage and evaluated locally.
    pub fn buyer_search_sse(
        &mut self,
        buyer_addr: Address,
        range: &SpatialRange,
    ) -> Result<SearchResponse, MarketError> {
        if !self.buyers.contains_key(&buyer_addr) {
            return Err(MarketError::UnknownBuyer);
        }
        self.sync_curator_index()?;
        // Decompose first: an invalid range costs nothing.
        let pairs = geo::decompose_range_query(range, &self.config.domain)?;

        let fee = self.config.token_fee_wei * pairs.len() as u128;
        if fee > 0 {
            self.ledger.transfer(buyer_addr, self.curator.account, fee)?;
        }

        // Buyer fetches the index and directory via the published handle.
        let index_bytes = self.store.get_chunked(self.curator.index_id.as_bytes())?;
        let index = EncryptedIndex::from_bytes(&index_bytes)?;
        let directory: BTreeMap<ObjectId, Address> =
            serde_json::from_slice::<Vec<(ObjectId, Address)>>(
                &self.store.get(&dir_key(&self.curator.index_id))?,
            )
            .map_err(|_| MarketError::EnvelopeUnavailable)?
            .into_iter()
            .collect();

        let mut stats = SearchStats {
            tokens_issued: pairs.len() as u64,
            fee_paid_wei: fee,
            ..SearchStats::default()
        };
        let mut ids = std::collections::BTreeSet::new();
        for (first, second) in pairs {
            let token = sse::sse_token(&self.curator.keys, &[first, second])?;
            let outcome = sse::sse_search(&index, &token);
            stats.conjunctive_queries += 1;
            stats.cross_tag_tests += outcome.cross_tag_tests;
            stats.first_keyword_postings += outcome.first_keyword_postings;
            ids.extend(outcome.ids);
        }
        let hits: Vec<SearchHit> = ids
            .into_iter()
            .filter_map(|object_id| {
                directory.get(&object_id).map(|owner| SearchHit {
                    object_id,
                    owner: *owner,
                })
            })
            .collect();
        self.buyers.get_mut(&buyer_addr).unwrap().results = hits.clone();
        Ok(SearchResponse { hits, stats })
    }

    /// Buyer-side asymmetric range search: the authority validates the
    /// square/aligned restriction before issuing exactly one token; the
    /// buyer scans the flat file.
    pub fn buyer_search_hve(
        &mut self,
        buyer_addr: Address,
        range: &SpatialRange,
    ) -> Result<SearchResponse, MarketError> {
        if !self.buyers.contains_key(&buyer_addr) {
            return Err(MarketError::UnknownBuyer);
        }
        self.sync_authority_file()?;
        // Authority-side validation happens before any fee or token.
        geo::hve_query_value(range, &self.config.domain)?;

        let fee = self.config.token_fee_wei;
        if fee > 0 {
            self.ledger
                .transfer(buyer_addr, self.authority.account, fee)?;
        }
        let mut token_rng = crypto::fork_rng(&mut self.rng, "hve-token");
        let token = hve::token_for_range(
            &self.authority.secret_key,
            self.authority.public_key.sentinel(),
            range,
            &self.config.domain,
            &mut token_rng,
        )?;

        let file_bytes = self
            .store
            .get_chunked(self.authority.file_handle.as_bytes())?;
        let file = FlatFile::from_bytes(&file_bytes, &self.authority.group)?;
        let directory: BTreeMap<ObjectId, Address> =
            serde_json::from_slice::<Vec<(ObjectId, Address)>>(
                &self.store.get(&dir_key(&self.authority.file_handle))?,
            )
            .map_err(|_| MarketError::EnvelopeUnavailable)?
            .into_iter()
            .collect();

        let outcome = hve::linear_scan(
            &self.authority.group,
            &file.bundles,
            &token,
            self.config.scan_workers,
        )?;
        let stats = SearchStats {
            tokens_issued: 1,
            pairings: outcome.pairings,
            fee_paid_wei: fee,
            ..SearchStats::default()
        };
        let hits: Vec<SearchHit> = outcome
            .matches
            .into_iter()
            .filter_map(|object_id| {
                directory.get(&object_id).map(|owner| SearchHit {
                    object_id,
                    owner: *owner,
                })
            })
            .collect();
        self.buyers.get_mut(&buyer_addr).unwrap().results = hits.clone();
        Ok(SearchResponse { hits, stats })
    }

    /// Full purchase flow: escrow an offer, owner delivers the sealed key
    /// envelope, buyer decrypts and verifies the commitment opening.
    /// With `ground_truth` given, the buyer compares the advertised cell
    /// against it and disputes on mismatch; otherwise the flow settles
    /// honestly (window elapses, owner withdraws).
    pub fn purchase(
        &mut self,
        buyer_addr: Address,
        object_id: ObjectId,
        ground_truth: Option<GridLocation>,
    ) -> Result<PurchaseOutcome, MarketError> {
        if !self.buyers.contains_key(&buyer_addr) {
            return Err(MarketError::UnknownBuyer);
        }
        let (owner_addr, price) = self
            .owners
            .iter()
            .find_map(|(addr, session)| {
                session
                    .objects
                    .get(&object_id)
                    .map(|o| (*addr, o.price_wei))
            })
            .ok_or(MarketError::UnknownObject)?;

        let (_, offer_id) = self
            .ledger
            .make_offer(buyer_addr, owner_addr, object_id, price)?;

        // Owner responds with the sealed envelope: object key plus the
        // commitment opening.
        let owner = self.owners.get(&owner_addr).unwrap();
        let (ledger_cid, index, opened, proof) = owner
            .open_commitment(&object_id)
            .ok_or(MarketError::UnknownObject)?;
        let aes_key = owner.objects.get(&object_id).unwrap().aes_key.clone();
        let delivery = KeyDelivery {
            aes_key,
            commitment_id: ledger_cid.0,
            index,
            opened,
            proof,
        };
        let buyer_pk = self.buyers.get(&buyer_addr).unwrap().envelope.public.clone();
        let mut seal_rng = crypto::fork_rng(&mut self.rng, "envelope");
        let envelope = crypto::seal_envelope(
            &buyer_pk,
            &serde_json::to_vec(&delivery).unwrap(),
            &mut seal_rng,
        )?;
        self.ledger.deliver_key(owner_addr, offer_id, envelope)?;

        // Buyer retrieves and opens the envelope, downloads and decrypts
        // the payload.
        let sealed = self
            .ledger
            .key_envelope(buyer_addr, offer_id)
            .ok_or(MarketError::EnvelopeUnavailable)?
            .to_vec();
        let buyer = self.buyers.get(&buyer_addr).unwrap();
        let delivery: KeyDelivery =
            serde_json::from_slice(&crypto::open_envelope(&buyer.envelope, &sealed)?)
                .map_err(|_| MarketError::EnvelopeUnavailable)?;
        let ciphertext = self.store.get(object_id.as_bytes())?;
        let payload =
            crypto::aead_decrypt(&delivery.aes_key, &ciphertext, object_id.as_bytes())?;

        // Verify the opening against the on-ledger commitment.
        let owner_session = self.owners.get(&owner_addr).unwrap();
        let record = self
            .ledger
            .commitment(LedgerCommitmentId(delivery.commitment_id))
            .ok_or(MarketError::UnknownObject)?;
        let opening_verified = vc::vc_verify(
            &owner_session.vc_params,
            &record.commitment,
            &delivery.opened,
            delivery.index,
            &delivery.proof,
        ) && delivery.opened.object_id == object_id;

        let advertised = vc::decode_location(&delivery.opened);
        let dispute_worthy = match ground_truth {
            Some(actual) => advertised != actual,
            None => false,
        };

        if dispute_worthy {
            let evidence = DisputeEvidence {
                params: owner_session.vc_params.clone(),
                commitment_id: LedgerCommitmentId(delivery.commitment_id),
                opened: delivery.opened,
                index: delivery.index,
                proof: delivery.proof,
                actual_location: ground_truth.unwrap(),
            };
            self.ledger.dispute(buyer_addr, offer_id, evidence)?;
        } else {
            self.ledger
                .advance_blocks(self.ledger.policy().dispute_window_blocks);
            self.ledger.withdraw_payment(owner_addr, offer_id)?;
        }

        let status = self.ledger.offer(offer_id).unwrap().status;
        Ok(PurchaseOutcome {
            offer_id,
            status,
            payload: Some(payload),
            opening_verified,
        })
    }

    /// Plaintext filter over everything ever advertised (curator and
    /// authority directories combined), by advertised cell: the
    /// correctness oracle for end-to-end tests.
    pub fn oracle_search(&self, range: &SpatialRange) -> Vec<SearchHit> {
        let mut hits = Vec::new();
        for session in self.owners.values() {
            for (object_id, obj) in &session.objects {
                if range.contains(obj.advertised_location) {
                    hits.push(SearchHit {
                        object_id: *object_id,
                        owner: session.account,
                    });
                }
            }
        }
        hits.sort_by_key(|h| h.object_id);
        hits
    }

    /// Deterministic world RNG handle for callers composing scenarios.
    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

fn dir_key(handle: &IndexId) -> Vec<u8> {
    let mut k = handle.as_bytes().to_vec();
    k.extend_from_slice(b"/directory");
    k
}

fn rng_bytes(rng: &mut ChaCha20Rng) -> [u8; 32] {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b);
    b
}
