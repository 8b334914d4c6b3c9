//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured facts when it holds.
//!
//! Wall-clock performance is hardware-bound, so the suite checks counting
//! laws, exact worked values, oracle equivalence and cost totals instead
//! of absolute timings; the only timing assertions are a generous overall
//! budget for the exhaustive-equivalence run and a monotone trend for the
//! parallel scan.

use geomarket::bench;
use geomarket::crypto::seeded_rng;
use geomarket::geo::{
    self, aligned_query_keywords, brc_cover_1d, hve_level_values, hve_query_value,
    object_keywords, DomainParams, GridLocation, SpatialRange, LA_BBOX,
};
use geomarket::group::BilinearGroup;
use geomarket::hve;
use geomarket::ledger::{
    Address, DepositState, GasSchedule, Ledger, LedgerError, OfferStatus, RevertReason,
    SpamPolicy, WEI_PER_ETHER,
};
use geomarket::sse::{self, DocumentDatabase};
use geomarket::types::ObjectId;
use geomarket::vc;
use rand::RngExt;
use std::collections::BTreeSet;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

// The parallel-scan criterion times multi-threaded work, so the suite runs
// one criterion at a time.
static GATE: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn params(log_l: u8, h_max: u8) -> DomainParams {
    DomainParams::new(log_l, h_max, LA_BBOX).unwrap()
}

fn oid(n: u64) -> ObjectId {
    let mut b = [0u8; 16];
    b[..8].copy_from_slice(&n.to_be_bytes());
    ObjectId(b)
}

/// All node-aligned square ranges of an `L = 2^log_l` grid.
fn aligned_squares(log_l: u8) -> Vec<SpatialRange> {
    let l = 1u32 << log_l;
    let mut out = Vec::new();
    for level in 0..=log_l {
        let step = 1u32 << (log_l - level);
        for x in (0..l).step_by(step as usize) {
            for y in (0..l).step_by(step as usize) {
                out.push(SpatialRange::new(x, x + step - 1, y, y + step - 1));
            }
        }
    }
    out
}

/// Criterion 1: on the 16x16 grid, symmetric search over every aligned
/// square and 1000 random rectangles, and asymmetric level-targeted
/// matching over every aligned square, agree exactly with a plaintext
/// filter.
#[test]
fn acceptance_1_encoding_oracle_equivalence() {
    let _gate = serial();
    let started = Instant::now();
    let p = params(4, 0);
    let l = p.l();

    // One object per cell.
    let cells: Vec<(ObjectId, GridLocation)> = (0..l)
        .flat_map(|y| (0..l).map(move |x| GridLocation::new(x, y)))
        .enumerate()
        .map(|(i, loc)| (oid(i as u64), loc))
        .collect();

    let mut ddb = DocumentDatabase::new();
    for (id, loc) in &cells {
        ddb.insert(*id, object_keywords(*loc, &p).unwrap()).unwrap();
    }
    let (keys, edb) = sse::sse_setup(&ddb, 128, b"acceptance-1").unwrap();

    let group = BilinearGroup::setup(128, b"acceptance-1-group").unwrap();
    let mut rng = seeded_rng(b"acceptance-1-rng");
    let (sk, pk) = hve::hve_setup(&group, 1, &mut rng).unwrap();
    let bundles: Vec<hve::ObjectCipherBundle> = cells
        .iter()
        .map(|(id, loc)| hve::encrypt_object(&pk, &group, *id, *loc, &p, &mut rng).unwrap())
        .collect();

    let oracle = |r: &SpatialRange| -> BTreeSet<ObjectId> {
        cells
            .iter()
            .filter(|(_, loc)| r.contains(*loc))
            .map(|(id, _)| *id)
            .collect()
    };

    let squares = aligned_squares(4);
    assert_eq!(squares.len(), 341);
    let mut mismatches = 0u64;
    for r in &squares {
        let expected = oracle(r);
        let got_sse = sse::encrypted_spatial_range_query(&edb, &keys, r, &p)
            .unwrap()
            .ids;
        if got_sse != expected {
            mismatches += 1;
        }
        let token = hve::token_for_range(&sk, pk.sentinel(), r, &p, &mut rng).unwrap();
        let got_hve: BTreeSet<ObjectId> = bundles
            .iter()
            .filter(|b| {
                hve::single_level_match(&group, b, &token)
                    .unwrap()
                    .is_match()
            })
            .map(|b| b.object_id)
            .collect();
        if got_hve != expected {
            mismatches += 1;
        }
    }

    for _ in 0..1000 {
        let x_lo = rng.random_range(0..l);
        let x_hi = rng.random_range(x_lo..l);
        let y_lo = rng.random_range(0..l);
        let y_hi = rng.random_range(y_lo..l);
        let r = SpatialRange::new(x_lo, x_hi, y_lo, y_hi);
        let got = sse::encrypted_spatial_range_query(&edb, &keys, &r, &p)
            .unwrap()
            .ids;
        if got != oracle(&r) {
            mismatches += 1;
        }
    }

    let elapsed = started.elapsed();
    assert_eq!(mismatches, 0, "oracle mismatches detected");
    assert!(
        elapsed.as_secs() < 300,
        "exhaustive run took {elapsed:?}, budget is 5 minutes"
    );
    println!(
        "ACCEPTANCE 1 PASS: 341 aligned squares (both engines) + 1000 rectangles, 0 mismatches in {:.2?}",
        elapsed
    );
}

/// Criterion 2: the worked encoding examples hold verbatim.
#[test]
fn acceptance_2_worked_examples() {
    let _gate = serial();
    let p = params(3, 0);
    let cover: Vec<String> = brc_cover_1d(2, 7, &p)
        .unwrap()
        .nodes
        .iter()
        .map(|n| n.path_string())
        .collect();
    assert_eq!(cover, vec!["01", "1"]);

    let cover: Vec<String> = brc_cover_1d(2, 6, &p)
        .unwrap()
        .nodes
        .iter()
        .map(|n| n.path_string())
        .collect();
    assert_eq!(cover, vec!["01", "10", "110"]);

    let kws = object_keywords(GridLocation::new(3, 4), &p).unwrap();
    let expected: BTreeSet<String> = ["x011", "x01", "x0", "y100", "y10", "y1"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(kws, expected);

    let p1 = params(3, 1);
    let values: Vec<u64> = hve_level_values(GridLocation::new(3, 4), &p1)
        .iter()
        .map(|v| v.value)
        .collect();
    assert_eq!(values, vec![24, 89, 122]);

    let qv = hve_query_value(&SpatialRange::new(2, 3, 4, 5), &p).unwrap();
    assert_eq!((qv.level, qv.value), (2, 89));

    println!(
        "ACCEPTANCE 2 PASS: covers {{01,1}} and {{01,10,110}}, six keyword labels, level values {{24,89,122}}, query value 89"
    );
}

/// Criterion 3: counting laws across grid sizes and level cuts.
#[test]
fn acceptance_3_counting_laws() {
    let _gate = serial();
    let group = BilinearGroup::setup(64, b"acceptance-3-group").unwrap();
    let mut rng = seeded_rng(b"acceptance-3-rng");
    let (sk, pk) = hve::hve_setup(&group, 1, &mut rng).unwrap();

    let mut combos = 0u32;
    for log_l in [4u8, 6, 10] {
        for h_max in 0..=log_l {
            let p = params(log_l, h_max);
            let l = p.l();
            let loc = GridLocation::new(l / 3, l - 1);

            // Keyword count at h_max = 0 is exactly 2 log L.
            if h_max == 0 {
                assert_eq!(
                    object_keywords(loc, &p).unwrap().len(),
                    2 * log_l as usize
                );
            }

            // Bundle length: one ciphertext per level from h_max to log L.
            let bundle =
                hve::encrypt_object(&pk, &group, oid(combos as u64), loc, &p, &mut rng).unwrap();
            assert_eq!(bundle.ciphertexts.len(), (log_l - h_max + 1) as usize);

            // Restricted placement decomposes to a single conjunctive pair,
            // for an aligned square at every admissible level.
            for level in h_max..=log_l {
                let step = 1u32 << (log_l - level);
                let r = SpatialRange::new(0, step - 1, l - step, l - 1);
                let pair = aligned_query_keywords(&r, &p).unwrap();
                assert!(!pair.0.is_empty() && !pair.1.is_empty());
                let pairs = geo::decompose_range_query(&r, &p).unwrap();
                if level > 0 {
                    assert_eq!(pairs.len(), 1, "aligned square must be one pair");
                }
            }

            // Level-targeted matching costs exactly 3 pairings.
            let span = 1u32 << (log_l - h_max.max(1).min(log_l));
            let query = SpatialRange::new(0, span - 1, 0, span - 1);
            let token = hve::token_for_range(&sk, pk.sentinel(), &query, &p, &mut rng).unwrap();
            let verdict = hve::single_level_match(&group, &bundle, &token).unwrap();
            assert_eq!(verdict.pairings(), 3);

            combos += 1;
        }
    }
    println!("ACCEPTANCE 3 PASS: counting laws hold over {combos} (L, h_max) combinations");
}

/// Criterion 4: the default schedule reproduces the reference gas totals
/// exactly and the dollar totals to the cent.
#[test]
fn acceptance_4_gas_reproduction() {
    let _gate = serial();
    let report = bench::run_cost_bench(&GasSchedule::default(), &SpamPolicy::default()).unwrap();
    assert_eq!(report.owner_setup_gas, 42_150 + 327_590);
    assert_eq!(report.publisher_setup_gas, 177_160);
    assert_eq!(report.purchase_gas, 83_092 + 297_478 + 40_649);

    let setup_cents = (report.owner_setup_usd * 100.0).round() as i64;
    let purchase_cents = (report.purchase_usd * 100.0).round() as i64;
    assert!(
        (setup_cents - 12).abs() <= 1,
        "owner setup ${:.4} not within a cent of $0.12",
        report.owner_setup_usd
    );
    assert!(
        (purchase_cents - 11).abs() <= 1,
        "purchase ${:.4} not within a cent of $0.11",
        report.purchase_usd
    );
    println!(
        "ACCEPTANCE 4 PASS: setup 369740 gas (${:.4}), publisher 177160 gas, purchase 421219 gas (${:.4})",
        report.owner_setup_usd, report.purchase_usd
    );
}

/// Criterion 5: spam policies (daily cap, deposit escrow/refund,
/// forfeiture on dispute) and fund conservation over 10,000 randomized
/// transaction sequences.
#[test]
fn acceptance_5_spam_policies_and_conservation() {
    let _gate = serial();
    // Daily cap: the 51st same-day commitment reverts.
    let mut ledger = Ledger::with_defaults();
    let owner = Address::from_public_key(b"cap-owner");
    ledger.create_account(owner, 100 * WEI_PER_ETHER).unwrap();
    ledger.register_owner(owner).unwrap();
    let min = ledger.policy().min_deposit_wei;
    for i in 0..50u8 {
        ledger
            .submit_commitment(owner, vc::CommitmentString(vec![i; 8]), min)
            .unwrap();
    }
    let err = ledger
        .submit_commitment(owner, vc::CommitmentString(vec![0xff; 8]), min)
        .unwrap_err();
    assert!(matches!(
        err,
        LedgerError::Reverted {
            reason: RevertReason::DailyCapExceeded { cap: 50 },
            ..
        }
    ));
    // Per-day bound holds on the ledger state itself.
    let held = ledger
        .commitments()
        .iter()
        .filter(|c| c.deposit_state == DepositState::Held)
        .count();
    assert_eq!(held, 50);

    // Escrow and refund after the window.
    let id = ledger.commitments()[0].id;
    assert!(ledger.reclaim_deposit(owner, id).is_err());
    ledger.advance_blocks(ledger.policy().dispute_window_blocks);
    ledger.reclaim_deposit(owner, id).unwrap();
    assert_eq!(
        ledger.commitment(id).unwrap().deposit_state,
        DepositState::Refunded
    );
    assert!(ledger.conservation_holds());

    // Forfeiture on a successful dispute, with conservation.
    let domain = params(4, 0);
    let config = geomarket::market::MarketConfig::desk_scale(domain);
    let mut world = geomarket::market::World::new(config, b"acceptance-5").unwrap();
    let fraud_owner = world.create_owner().unwrap();
    let buyer = world.create_buyer().unwrap();
    let bbox = *world.config.domain.bbox();
    let l = world.config.domain.l() as f64;
    let coord = |x: f64, y: f64| {
        (
            bbox.min_lat + (y + 0.5) / l * (bbox.max_lat - bbox.min_lat),
            bbox.min_lon + (x + 0.5) / l * (bbox.max_lon - bbox.min_lon),
        )
    };
    let (true_lat, true_lon) = coord(2.0, 2.0);
    let (fake_lat, fake_lon) = coord(12.0, 12.0);
    let mut item = geomarket::market::AdvertiseItem::new(true_lat, true_lon, b"fraud".to_vec());
    item.advertised_override = Some((fake_lat, fake_lon));
    let ids = world.sse_advertise(fraud_owner, &[item]).unwrap();
    let outcome = world
        .purchase(buyer, ids[0], Some(GridLocation::new(2, 2)))
        .unwrap();
    assert_eq!(outcome.status, OfferStatus::Reversed);
    assert!(world.ledger.forfeited_wei() > 0);
    assert!(world.ledger.conservation_holds());

    // Randomized sequences: conservation after every operation.
    let mut rng = seeded_rng(b"acceptance-5-rng");
    let mut sequences = 0u32;
    for round in 0..10_000u64 {
        let mut ledger = Ledger::with_defaults();
        let actors: Vec<Address> = (0..4)
            .map(|i| Address::from_public_key(&[round as u8, i as u8, 77]))
            .collect();
        for a in &actors {
            ledger
                .create_account(*a, rng.random_range(1..20) as u128 * WEI_PER_ETHER)
                .unwrap();
        }
        let ops = rng.random_range(4..10);
        for _ in 0..ops {
            let a = actors[rng.random_range(0..actors.len())];
            let b = actors[rng.random_range(0..actors.len())];
            match rng.random_range(0..9u32) {
                0 => {
                    let _ = ledger.register_owner(a);
                }
                1 => {
                    let _ = ledger.set_commitment_params(a, [rng.random(); 32]);
                }
                2 => {
                    let deposit = rng.random_range(0..2 * ledger.policy().min_deposit_wei);
                    let _ = ledger.submit_commitment(
                        a,
                        vc::CommitmentString(vec![rng.random(); 16]),
                        deposit,
                    );
                }
                3 => {
                    let amount = rng.random_range(0..3 * WEI_PER_ETHER);
                    let _ = ledger.make_offer(a, b, oid(rng.random_range(0..6)), amount);
                }
                4 => {
                    let n = ledger.offers().len();
                    if n > 0 {
                        let id = ledger.offers()[rng.random_range(0..n)].id;
                        let _ = ledger.deliver_key(a, id, vec![1, 2, 3]);
                    }
                }
                5 => {
                    let n = ledger.offers().len();
                    if n > 0 {
                        let id = ledger.offers()[rng.random_range(0..n)].id;
                        let _ = ledger.withdraw_payment(a, id);
                    }
                }
                6 => {
                    let n = ledger.commitments().len();
                    if n > 0 {
                        let id = ledger.commitments()[rng.random_range(0..n)].id;
                        let _ = ledger.reclaim_deposit(a, id);
                    }
                }
                7 => {
                    let _ = ledger.transfer(a, b, rng.random_range(0..WEI_PER_ETHER));
                }
                _ => {
                    ledger.advance_blocks(rng.random_range(0..8000));
                }
            }
            assert!(
                ledger.conservation_holds(),
                "conservation broke in sequence {round}"
            );
            // The daily bound can never be exceeded.
            for owner in ledger.commitments().iter().map(|c| c.owner) {
                let per_day = ledger
                    .commitments()
                    .iter()
                    .filter(|c| {
                        c.owner == owner
                            && c.block / ledger.policy().blocks_per_day
                                == ledger.block_height() / ledger.policy().blocks_per_day
                    })
                    .count();
                assert!(per_day <= 50);
            }
        }
        sequences += 1;
    }
    println!(
        "ACCEPTANCE 5 PASS: cap/escrow/refund/forfeiture verified; conservation held across {sequences} randomized sequences"
    );
}

/// Criterion 6: commitment soundness: honest openings always verify,
/// forgeries never do, and the commitment width is batch-independent.
#[test]
fn acceptance_6_commitment_soundness() {
    let _gate = serial();
    let mut rng = seeded_rng(b"acceptance-6");
    // A few parameter sets shared across trials.
    let param_sets: Vec<vc::CommitmentParams> = (0..4)
        .map(|i| vc::vc_keygen(256, 1 + (i as usize) * 2, &[i; 8]).unwrap())
        .collect();

    let random_message = |rng: &mut rand::rngs::ChaCha20Rng| {
        vc::encode_location_message(
            GridLocation::new(rng.random_range(0..1 << 20), rng.random_range(0..1 << 20)),
            oid(rng.random()),
        )
    };

    // Honest trials.
    for trial in 0..10_000u32 {
        let pp = &param_sets[(trial as usize) % param_sets.len()];
        let len = rng.random_range(1..=pp.capacity());
        let batch: Vec<vc::CommitMessage> = (0..len).map(|_| random_message(&mut rng)).collect();
        let (cc, aux) = vc::vc_commit(pp, &batch, &mut rng).unwrap();
        let index = rng.random_range(0..len);
        let proof = vc::vc_open(pp, &aux, index).unwrap();
        assert!(
            vc::vc_verify(pp, &cc, &batch[index], index, &proof),
            "honest trial {trial} rejected"
        );
    }

    // Forged trials: wrong message, wrong index, random proof bytes, or
    // proof against foreign parameters.
    let foreign = vc::vc_keygen(256, 4, b"foreign").unwrap();
    for trial in 0..10_000u32 {
        let pp = &param_sets[(trial as usize) % param_sets.len()];
        let len = rng.random_range(1..=pp.capacity());
        let batch: Vec<vc::CommitMessage> = (0..len).map(|_| random_message(&mut rng)).collect();
        let (cc, aux) = vc::vc_commit(pp, &batch, &mut rng).unwrap();
        let index = rng.random_range(0..len);
        let proof = vc::vc_open(pp, &aux, index).unwrap();
        let accepted = match trial % 4 {
            0 => vc::vc_verify(pp, &cc, &random_message(&mut rng), index, &proof),
            1 => {
                let wrong = (index + 1) % pp.capacity();
                wrong != index && vc::vc_verify(pp, &cc, &batch[index], wrong, &proof)
            }
            2 => {
                let mut bytes = proof.0.clone();
                let pos = rng.random_range(0..bytes.len());
                bytes[pos] ^= 1 + (trial % 255) as u8;
                vc::vc_verify(pp, &cc, &batch[index], index, &vc::OpeningProof(bytes))
            }
            _ => vc::vc_verify(&foreign, &cc, &batch[index], index.min(3), &proof),
        };
        assert!(!accepted, "forged trial {trial} accepted");
    }

    // Constant commitment width for batch sizes 1..=20 at the reference
    // modulus size.
    let pp = vc::vc_keygen(1024, 20, b"acceptance-6-wide").unwrap();
    let mut widths = BTreeSet::new();
    for len in 1..=20usize {
        let batch: Vec<vc::CommitMessage> = (0..len).map(|_| random_message(&mut rng)).collect();
        let (cc, _) = vc::vc_commit(&pp, &batch, &mut rng).unwrap();
        widths.insert(cc.0.len());
    }
    assert_eq!(widths.len(), 1);
    assert_eq!(widths.into_iter().next().unwrap(), 128);

    println!(
        "ACCEPTANCE 6 PASS: 10000 honest openings accepted, 10000 forgeries rejected, |CC| = 128 bytes for batches 1..20"
    );
}

/// Criterion 7: the query equation recovers the sentinel exactly on
/// matching pairs and never otherwise, across 1000 randomized trials.
#[test]
fn acceptance_7_hve_algebra() {
    let _gate = serial();
    let group = BilinearGroup::setup(128, b"acceptance-7").unwrap();
    let mut rng = seeded_rng(b"acceptance-7-rng");
    let (sk, pk) = hve::hve_setup(&group, 1, &mut rng).unwrap();

    for trial in 0..1000u64 {
        let attr: u64 = rng.random_range(0..1 << 30);
        let c = hve::hve_encrypt(&pk, &group, &[attr], 0, &mut rng).unwrap();
        let tk = hve::hve_token(
            &sk,
            &[hve::PatternEntry::Scalar(attr)],
            0,
            pk.sentinel(),
            &mut rng,
        )
        .unwrap();
        let (recovered, pairings) = hve::recover_message(&group, &c, &tk).unwrap();
        assert_eq!(recovered, *pk.sentinel(), "match trial {trial}");
        assert_eq!(pairings, 3);

        let other = loop {
            let o: u64 = rng.random_range(0..1 << 30);
            if o != attr {
                break o;
            }
        };
        let tk_miss = hve::hve_token(
            &sk,
            &[hve::PatternEntry::Scalar(other)],
            0,
            pk.sentinel(),
            &mut rng,
        )
        .unwrap();
        let (junk, _) = hve::recover_message(&group, &c, &tk_miss).unwrap();
        assert_ne!(junk, *pk.sentinel(), "non-match trial {trial}");
    }
    println!(
        "ACCEPTANCE 7 PASS: query equation recovered the sentinel on 1000 matches and on 0 of 1000 non-matches"
    );
}

/// Criterion 8: a 10k-object flat file scans to identical results with 1,
/// 2 and 4 workers, with non-increasing wall time.
#[test]
fn acceptance_8_parallel_determinism() {
    let _gate = serial();
    let p = params(10, 7);
    let group = BilinearGroup::setup(128, b"acceptance-8").unwrap();
    let mut rng = seeded_rng(b"acceptance-8-rng");
    let (sk, pk) = hve::hve_setup(&group, 1, &mut rng).unwrap();

    let l = p.l();
    let mut locations = Vec::with_capacity(10_000);
    let bundles: Vec<hve::ObjectCipherBundle> = (0..10_000u64)
        .map(|i| {
            let loc = GridLocation::new(rng.random_range(0..l), rng.random_range(0..l));
            locations.push(loc);
            hve::encrypt_object(&pk, &group, oid(i), loc, &p, &mut rng).unwrap()
        })
        .collect();

    // Query the aligned square around the first object so the scan has
    // real matches to report.
    let span = l >> p.h_max();
    let anchor = locations[0];
    let x_lo = anchor.x & !(span - 1);
    let y_lo = anchor.y & !(span - 1);
    let query = SpatialRange::new(x_lo, x_lo + span - 1, y_lo, y_lo + span - 1);
    let token = hve::token_for_range(&sk, pk.sentinel(), &query, &p, &mut rng).unwrap();

    let mut results = Vec::new();
    let mut times = Vec::new();
    for workers in [1usize, 2, 4] {
        // Each sample times four consecutive scans and the minimum over
        // five samples is kept, to push scheduler noise well below the
        // effect being measured.
        let mut best = f64::MAX;
        let mut outcome = None;
        for _ in 0..5 {
            let start = Instant::now();
            for _ in 0..4 {
                outcome = Some(hve::linear_scan(&group, &bundles, &token, workers).unwrap());
            }
            best = best.min(start.elapsed().as_secs_f64() / 4.0);
        }
        results.push(outcome.unwrap());
        times.push(best);
    }
    assert_eq!(results[0].matches, results[1].matches);
    assert_eq!(results[0].matches, results[2].matches);
    assert_eq!(results[0].pairings, results[1].pairings);
    assert_eq!(results[0].pairings, results[2].pairings);
    assert_eq!(results[0].bundles_scanned, 10_000);
    assert!(!results[0].matches.is_empty());
    // Non-increasing trend with a 10% measurement allowance, asserted for
    // worker counts the hardware can actually run in parallel. Beyond the
    // core count a static partition only measures oversubscription, whose
    // sign is unstable; results above stay asserted for all counts.
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let trend: Vec<f64> = [1usize, 2, 4]
        .iter()
        .zip(&times)
        .filter(|(w, _)| **w <= cores)
        .map(|(_, t)| *t)
        .collect();
    for pair in trend.windows(2) {
        assert!(
            pair[1] <= pair[0] * 1.10,
            "wall time increased beyond measurement noise: {times:?} (cores: {cores})"
        );
    }
    println!(
        "ACCEPTANCE 8 PASS: identical matches ({}) across 1/2/4 workers; wall {:.1}/{:.1}/{:.1} ms",
        results[0].matches.len(),
        times[0] * 1e3,
        times[1] * 1e3,
        times[2] * 1e3
    );
}
