//! Benchmark harness: dataset ingestion, query workload generation, and
//! the measurement axes reported by the CLI (index build cost, query cost
//! under arbitrary vs restricted placement, asymmetric matching cost and
//! parallel scaling, on-chain cost totals).
//!
//! Every benchmark validates its correctness oracle (encrypted results
//! against a plaintext filter) before recording timings, so a report can
//! never describe a broken build. Wall-clock fields carry an `_ms` suffix
//! and are excluded from determinism guarantees; everything else is a pure
//! function of the seed and inputs.

use crate::crypto;
use crate::geo::{self, BoundingBox, DomainParams, GeoError, GridLocation, SpatialRange};
use crate::group::{BilinearGroup, GroupError};
use crate::hve::{self, HveError};
use crate::ledger::{GasSchedule, Ledger, LedgerError, SpamPolicy};
use crate::sse::{self, DocumentDatabase, SseError};
use crate::types::ObjectId;
use crate::vc::{self, VcError};
use rand::RngExt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed check-in row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("dataset is empty after filtering")]
    EmptyDataset,
    #[error("oracle mismatch: encrypted search disagrees with plaintext filter on {context}")]
    OracleMismatch { context: String },
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
}

/// One geo-tagged check-in row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckIn {
    pub user_id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub points: Vec<CheckIn>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Load check-ins from a delimited text file, keeping rows inside `bbox`.
///
/// Two layouts are recognized per row (comma, tab or whitespace
/// separated): `user, lat, lon` and the five-column check-in export
/// `user, timestamp, lat, lon, location_id`. A non-numeric first data row
/// is treated as a header and skipped.
pub fn load_checkins(path: &Path, bbox: &BoundingBox) -> Result<Dataset, BenchError> {
    let mut raw = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| BenchError::Io(e.to_string()))?;
    parse_checkins(&raw, bbox)
}

pub fn parse_checkins(raw: &str, bbox: &BoundingBox) -> Result<Dataset, BenchError> {
    let mut points = Vec::new();
    for (row, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let (user, lat_s, lon_s) = match fields.len() {
            3 => (fields[0], fields[1], fields[2]),
            n if n >= 5 => (fields[0], fields[2], fields[3]),
            n => {
                return Err(BenchError::MalformedRow {
                    row,
                    reason: format!("{n} fields"),
                })
            }
        };
        let (Ok(lat), Ok(lon)) = (lat_s.parse::<f64>(), lon_s.parse::<f64>()) else {
            if row == 0 {
                continue; // header
            }
            return Err(BenchError::MalformedRow {
                row,
                reason: "unparseable coordinates".into(),
            });
        };
        if bbox.contains(lat, lon) {
            points.push(CheckIn {
                user_id: user.to_string(),
                lat,
                lon,
            });
        }
    }
    Ok(Dataset { points })
}

/// Draw nested samples of the given sizes: each smaller sample is a subset
/// of every larger one. Sizes are clamped to the dataset size.
pub fn nested_samples(dataset: &Dataset, sizes: &[usize], seed: u64) -> Vec<Dataset> {
    let mut order: Vec<usize> = (0..dataset.points.len()).collect();
    let mut rng = crypto::seeded_rng(&seed.to_be_bytes());
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    sizes
        .iter()
        .map(|&size| Dataset {
            points: order
                .iter()
                .take(size.min(dataset.points.len()))
                .map(|&i| dataset.points[i].clone())
                .collect(),
        })
        .collect()
}

/// Synthetic fallback dataset: uniform check-ins over the domain bbox.
pub fn synthetic_dataset(count: usize, bbox: &BoundingBox, seed: u64) -> Dataset {
    let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"synthetic", &seed.to_be_bytes()]));
    let points = (0..count)
        .map(|i| CheckIn {
            user_id: format!("synthetic-{i}"),
            lat: bbox.min_lat + rng.random_range(0.0..1.0) * (bbox.max_lat - bbox.min_lat),
            lon: bbox.min_lon + rng.random_range(0.0..1.0) * (bbox.max_lon - bbox.min_lon),
        })
        .collect();
    Dataset { points }
}

/// Default query extents in meters, smallest to largest.
pub const DEFAULT_QUERY_SIZES_M: [(f64, f64); 3] =
    [(400.0, 550.0), (800.0, 1100.0), (1600.0, 2200.0)];

/// One benchmark query: an anchor drawn from the dataset, the arbitrary
/// rectangle of the requested metric size around it, and the node-aligned
/// square of comparable scale containing it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkloadQuery {
    pub anchor: GridLocation,
    pub size_index: usize,
    pub rect: SpatialRange,
    pub aligned: SpatialRange,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryWorkload {
    pub sizes_m: Vec<(f64, f64)>,
    pub queries: Vec<WorkloadQuery>,
}

/// Convert a metric extent to a cell span within the domain.
fn meters_to_cells(meters: f64, domain_meters: f64, l: u32) -> u32 {
    ((meters / domain_meters) * l as f64).round().max(1.0) as u32
}

/// Generate `count` queries per size by anchoring ranges at dataset
/// locations.
pub fn gen_workload(
    dataset: &Dataset,
    params: &DomainParams,
    sizes_m: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<QueryWorkload, BenchError> {
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"workload", &seed.to_be_bytes()]));
    let (width_m, height_m) = params.bbox().extent_meters();
    let l = params.l();
    let max_span = params.max_query_span();
    let mut queries = Vec::with_capacity(count * sizes_m.len());
    for (size_index, (w_m, h_m)) in sizes_m.iter().enumerate() {
        let w_cells = meters_to_cells(*w_m, width_m, l).min(max_span);
        let h_cells = meters_to_cells(*h_m, height_m, l).min(max_span);
        for _ in 0..count {
            let pick = &dataset.points[rng.random_range(0..dataset.points.len())];
            let anchor = geo::snap_to_grid(pick.lat, pick.lon, params)?;
            let rect = clamp_rect(anchor, w_cells, h_cells, l);
            let aligned = aligned_square(anchor, w_cells.max(h_cells), params);
            queries.push(WorkloadQuery {
                anchor,
                size_index,
                rect,
                aligned,
            });
        }
    }
    Ok(QueryWorkload {
        sizes_m: sizes_m.to_vec(),
        queries,
    })
}

fn clamp_rect(anchor: GridLocation, w: u32, h: u32, l: u32) -> SpatialRange {
    let x_lo = anchor.x.saturating_sub(w / 2).min(l - w);
    let y_lo = anchor.y.saturating_sub(h / 2).min(l - h);
    SpatialRange::new(x_lo, x_lo + w - 1, y_lo, y_lo + h - 1)
}

/// Smallest node-aligned square containing the anchor whose span is at
/// least the requested span (capped by the query-size policy).
fn aligned_square(anchor: GridLocation, span: u32, params: &DomainParams) -> SpatialRange {
    let span = span
        .next_power_of_two()
        .min(params.max_query_span())
        .max(1);
    let x_lo = anchor.x & !(span - 1);
    let y_lo = anchor.y & !(span - 1);
    SpatialRange::new(x_lo, x_lo + span - 1, y_lo, y_lo + span - 1)
}

/// Per-placement aggregates of one query-size class.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlacementStats {
    pub queries: u64,
    pub avg_conjunctive_pairs: f64,
    pub avg_first_keyword_postings: f64,
    pub avg_cross_tag_tests: f64,
    pub avg_latency_ms: f64,
    pub total_matches: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SseSizeRow {
    pub size_index: usize,
    pub size_m: (f64, f64),
    pub arbitrary: PlacementStats,
    pub restricted: PlacementStats,
}

/// Symmetric-index benchmark report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SseBenchReport {
    pub l: u32,
    pub h_max: u8,
    pub security_bits: u32,
    pub objects: u64,
    pub keywords: u64,
    pub postings: u64,
    pub index_bytes: u64,
    pub build_ms: f64,
    pub rows: Vec<SseSizeRow>,
}

/// Build an index over the dataset and replay the workload twice: once
/// with arbitrary rectangles (full decomposition) and once with the
/// node-aligned squares (single conjunctive pair). Results are checked
/// against the plaintext filter before any statistic is recorded.
pub fn run_sse_bench(
    dataset: &Dataset,
    params: &DomainParams,
    security_bits: u32,
    workload: &QueryWorkload,
    seed: u64,
) -> Result<SseBenchReport, BenchError> {
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let mut rng = crypto::seeded_rng(&crypto::sha256_parts(&[b"sse-bench", &seed.to_be_bytes()]));
    let mut ddb = DocumentDatabase::new();
    let mut locations = Vec::with_capacity(dataset.len());
    for point in &dataset.points {
        let loc = geo::snap_to_grid(point.lat, point.lon, params)?;
        let id = ObjectId::from_rng(&mut rng);
        ddb.insert(id, geo::object_keywords(loc, params)?)?;
        locations.push((id, loc));
    }

    let build_start = Instant::now();
    let (keys, edb) = sse::sse_setup(&ddb, security_bits, &seed.to_be_bytes())?;
    let build_ms = build_start.elapsed().as_secs_f64() * 1e3;
    let index_bytes = edb.to_bytes().len() as u64;

    let oracle = |range: &SpatialRange| -> BTreeSet<ObjectId> {
        locations
            .iter()
            .filter(|(_, loc)| range.contains(*loc))
            .map(|(id, _)| *id)
            .collect()
    };

    let mut rows = Vec::new();
    for (size_index, size_m) in workload.sizes_m.iter().enumerate() {
        let mut arbitrary = PlacementStats::default();
        let mut restricted = PlacementStats::default();
        let queries: Vec<&WorkloadQuery> = workload
            .queries
            .iter()
            .filter(|q| q.size_index == size_index)
            .collect();
        for q in &queries {
            // Arbitrary placement: full decomposition.
            let start = Instant::now();
            let outcome = sse::encrypted_spatial_range_query(&edb, &keys, &q.rect, params)?;
            arbitrary.avg_latency_ms += start.elapsed().as_secs_f64() * 1e3;
            if outcome.ids != oracle(&q.rect) {
                return Err(BenchError::OracleMismatch {
                    context: format!("arbitrary rect {:?}", q.rect),
                });
            }
            arbitrary.queries += 1;
            arbitrary.avg_conjunctive_pairs += outcome.conjunctive_queries as f64;
            arbitrary.avg_first_keyword_postings += outcome.first_keyword_postings as f64;
            arbitrary.avg_cross_tag_tests += outcome.cross_tag_tests as f64;
            arbitrary.total_matches += outcome.ids.len() as u64;

            // Restricted placement: the aligned square is one pair.
            let pair = geo::aligned_query_keywords(&q.aligned, params)?;
            let start = Instant::now();
            let token = sse::sse_token(&keys, &[pair.0, pair.1])?;
            let outcome = sse::sse_search(&edb, &token);
            restricted.avg_latency_ms += start.elapsed().as_secs_f64() * 1e3;
            if outcome.ids != oracle(&q.aligned) {
                return Err(BenchError::OracleMismatch {
                    context: format!("aligned square {:?}", q.aligned),
                });
            }
            restricted.queries += 1;
            restricted.avg_conjunctive_pairs += 1.0;
            restricted.avg_first_keyword_postings += outcome.first_keyword_postings as f64;
            restricted.avg_cross_tag_tests += outcome.cross_tag_tests as f64;
            restricted.total_matches += outcome.ids.len() as u64;
        }
        for stats in [&mut arbitrary, &mut restricted] {
            if stats.queries > 0 {
                let n = stats.queries as f64;
                stats.avg_conjunctive_pairs /= n;
                stats.avg_first_keyword_postings /= n;
                stats.avg_cross_tag_tests /= n;
                stats.avg_latency_ms /= n;
            }
        }
        rows.push(SseSizeRow {
            size_index,
            size_m: *size_m,
            arbitrary,
            restricted,
        });
    }

    Ok(SseBenchReport {
        l: params.l(),
        h_max: params.h_max(),
        security_bits,
        objects: dataset.len() as u64,
        keywords: edb.keyword_count() as u64,
        postings: edb.posting_count() as u64,
        index_bytes,
        build_ms,
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HveWorkerRow {
    pub workers: usize,
    pub scan_ms: f64,
    pub speedup: f64,
    pub matches: u64,
    pub pairings: u64,
}

/// Asymmetric-matching benchmark report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HveBenchReport {
    pub group_bits: u32,
    pub l: u32,
    pub h_max: u8,
    pub objects: u64,
    pub bundle_levels: u64,
    pub encrypt_avg_ms: f64,
    pub ciphertext_record_bytes: u64,
    pub token_avg_ms: f64,
    pub token_bytes: u64,
    pub match_avg_us: f64,
    pub pairings_per_match: u32,
    pub worker_rows: Vec<HveWorkerRow>,
}

/// Encrypt a synthetic flat file, measure token and match costs, and scan
/// with increasing worker counts. Matching output is validated against the
/// plaintext filter for every worker count.
pub fn run_hve_bench(
    group_bits: u32,
    params: &DomainParams,
    objects: usize,
    workers: &[usize],
    seed: u64,
) -> Result<HveBenchReport, BenchError> {
    let seed_bytes = crypto::sha256_parts(&[b"hve-bench", &seed.to_be_bytes()]);
    let group = BilinearGroup::setup(group_bits, &seed_bytes)?;
    let mut rng = crypto::seeded_rng(&seed_bytes);
    let (sk, pk) = hve::hve_setup(&group, 1, &mut rng)?;

    let l = params.l();
    let mut bundles = Vec::with_capacity(objects);
    let mut locations = Vec::with_capacity(objects);
    let enc_start = Instant::now();
    for i in 0..objects {
        let loc = GridLocation::new(rng.random_range(0..l), rng.random_range(0..l));
        let mut id = [0u8; 16];
        id[..8].copy_from_slice(&(i as u64).to_be_bytes());
        let bundle = hve::encrypt_object(&pk, &group, ObjectId(id), loc, params, &mut rng)?;
        locations.push((ObjectId(id), loc));
        bundles.push(bundle);
    }
    let encrypt_avg_ms = enc_start.elapsed().as_secs_f64() * 1e3 / objects.max(1) as f64;
    let bundle_levels = (params.log_l() - params.h_max() + 1) as u64;
    let ciphertext_record_bytes = {
        let file = hve::FlatFile {
            bundles: vec![bundles[0].clone()],
        };
        file.to_bytes(&group).len() as u64
    };

    // A mid-level aligned square query, anchored at the first object so
    // the scan has matches to report.
    let level = params.h_max().max(params.log_l() / 2).min(params.log_l());
    let span = 1u32 << (params.log_l() - level);
    let anchor = locations[0].1;
    let x_lo = anchor.x & !(span - 1);
    let y_lo = anchor.y & !(span - 1);
    let query = SpatialRange::new(x_lo, x_lo + span - 1, y_lo, y_lo + span - 1);

    let token_start = Instant::now();
    let token = hve::token_for_range(&sk, pk.sentinel(), &query, params, &mut rng)?;
    let token_avg_ms = token_start.elapsed().as_secs_f64() * 1e3;
    let token_bytes = token.to_bytes(&group).len() as u64;

    let expected: BTreeSet<ObjectId> = locations
        .iter()
        .filter(|(_, loc)| query.contains(*loc))
        .map(|(id, _)| *id)
        .collect();

    // Single-match cost and the pairing constant.
    let probe = hve::single_level_match(&group, &bundles[0], &token)?;
    let pairings_per_match = probe.pairings();
    let match_start = Instant::now();
    let probes = 200.min(bundles.len());
    for bundle in bundles.iter().take(probes) {
        hve::single_level_match(&group, bundle, &token)?;
    }
    let match_avg_us = match_start.elapsed().as_secs_f64() * 1e6 / probes.max(1) as f64;

    let mut worker_rows = Vec::new();
    let mut base_ms = 0f64;
    for &w in workers {
        // Best-of-three to keep the trend stable on a busy machine.
        let mut best = f64::MAX;
        let mut outcome = None;
        for _ in 0..3 {
            let start = Instant::now();
            let result = hve::linear_scan(&group, &bundles, &token, w)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            if ms < best {
                best = ms;
            }
            outcome = Some(result);
        }
        let outcome = outcome.unwrap();
        if outcome.matches != expected {
            return Err(BenchError::OracleMismatch {
                context: format!("linear scan with {w} workers"),
            });
        }
        if worker_rows.is_empty() {
            base_ms = best;
        }
        worker_rows.push(HveWorkerRow {
            workers: w,
            scan_ms: best,
            speedup: if best > 0.0 { base_ms / best } else { 1.0 },
            matches: outcome.matches.len() as u64,
            pairings: outcome.pairings,
        });
    }

    Ok(HveBenchReport {
        group_bits,
        l,
        h_max: params.h_max(),
        objects: objects as u64,
        bundle_levels,
        encrypt_avg_ms,
        ciphertext_record_bytes,
        token_avg_ms,
        token_bytes,
        match_avg_us,
        pairings_per_match,
        worker_rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostRow {
    pub operation: String,
    pub gas: u64,
    pub usd: f64,
}

/// On-chain cost report for the scripted setup and purchase sequences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostBenchReport {
    pub gas_price_wei: u128,
    pub ether_usd: f64,
    pub setup_rows: Vec<CostRow>,
    pub purchase_rows: Vec<CostRow>,
    pub owner_setup_gas: u64,
    pub owner_setup_usd: f64,
    pub publisher_setup_gas: u64,
    pub purchase_gas: u64,
    pub purchase_usd: f64,
}

/// Run the canonical one-time-setup and purchase sequences on a fresh
/// ledger and report their gas and dollar costs.
pub fn run_cost_bench(
    schedule: &GasSchedule,
    policy: &SpamPolicy,
) -> Result<CostBenchReport, BenchError> {
    use crate::ledger::{Address, WEI_PER_ETHER};
    let mut ledger = Ledger::new(schedule.clone(), policy.clone())?;
    let owner = Address::from_public_key(b"cost-owner");
    let buyer = Address::from_public_key(b"cost-buyer");
    let publisher = Address::from_public_key(b"cost-publisher");
    for account in [owner, buyer, publisher] {
        ledger.create_account(account, 10 * WEI_PER_ETHER)?;
    }

    let mut setup_rows = Vec::new();
    let receipt = ledger.register_owner(owner)?;
    setup_rows.push(CostRow {
        operation: "owner_registration".into(),
        gas: receipt.gas_used,
        usd: schedule.usd_for_gas(receipt.gas_used),
    });
    let pp = vc::vc_keygen(256, 4, b"cost-bench")?;
    let receipt = ledger.set_commitment_params(owner, pp.digest())?;
    setup_rows.push(CostRow {
        operation: "owner_sets_commitment_params".into(),
        gas: receipt.gas_used,
        usd: schedule.usd_for_gas(receipt.gas_used),
    });
    let receipt = ledger.publish_index_info(publisher, b"index-handle".to_vec())?;
    setup_rows.push(CostRow {
        operation: "publisher_submits_index_info".into(),
        gas: receipt.gas_used,
        usd: schedule.usd_for_gas(receipt.gas_used),
    });

    let mut purchase_rows = Vec::new();
    let mut rng = crypto::seeded_rng(b"cost-bench-rng");
    let object = ObjectId::from_rng(&mut rng);
    let message = vc::encode_location_message(GridLocation::new(3, 4), object);
    let (cc, _aux) = vc::vc_commit(&pp, &[message], &mut rng)?;
    let (receipt, _) = ledger.submit_commitment(owner, cc, policy.min_deposit_wei)?;
    purchase_rows.push(CostRow {
        operation: "owner_submits_commitment".into(),
        gas: receipt.gas_used,
        usd: schedule.usd_for_gas(receipt.gas_used),
    });
    let (receipt, offer) = ledger.make_offer(buyer, owner, object, WEI_PER_ETHER / 100)?;
    purchase_rows.push(CostRow {
        operation: "buyer_makes_offer".into(),
        gas: receipt.gas_used,
        usd: schedule.usd_for_gas(receipt.gas_used),
    });
    ledger.deliver_key(owner, offer, b"envelope".to_vec())?;
    ledger.advance_blocks(policy.dispute_window_blocks);
    let receipt = ledger.withdraw_payment(owner, offer)?;
    purchase_rows.push(CostRow {
        operation: "owner_withdraws_payment".into(),
        gas: receipt.gas_used,
        usd: schedule.usd_for_gas(receipt.gas_used),
    });

    let owner_setup_gas = setup_rows[0].gas + setup_rows[1].gas;
    let publisher_setup_gas = setup_rows[2].gas;
    let purchase_gas: u64 = purchase_rows.iter().map(|r| r.gas).sum();
    Ok(CostBenchReport {
        gas_price_wei: schedule.gas_price_wei,
        ether_usd: schedule.ether_usd,
        owner_setup_gas,
        owner_setup_usd: schedule.usd_for_gas(owner_setup_gas),
        publisher_setup_gas,
        purchase_gas,
        purchase_usd: schedule.usd_for_gas(purchase_gas),
        setup_rows,
        purchase_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Flat key/value rows with a stable column order, for CSV emission.
pub trait CsvReport {
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

impl CsvReport for SseBenchReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "l",
            "h_max",
            "objects",
            "size_index",
            "size_w_m",
            "size_h_m",
            "placement",
            "queries",
            "avg_conjunctive_pairs",
            "avg_first_keyword_postings",
            "avg_cross_tag_tests",
            "avg_latency_ms",
            "total_matches",
            "index_bytes",
            "build_ms",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for row in &self.rows {
            for (placement, stats) in [("arbitrary", &row.arbitrary), ("restricted", &row.restricted)] {
                rows.push(vec![
                    self.l.to_string(),
                    self.h_max.to_string(),
                    self.objects.to_string(),
                    row.size_index.to_string(),
                    row.size_m.0.to_string(),
                    row.size_m.1.to_string(),
                    placement.to_string(),
                    stats.queries.to_string(),
                    format!("{:.3}", stats.avg_conjunctive_pairs),
                    format!("{:.3}", stats.avg_first_keyword_postings),
                    format!("{:.3}", stats.avg_cross_tag_tests),
                    format!("{:.3}", stats.avg_latency_ms),
                    stats.total_matches.to_string(),
                    self.index_bytes.to_string(),
                    format!("{:.3}", self.build_ms),
                ]);
            }
        }
        rows
    }
}

impl CsvReport for HveBenchReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "group_bits",
            "l",
            "h_max",
            "objects",
            "bundle_levels",
            "workers",
            "scan_ms",
            "speedup",
            "matches",
            "pairings",
            "pairings_per_match",
            "token_bytes",
            "ciphertext_record_bytes",
            "encrypt_avg_ms",
            "token_avg_ms",
            "match_avg_us",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.worker_rows
            .iter()
            .map(|w| {
                vec![
                    self.group_bits.to_string(),
                    self.l.to_string(),
                    self.h_max.to_string(),
                    self.objects.to_string(),
                    self.bundle_levels.to_string(),
                    w.workers.to_string(),
                    format!("{:.3}", w.scan_ms),
                    format!("{:.3}", w.speedup),
                    w.matches.to_string(),
                    w.pairings.to_string(),
                    self.pairings_per_match.to_string(),
                    self.token_bytes.to_string(),
                    self.ciphertext_record_bytes.to_string(),
                    format!("{:.4}", self.encrypt_avg_ms),
                    format!("{:.4}", self.token_avg_ms),
                    format!("{:.3}", self.match_avg_us),
                ]
            })
            .collect()
    }
}

impl CsvReport for CostBenchReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["sequence", "operation", "gas", "usd"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for r in &self.setup_rows {
            rows.push(vec![
                "setup".into(),
                r.operation.clone(),
                r.gas.to_string(),
                format!("{:.4}", r.usd),
            ]);
        }
        for r in &self.purchase_rows {
            rows.push(vec![
                "purchase".into(),
                r.operation.clone(),
                r.gas.to_string(),
                format!("{:.4}", r.usd),
            ]);
        }
        rows.push(vec![
            "setup".into(),
            "owner_total".into(),
            self.owner_setup_gas.to_string(),
            format!("{:.4}", self.owner_setup_usd),
        ]);
        rows.push(vec![
            "purchase".into(),
            "total".into(),
            self.purchase_gas.to_string(),
            format!("{:.4}", self.purchase_usd),
        ]);
        rows
    }
}

/// Write a report to `path` in the requested format.
pub fn emit_report<T: Serialize + CsvReport>(
    report: &T,
    format: ReportFormat,
    path: &Path,
) -> Result<(), BenchError> {
    let contents = match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).unwrap(),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(report.csv_header())
                .map_err(|e| BenchError::Io(e.to_string()))?;
            for row in report.csv_rows() {
                w.write_record(&row).map_err(|e| BenchError::Io(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| BenchError::Io(e.to_string()))?)
                .unwrap()
        }
    };
    std::fs::write(path, contents).map_err(|e| BenchError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LA_BBOX;

    fn params(log_l: u8, h_max: u8) -> DomainParams {
        DomainParams::new(log_l, h_max, LA_BBOX).unwrap()
    }

    #[test]
    fn parse_drops_out_of_bbox_and_handles_formats() {
        let bbox = LA_BBOX;
        // Five-column check-in export, tab separated.
        let tsv = "12\t2010-10-19T23:55:27Z\t34.0\t-118.4\t4545\n\
                   13\t2010-10-18T22:17:43Z\t51.0\t0.1\t999\n";
        let ds = parse_checkins(tsv, &bbox).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.points[0].user_id, "12");

        // Three-column CSV with header.
        let csv = "user,lat,lon\nalice,34.1,-118.3\nbob,10.0,-118.3\n";
        let ds = parse_checkins(csv, &bbox).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.points[0].user_id, "alice");

        // Empty input.
        let ds = parse_checkins("", &bbox).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn nested_samples_are_subsets() {
        let ds = synthetic_dataset(200, &LA_BBOX, 9);
        let samples = nested_samples(&ds, &[10, 50, 120], 42);
        assert_eq!(samples[0].len(), 10);
        assert_eq!(samples[1].len(), 50);
        assert_eq!(samples[2].len(), 120);
        let key = |c: &CheckIn| (c.user_id.clone(), c.lat.to_bits(), c.lon.to_bits());
        for win in samples.windows(2) {
            let small: BTreeSet<_> = win[0].points.iter().map(key).collect();
            let large: BTreeSet<_> = win[1].points.iter().map(key).collect();
            assert!(small.is_subset(&large));
        }
        // Deterministic under the seed.
        let again = nested_samples(&ds, &[10, 50, 120], 42);
        assert_eq!(
            samples[0].points.iter().map(key).collect::<Vec<_>>(),
            again[0].points.iter().map(key).collect::<Vec<_>>()
        );
    }

    #[test]
    fn workload_anchors_in_dataset_and_band() {
        let p = params(10, 0);
        let ds = synthetic_dataset(500, &LA_BBOX, 3);
        let wl = gen_workload(&ds, &p, &DEFAULT_QUERY_SIZES_M, 10, 7).unwrap();
        assert_eq!(wl.queries.len(), 30);
        for q in &wl.queries {
            assert!(q.rect.contains(q.anchor));
            assert!(q.aligned.contains(q.anchor));
            q.rect.validate(&p).unwrap();
            // Aligned variant really is node-aligned and square.
            geo::hve_query_value(&q.aligned, &p).unwrap();
        }
        // Deterministic under seed.
        let again = gen_workload(&ds, &p, &DEFAULT_QUERY_SIZES_M, 10, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&wl.queries).unwrap(),
            serde_json::to_string(&again.queries).unwrap()
        );
        // Range sides stay in the fraction band the defaults were chosen
        // for (roughly one to a few percent of the domain side).
        let (w_m, h_m) = p.bbox().extent_meters();
        for (w, h) in DEFAULT_QUERY_SIZES_M {
            let fx = w / w_m;
            let fy = h / h_m;
            assert!(fx > 0.005 && fx < 0.04, "x fraction {fx}");
            assert!(fy > 0.005 && fy < 0.04, "y fraction {fy}");
        }
    }

    #[test]
    fn sse_bench_counts_and_trends() {
        // The posting-volume trend needs spans that actually differ, so
        // this runs on the fine grid.
        let p = params(10, 0);
        let ds = synthetic_dataset(2000, &LA_BBOX, 11);
        let wl = gen_workload(&ds, &p, &DEFAULT_QUERY_SIZES_M, 15, 5).unwrap();
        let report = run_sse_bench(&ds, &p, 128, &wl, 5).unwrap();
        assert_eq!(report.objects, 2000);
        assert_eq!(report.postings, 2000 * 2 * 10);
        for row in &report.rows {
            // Restricted placement always evaluates one conjunctive pair.
            assert_eq!(row.restricted.avg_conjunctive_pairs, 1.0);
            // Arbitrary placement can only be more expensive.
            assert!(row.arbitrary.avg_conjunctive_pairs >= 1.0);
        }
        // First-keyword posting volume grows with the range span.
        let v: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.arbitrary.avg_first_keyword_postings)
            .collect();
        assert!(v[0] <= v[1] && v[1] <= v[2], "not monotone: {v:?}");
    }

    #[test]
    fn non_aligned_rects_decompose_to_more_pairs() {
        let p = params(6, 0);
        let ds = synthetic_dataset(50, &LA_BBOX, 13);
        let wl = gen_workload(&ds, &p, &DEFAULT_QUERY_SIZES_M, 10, 2).unwrap();
        for q in &wl.queries {
            let pairs = geo::decompose_range_query(&q.rect, &p).unwrap();
            let aligned = geo::aligned_query_keywords(&q.rect, &p);
            if aligned.is_err() {
                assert!(pairs.len() > 1, "non-aligned {:?} gave 1 pair", q.rect);
            }
        }
    }

    #[test]
    fn hve_bench_constants_and_scaling() {
        let p = params(6, 3);
        let report = run_hve_bench(64, &p, 120, &[1, 2, 4], 3).unwrap();
        assert_eq!(report.pairings_per_match, 3);
        assert_eq!(report.bundle_levels, 4);
        assert_eq!(report.worker_rows.len(), 3);
        // Same matches and pairings regardless of workers.
        let first = &report.worker_rows[0];
        for row in &report.worker_rows {
            assert_eq!(row.matches, first.matches);
            assert_eq!(row.pairings, first.pairings);
        }
    }

    #[test]
    fn cost_bench_reproduces_reference_totals() {
        let report = run_cost_bench(&GasSchedule::default(), &SpamPolicy::default()).unwrap();
        assert_eq!(report.owner_setup_gas, 42_150 + 327_590);
        assert_eq!(report.publisher_setup_gas, 177_160);
        assert_eq!(report.purchase_gas, 83_092 + 297_478 + 40_649);
        let setup_cents = (report.owner_setup_usd * 100.0).round() as i64;
        let purchase_cents = (report.purchase_usd * 100.0).round() as i64;
        assert!((setup_cents - 12).abs() <= 1);
        assert!((purchase_cents - 11).abs() <= 1);
    }

    /// Strip wall-clock fields so the remainder can be compared across
    /// runs.
    fn strip_timing(value: &mut serde_json::Value) {
        match value {
            serde_json::Value::Object(map) => {
                map.retain(|k, _| !k.ends_with("_ms") && !k.ends_with("_us"));
                for v in map.values_mut() {
                    strip_timing(v);
                }
            }
            serde_json::Value::Array(items) => {
                for v in items.iter_mut() {
                    strip_timing(v);
                }
            }
            _ => {}
        }
    }

    #[test]
    fn non_timing_fields_deterministic_under_seed() {
        let p = params(6, 0);
        let ds = synthetic_dataset(150, &LA_BBOX, 21);
        let wl = gen_workload(&ds, &p, &DEFAULT_QUERY_SIZES_M, 5, 21).unwrap();
        let a = run_sse_bench(&ds, &p, 128, &wl, 21).unwrap();
        let b = run_sse_bench(&ds, &p, 128, &wl, 21).unwrap();
        let mut ja = serde_json::to_value(&a).unwrap();
        let mut jb = serde_json::to_value(&b).unwrap();
        strip_timing(&mut ja);
        strip_timing(&mut jb);
        assert_eq!(ja, jb);

        let a = run_hve_bench(64, &p, 40, &[1, 2], 21).unwrap();
        let b = run_hve_bench(64, &p, 40, &[1, 2], 21).unwrap();
        let mut ja = serde_json::to_value(&a).unwrap();
        let mut jb = serde_json::to_value(&b).unwrap();
        strip_timing(&mut ja);
        strip_timing(&mut jb);
        // Speedup is a ratio of timings.
        strip_field(&mut ja, "speedup");
        strip_field(&mut jb, "speedup");
        assert_eq!(ja, jb);
    }

    fn strip_field(value: &mut serde_json::Value, name: &str) {
        match value {
            serde_json::Value::Object(map) => {
                map.retain(|k, _| k != name);
                for v in map.values_mut() {
                    strip_field(v, name);
                }
            }
            serde_json::Value::Array(items) => {
                for v in items.iter_mut() {
                    strip_field(v, name);
                }
            }
            _ => {}
        }
    }

    #[test]
    fn report_emission_round_trip() {
        let report = run_cost_bench(&GasSchedule::default(), &SpamPolicy::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("cost.json");
        let csv_path = dir.path().join("cost.csv");
        emit_report(&report, ReportFormat::Json, &json_path).unwrap();
        emit_report(&report, ReportFormat::Csv, &csv_path).unwrap();

        let parsed: CostBenchReport =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed.purchase_gas, report.purchase_gas);

        let csv_text = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines = csv_text.lines();
        assert_eq!(lines.next().unwrap(), "sequence,operation,gas,usd");
        assert_eq!(csv_text.lines().count(), 1 + report.csv_rows().len());

        // Non-timing fields are deterministic across runs.
        let again = run_cost_bench(&GasSchedule::default(), &SpamPolicy::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }
}
