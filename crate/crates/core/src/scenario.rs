//! Declarative scenario scripts: a list of actor actions replayed against
//! a fresh marketplace world. Used by the CLI for demos and by integration
//! tests for end-to-end flows.

use crate::geo::{GridLocation, SpatialRange};
use crate::ledger::OfferStatus;
use crate::market::{AdvertiseItem, MarketConfig, MarketError, SearchHit, World};
use crate::types::ObjectId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown actor handle '{0}'")]
    UnknownActor(String),
    #[error("unknown object handle '{0}'")]
    UnknownObjectHandle(String),
    #[error("script step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: MarketError,
    },
    #[error("malformed script: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Sse,
    Hve,
}

/// One scripted action. Actors and objects are referenced by scenario
/// handles, resolved to accounts and object ids at run time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    CreateOwner {
        name: String,
    },
    CreateBuyer {
        name: String,
    },
    Advertise {
        owner: String,
        mode: SearchMode,
        /// Handle assigned to the advertised object.
        object: String,
        lat: f64,
        lon: f64,
        #[serde(default)]
        payload_hex: Option<String>,
        #[serde(default)]
        price_wei: Option<u128>,
        /// Advertise a different position than the payload's true one.
        #[serde(default)]
        advertised_lat: Option<f64>,
        #[serde(default)]
        advertised_lon: Option<f64>,
    },
    Search {
        buyer: String,
        mode: SearchMode,
        x_lo: u32,
        x_hi: u32,
        y_lo: u32,
        y_hi: u32,
    },
    Purchase {
        buyer: String,
        object: String,
        /// Ground-truth cell the buyer can check the delivery against.
        #[serde(default)]
        actual_cell: Option<(u32, u32)>,
    },
    AdvanceBlocks {
        blocks: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub actions: Vec<Action>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step: usize,
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub steps: Vec<StepOutcome>,
    pub total_gas: u128,
    pub total_usd: f64,
    pub funds_conserved: bool,
    pub offers_completed: u64,
    pub offers_reversed: u64,
}

/// Replay a scenario against a fresh world.
pub fn run_scenario(
    scenario: &Scenario,
    config: MarketConfig,
    seed: &[u8],
) -> Result<(World, ScenarioReport), ScenarioError> {
    let mut world =
        World::new(config, seed).map_err(|source| ScenarioError::Step { step: 0, source })?;
    let mut owners = BTreeMap::new();
    let mut buyers = BTreeMap::new();
    let mut objects: BTreeMap<String, ObjectId> = BTreeMap::new();
    let mut steps = Vec::new();

    for (step, action) in scenario.actions.iter().enumerate() {
        let fail = |source: MarketError| ScenarioError::Step { step, source };
        let description = match action {
            Action::CreateOwner { name } => {
                let account = world.create_owner().map_err(fail)?;
                owners.insert(name.clone(), account);
                format!("owner '{name}' registered as {account}")
            }
            Action::CreateBuyer { name } => {
                let account = world.create_buyer().map_err(fail)?;
                buyers.insert(name.clone(), account);
                format!("buyer '{name}' funded as {account}")
            }
            Action::Advertise {
                owner,
                mode,
                object,
                lat,
                lon,
                payload_hex,
                price_wei,
                advertised_lat,
                advertised_lon,
            } => {
                let account = *owners
                    .get(owner)
                    .ok_or_else(|| ScenarioError::UnknownActor(owner.clone()))?;
                let payload = match payload_hex {
                    Some(h) => hex::decode(h)
                        .map_err(|e| ScenarioError::Malformed(format!("payload_hex: {e}")))?,
                    None => format!("object {object}").into_bytes(),
                };
                let mut item = AdvertiseItem::new(*lat, *lon, payload);
                item.price_wei = *price_wei;
                if let (Some(alat), Some(alon)) = (advertised_lat, advertised_lon) {
                    item.advertised_override = Some((*alat, *alon));
                }
                let ids = match mode {
                    SearchMode::Sse => world.sse_advertise(account, &[item]).map_err(fail)?,
                    SearchMode::Hve => world.hve_advertise(account, &[item]).map_err(fail)?,
                };
                objects.insert(object.clone(), ids[0]);
                format!("owner '{owner}' advertised '{object}' as {} via {mode:?}", ids[0])
            }
            Action::Search {
                buyer,
                mode,
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            } => {
                let account = *buyers
                    .get(buyer)
                    .ok_or_else(|| ScenarioError::UnknownActor(buyer.clone()))?;
                let range = SpatialRange::new(*x_lo, *x_hi, *y_lo, *y_hi);
                let response = match mode {
                    SearchMode::Sse => world.buyer_search_sse(account, &range).map_err(fail)?,
                    SearchMode::Hve => world.buyer_search_hve(account, &range).map_err(fail)?,
                };
                let names: Vec<String> = response
                    .hits
                    .iter()
                    .map(|h: &SearchHit| {
                        objects
                            .iter()
                            .find(|(_, id)| **id == h.object_id)
                            .map(|(name, _)| name.clone())
                            .unwrap_or_else(|| h.object_id.to_string())
                    })
                    .collect();
                format!(
                    "buyer '{buyer}' searched {range:?} via {mode:?}: {} hit(s) [{}]",
                    response.hits.len(),
                    names.join(", ")
                )
            }
            Action::Purchase {
                buyer,
                object,
                actual_cell,
            } => {
                let account = *buyers
                    .get(buyer)
                    .ok_or_else(|| ScenarioError::UnknownActor(buyer.clone()))?;
                let object_id = *objects
                    .get(object)
                    .ok_or_else(|| ScenarioError::UnknownObjectHandle(object.clone()))?;
                let ground = actual_cell.map(|(x, y)| GridLocation::new(x, y));
                let outcome = world.purchase(account, object_id, ground).map_err(fail)?;
                format!(
                    "buyer '{buyer}' purchased '{object}': {:?}, payload {} bytes",
                    outcome.status,
                    outcome.payload.map(|p| p.len()).unwrap_or(0)
                )
            }
            Action::AdvanceBlocks { blocks } => {
                world.ledger.advance_blocks(*blocks);
                format!("advanced {blocks} blocks to height {}", world.ledger.block_height())
            }
        };
        steps.push(StepOutcome { step, description });
    }

    let total_gas: u128 = world.ledger.tx_log().iter().map(|t| t.gas_used as u128).sum();
    let total_usd = world
        .ledger
        .tx_log()
        .iter()
        .map(|t| world.ledger.usd_cost(t))
        .sum();
    let (mut completed, mut reversed) = (0, 0);
    for offer in world.ledger.offers() {
        match offer.status {
            OfferStatus::Completed => completed += 1,
            OfferStatus::Reversed => reversed += 1,
            _ => {}
        }
    }
    let report = ScenarioReport {
        steps,
        total_gas,
        total_usd,
        funds_conserved: world.ledger.conservation_holds(),
        offers_completed: completed,
        offers_reversed: reversed,
    };
    Ok((world, report))
}

/// A small demonstration script: two owners advertise in both modes, a
/// buyer searches, an honest purchase completes and a fraudulent one is
/// reversed.
pub fn demo_scenario(domain: &crate::geo::DomainParams) -> Scenario {
    let b = domain.bbox();
    let l = domain.l() as f64;
    let coord = |x: f64, y: f64| {
        (
            b.min_lat + (y + 0.5) / l * (b.max_lat - b.min_lat),
            b.min_lon + (x + 0.5) / l * (b.max_lon - b.min_lon),
        )
    };
    let (lat_a, lon_a) = coord(3.0, 4.0);
    let (lat_b, lon_b) = coord(9.0, 9.0);
    let (lat_c, lon_c) = coord(2.0, 2.0);
    Scenario {
        actions: vec![
            Action::CreateOwner {
                name: "alice".into(),
            },
            Action::CreateOwner { name: "bob".into() },
            Action::CreateBuyer {
                name: "carol".into(),
            },
            Action::Advertise {
                owner: "alice".into(),
                mode: SearchMode::Sse,
                object: "photo".into(),
                lat: lat_a,
                lon: lon_a,
                payload_hex: None,
                price_wei: None,
                advertised_lat: None,
                advertised_lon: None,
            },
            Action::Advertise {
                owner: "alice".into(),
                mode: SearchMode::Hve,
                object: "clip".into(),
                lat: lat_b,
                lon: lon_b,
                payload_hex: None,
                price_wei: None,
                advertised_lat: None,
                advertised_lon: None,
            },
            Action::Advertise {
                owner: "bob".into(),
                mode: SearchMode::Sse,
                object: "forged".into(),
                lat: lat_c,
                lon: lon_c,
                payload_hex: None,
                price_wei: None,
                advertised_lat: Some(lat_b),
                advertised_lon: Some(lon_b),
            },
            Action::Search {
                buyer: "carol".into(),
                mode: SearchMode::Sse,
                x_lo: 0,
                x_hi: 7,
                y_lo: 0,
                y_hi: 7,
            },
            Action::Search {
                buyer: "carol".into(),
                mode: SearchMode::Hve,
                x_lo: 8,
                x_hi: 11,
                y_lo: 8,
                y_hi: 11,
            },
            Action::Purchase {
                buyer: "carol".into(),
                object: "photo".into(),
                actual_cell: Some((3, 4)),
            },
            Action::Purchase {
                buyer: "carol".into(),
                object: "forged".into(),
                actual_cell: Some((2, 2)),
            },
        ],
    }
}
