//! Lot ranking by a weighted distance/availability objective.
//!
//! Each lot with at least one free spot scores
//! `alpha * distance_km + (1 - alpha) / spots`; lower is better. Full lots
//! are skipped. Ties go to the lot that appears first in the registry.

use std::collections::{HashMap, HashSet};
use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_km, GeoPoint};
use crate::occupancy::{OccupancySnapshot, ParkingLot};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error("lot has no free spots; the objective is undefined")]
    ZeroSpots,
    #[error("alpha {0} outside [0, 1]")]
    Alpha(f64),
    #[error("distance {0} km is negative or not finite")]
    Distance(f64),
    #[error("no lots to rank")]
    EmptyRegistry,
    #[error("no lot has a free spot")]
    NoAvailability,
    #[error("distance and spot tables disagree on lot `{0}`")]
    KeyMismatch(String),
}

/// `alpha * distance_km + (1 - alpha) / spots`.
pub fn objective(distance_km: f64, spots: u32, alpha: f64) -> Result<f64, RecommendError> {
    if spots == 0 {
        return Err(RecommendError::ZeroSpots);
    }
    check_alpha(alpha)?;
    if !distance_km.is_finite() || distance_km < 0.0 {
        return Err(RecommendError::Distance(distance_km));
    }
    Ok(alpha * distance_km + (1.0 - alpha) / f64::from(spots))
}

fn check_alpha(alpha: f64) -> Result<(), RecommendError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(RecommendError::Alpha(alpha))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRequest {
    pub origin: GeoPoint,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<NonZeroUsize>,
}

impl RecommendationRequest {
    pub fn new(origin: GeoPoint, alpha: f64, top_k: Option<NonZeroUsize>) -> Result<Self, RecommendError> {
        check_alpha(alpha)?;
        Ok(RecommendationRequest { origin, alpha, top_k })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredLot {
    pub lot_id: String,
    /// Position in the registry; the tie-break key.
    pub index: usize,
    pub distance_km: f64,
    pub spots: u32,
    pub objective: f64,
}

/// Lots ordered best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub ranked: Vec<ScoredLot>,
}

impl Ranking {
    pub fn best(&self) -> &ScoredLot {
        &self.ranked[0]
    }
}

/// A ranking with an identity, as handed to drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub recommendation_id: String,
    pub request: RecommendationRequest,
    pub snapshot_version: u64,
    pub best: ScoredLot,
    pub ranked: Vec<ScoredLot>,
}

impl Recommendation {
    pub fn issue(recommendation_id: String, request: RecommendationRequest, snapshot_version: u64, ranking: Ranking) -> Self {
        Recommendation {
            recommendation_id,
            request,
            snapshot_version,
            best: ranking.best().clone(),
            ranked: ranking.ranked,
        }
    }
}

/// A lot as the ranking sees it: registry position, distance, free spots.
#[derive(Debug, Clone, Copy)]
struct Candidate<'a> {
    index: usize,
    lot_id: &'a str,
    distance_km: f64,
    spots: u32,
}

/// Single left-to-right pass keeping only the best so far.
///
/// Replacement needs a strictly smaller objective, so on ties the earliest
/// lot stays.
fn select_best(candidates: &[Candidate<'_>], alpha: f64) -> Result<Option<(usize, f64)>, RecommendError> {
    let mut best: Option<(usize, f64)> = None;
    for (pos, c) in candidates.iter().enumerate() {
        if c.spots == 0 {
            continue;
        }
        let score = objective(c.distance_km, c.spots, alpha)?;
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((pos, score));
        }
    }
    Ok(best)
}

fn rank(candidates: &[Candidate<'_>], alpha: f64, top_k: Option<NonZeroUsize>) -> Result<Ranking, RecommendError> {
    check_alpha(alpha)?;
    if candidates.is_empty() {
        return Err(RecommendError::EmptyRegistry);
    }
    let (best_pos, _) = select_best(candidates, alpha)?.ok_or(RecommendError::NoAvailability)?;

    let mut ranked = candidates
        .iter()
        .filter(|c| c.spots > 0)
        .map(|c| {
            Ok(ScoredLot {
                lot_id: c.lot_id.to_string(),
                index: c.index,
                distance_km: c.distance_km,
                spots: c.spots,
                objective: objective(c.distance_km, c.spots, alpha)?,
            })
        })
        .collect::<Result<Vec<_>, RecommendError>>()?;
    ranked.sort_by(|a, b| a.objective.total_cmp(&b.objective).then(a.index.cmp(&b.index)));
    debug_assert_eq!(ranked[0].index, candidates[best_pos].index);
    if let Some(k) = top_k {
        ranked.truncate(k.get());
    }
    Ok(Ranking { ranked })
}

/// Index of the best lot via the single-pass scan, without building a ranking.
pub fn best_lot_index(snapshot: &OccupancySnapshot, registry: &[ParkingLot], origin: GeoPoint, alpha: f64) -> Result<usize, RecommendError> {
    check_alpha(alpha)?;
    let candidates = live_candidates(snapshot, registry, origin);
    let (pos, _) = select_best(&candidates, alpha)?.ok_or(RecommendError::NoAvailability)?;
    Ok(candidates[pos].index)
}

fn live_candidates<'a>(snapshot: &OccupancySnapshot, registry: &'a [ParkingLot], origin: GeoPoint) -> Vec<Candidate<'a>> {
    let spots: HashMap<&str, u32> = snapshot.lots.iter().map(|l| (l.lot_id.as_str(), l.available)).collect();
    registry
        .iter()
        .enumerate()
        .map(|(index, lot)| {
            let spots = spots.get(lot.lot_id.as_str()).copied().unwrap_or(0);
            // Distance only matters for lots that can be recommended.
            let distance_km = if spots > 0 { haversine_km(origin, lot.location) } else { 0.0 };
            Candidate {
                index,
                lot_id: &lot.lot_id,
                distance_km,
                spots,
            }
        })
        .collect()
}

/// Ranks the registry's lots for a driver at `request.origin`.
///
/// Lots missing from the snapshot count as full.
pub fn recommend(snapshot: &OccupancySnapshot, registry: &[ParkingLot], request: &RecommendationRequest) -> Result<Ranking, RecommendError> {
    if registry.is_empty() {
        return Err(RecommendError::EmptyRegistry);
    }
    let candidates = live_candidates(snapshot, registry, request.origin);
    rank(&candidates, request.alpha, request.top_k)
}

/// Same ranking as [`recommend`] over precomputed distances.
///
/// `distances` fixes the lot order; `spots` must have exactly the same keys.
pub fn recommend_with_fixed_distances(
    distances: &[(String, f64)],
    spots: &HashMap<String, u32>,
    alpha: f64,
    top_k: Option<NonZeroUsize>,
) -> Result<Ranking, RecommendError> {
    let mut seen = HashSet::new();
    for (id, _) in distances {
        if !spots.contains_key(id) || !seen.insert(id.as_str()) {
            return Err(RecommendError::KeyMismatch(id.clone()));
        }
    }
    if let Some(extra) = spots.keys().find(|k| !seen.contains(k.as_str())) {
        return Err(RecommendError::KeyMismatch(extra.clone()));
    }
    let candidates: Vec<Candidate<'_>> = distances
        .iter()
        .enumerate()
        .map(|(index, (id, d))| Candidate {
            index,
            lot_id: id,
            distance_km: *d,
            spots: spots[id],
        })
        .collect();
    rank(&candidates, alpha, top_k)
}
