//! Batch scenarios: distance tables and alpha-sweep recommendation grids.
//!
//! A [`Scenario`] names a registry, a set of driver origins (coordinates or a
//! fixed origin × lot distance table), the spot counts (given directly or
//! derived by tracking event streams) and the alphas to sweep.

pub mod report;
pub mod stream;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{distance_matrix, GeoPoint};
use crate::occupancy::{OccupancyState, ParkingLot, Registry, TrackerConfig};
use crate::recommender::{recommend_with_fixed_distances, RecommendError, ScoredLot};
use crate::service::log::replay_log;

pub use report::{render_distances, render_grid, render_scores, Rendered};
pub use stream::{generate_stream, stream_to_string, write_stream, CameraSpots, StreamSpec};

/// The alpha sweep used when a scenario gives none.
pub const DEFAULT_ALPHAS: [f64; 8] = [0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario uses a fixed distance table; there are no coordinates to compute distances from")]
    NothingToCompute,
    #[error("replaying {path}: {reason}")]
    Stream { path: PathBuf, reason: String },
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}

impl SimError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedOrigin {
    pub name: String,
    #[serde(flatten)]
    pub location: GeoPoint,
}

/// Where driver distances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Origins {
    Points(Vec<NamedOrigin>),
    /// origin name → lot id → km.
    Fixed(IndexMap<String, IndexMap<String, f64>>),
}

/// Where spot counts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Spots {
    Given(IndexMap<String, u32>),
    Streams(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub registry: Registry,
    pub origins: Origins,
    pub spots: Spots,
    pub alphas: Vec<f64>,
    pub tracker: TrackerConfig,
    /// Expected best lot per `[alpha][origin]`, compared in reports.
    pub reference_grid: Option<Vec<Vec<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    lots: Option<Vec<ParkingLot>>,
    #[serde(default)]
    origins: Option<Vec<NamedOrigin>>,
    #[serde(default)]
    distance_matrix: Option<IndexMap<String, IndexMap<String, f64>>>,
    #[serde(default)]
    spots: Option<IndexMap<String, u32>>,
    #[serde(default)]
    streams: Option<Vec<PathBuf>>,
    #[serde(default)]
    alphas: Option<Vec<f64>>,
    #[serde(default)]
    tracker: Option<TrackerConfig>,
    #[serde(default)]
    reference_grid: Option<Vec<Vec<String>>>,
}

impl Scenario {
    /// Parses a scenario document; relative stream paths resolve against
    /// `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, SimError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| SimError::Format(e.to_string()))?;
        let registry = match file.lots {
            Some(lots) => Registry::new(lots).map_err(|e| SimError::Invalid(e.to_string()))?,
            None => Registry::johannesburg(),
        };
        let origins = match (file.origins, file.distance_matrix) {
            (Some(o), None) => Origins::Points(o),
            (None, Some(m)) => Origins::Fixed(m),
            _ => return Err(SimError::Invalid("give exactly one of `origins` and `distance_matrix`".into())),
        };
        let spots = match (file.spots, file.streams) {
            (Some(s), None) => Spots::Given(s),
            (None, Some(paths)) => Spots::Streams(
                paths
                    .into_iter()
                    .map(|p| if p.is_absolute() { p } else { base_dir.join(p) })
                    .collect(),
            ),
            _ => return Err(SimError::Invalid("give exactly one of `spots` and `streams`".into())),
        };
        let scenario = Scenario {
            registry,
            origins,
            spots,
            alphas: file.alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec()),
            tracker: file.tracker.unwrap_or_default(),
            reference_grid: file.reference_grid,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Scenario::from_json(&text, base)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if self.registry.is_empty() {
            return bad("registry has no lots".into());
        }
        if self.alphas.is_empty() {
            return bad("alphas must not be empty".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha {a} outside [0, 1]"));
        }
        self.tracker.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        match &self.origins {
            Origins::Points(p) if p.is_empty() => return bad("origins must not be empty".into()),
            Origins::Fixed(m) if m.is_empty() => return bad("distance_matrix must not be empty".into()),
            Origins::Fixed(m) => {
                for (origin, row) in m {
                    for lot in self.registry.lots() {
                        match row.get(&lot.lot_id) {
                            Some(d) if d.is_finite() && *d >= 0.0 => {}
                            Some(d) => return bad(format!("distance {d} for ({origin}, {}) is invalid", lot.lot_id)),
                            None => return bad(format!("distance_matrix row `{origin}` lacks lot `{}`", lot.lot_id)),
                        }
                    }
                    if let Some(extra) = row.keys().find(|k| self.registry.get(k).is_none()) {
                        return bad(format!("distance_matrix row `{origin}` names unknown lot `{extra}`"));
                    }
                }
            }
            Origins::Points(_) => {}
        }
        if let Spots::Given(s) = &self.spots {
            if let Some(extra) = s.keys().find(|k| self.registry.get(k).is_none()) {
                return bad(format!("spots names unknown lot `{extra}`"));
            }
        }
        if let Some(grid) = &self.reference_grid {
            let width = self.origin_names().len();
            if grid.len() != self.alphas.len() || grid.iter().any(|r| r.len() != width) {
                return bad("reference_grid must be alphas × origins".into());
            }
        }
        Ok(())
    }

    pub fn origin_names(&self) -> Vec<String> {
        match &self.origins {
            Origins::Points(p) => p.iter().map(|o| o.name.clone()).collect(),
            Origins::Fixed(m) => m.keys().cloned().collect(),
        }
    }

    pub fn lot_ids(&self) -> Vec<String> {
        self.registry.lots().iter().map(|l| l.lot_id.clone()).collect()
    }
}

/// Distances in km, `km[origin][lot]`, with labels in scenario order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceTable {
    pub origins: Vec<String>,
    pub lots: Vec<String>,
    pub km: Vec<Vec<f64>>,
}

/// Great-circle distances from each coordinate origin to each lot.
pub fn build_distance_table(scenario: &Scenario) -> Result<DistanceTable, SimError> {
    let Origins::Points(points) = &scenario.origins else {
        return Err(SimError::NothingToCompute);
    };
    let locations: Vec<GeoPoint> = points.iter().map(|o| o.location).collect();
    let km = distance_matrix(&locations, scenario.registry.lots()).map_err(|e| SimError::Invalid(e.to_string()))?;
    Ok(DistanceTable {
        origins: scenario.origin_names(),
        lots: scenario.lot_ids(),
        km,
    })
}

fn distances_for(scenario: &Scenario) -> Result<DistanceTable, SimError> {
    match &scenario.origins {
        Origins::Points(_) => build_distance_table(scenario),
        Origins::Fixed(m) => {
            let lots = scenario.lot_ids();
            let km = m.values().map(|row| lots.iter().map(|id| row[id]).collect()).collect();
            Ok(DistanceTable {
                origins: scenario.origin_names(),
                lots,
                km,
            })
        }
    }
}

/// Tracks every stream in order and returns the final per-lot counts.
pub fn track_streams(registry: &Registry, tracker: &TrackerConfig, paths: &[PathBuf]) -> Result<OccupancyState, SimError> {
    let mut state = OccupancyState::new(registry.clone(), tracker.clone()).map_err(|e| SimError::Invalid(e.to_string()))?;
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = crate::service::LogRecord::parse(line).map_err(|e| SimError::Stream {
                path: path.clone(),
                reason: format!("line {}: {e}", i + 1),
            })?;
            if let crate::service::LogRecord::Detection { event } = record {
                state.apply_event(&event).map_err(|e| SimError::Stream {
                    path: path.clone(),
                    reason: format!("line {}: {e}", i + 1),
                })?;
            }
        }
    }
    Ok(state)
}

/// Spot counts per lot in registry order.
pub fn resolve_spots(scenario: &Scenario) -> Result<IndexMap<String, u32>, SimError> {
    match &scenario.spots {
        Spots::Given(given) => Ok(scenario
            .registry
            .lots()
            .iter()
            .map(|l| (l.lot_id.clone(), given.get(&l.lot_id).copied().unwrap_or(0)))
            .collect()),
        Spots::Streams(paths) => {
            let mut state = track_streams(&scenario.registry, &scenario.tracker, paths)?;
            let snap = state.snapshot();
            Ok(snap.lots.into_iter().map(|l| (l.lot_id, l.available)).collect())
        }
    }
}

/// Full scoring for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellAudit {
    pub alpha: f64,
    pub origin: String,
    pub best: Option<String>,
    pub scores: Vec<ScoredLot>,
}

/// A cell where the computed lot differs from the scenario's reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMismatch {
    pub alpha: f64,
    pub origin: String,
    pub expected: String,
    pub computed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationGrid {
    pub alphas: Vec<f64>,
    pub origins: Vec<String>,
    /// `cells[alpha][origin]`; `None` when every lot is full.
    pub cells: Vec<Vec<Option<String>>>,
    pub audit: Vec<CellAudit>,
    pub spots: IndexMap<String, u32>,
    pub warnings: Vec<String>,
    pub mismatches: Vec<ReferenceMismatch>,
}

impl RecommendationGrid {
    pub fn cell(&self, alpha: f64, origin: &str) -> Option<&str> {
        let a = self.alphas.iter().position(|&x| x == alpha)?;
        let o = self.origins.iter().position(|x| x == origin)?;
        self.cells[a][o].as_deref()
    }
}

/// Best lot for every (alpha, origin) pair.
pub fn build_recommendation_grid(scenario: &Scenario) -> Result<RecommendationGrid, SimError> {
    let distances = distances_for(scenario)?;
    let spots = resolve_spots(scenario)?;
    grid_from_parts(scenario, &distances, spots)
}

fn grid_from_parts(scenario: &Scenario, distances: &DistanceTable, spots: IndexMap<String, u32>) -> Result<RecommendationGrid, SimError> {
    let spot_map: HashMap<String, u32> = spots.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let mut cells = Vec::with_capacity(scenario.alphas.len());
    let mut audit = Vec::new();
    let mut warnings = Vec::new();
    let mut mismatches = Vec::new();
    for (ai, &alpha) in scenario.alphas.iter().enumerate() {
        let mut row = Vec::with_capacity(distances.origins.len());
        for (oi, origin) in distances.origins.iter().enumerate() {
            let d: Vec<(String, f64)> = distances.lots.iter().cloned().zip(distances.km[oi].iter().copied()).collect();
            let (best, scores) = match recommend_with_fixed_distances(&d, &spot_map, alpha, None) {
                Ok(r) => (Some(r.best().lot_id.clone()), r.ranked),
                Err(RecommendError::NoAvailability) => {
                    warnings.push(format!("alpha {alpha}, origin {origin}: every lot is full"));
                    (None, Vec::new())
                }
                Err(e) => return Err(e.into()),
            };
            if let (Some(reference), Some(computed)) = (&scenario.reference_grid, &best) {
                let expected = &reference[ai][oi];
                if expected != computed {
                    mismatches.push(ReferenceMismatch {
                        alpha,
                        origin: origin.clone(),
                        expected: expected.clone(),
                        computed: computed.clone(),
                    });
                }
            }
            audit.push(CellAudit {
                alpha,
                origin: origin.clone(),
                best: best.clone(),
                scores,
            });
            row.push(best);
        }
        cells.push(row);
    }
    Ok(RecommendationGrid {
        alphas: scenario.alphas.clone(),
        origins: distances.origins.clone(),
        cells,
        audit,
        spots,
        warnings,
        mismatches,
    })
}

/// Final counts per lot after replaying an event log, which must exist.
pub fn track_log(path: &Path, registry: Registry, tracker: TrackerConfig) -> Result<crate::occupancy::OccupancySnapshot, SimError> {
    std::fs::metadata(path).map_err(|e| SimError::io(path, e))?;
    let replay = replay_log(path, registry, tracker).map_err(|e| SimError::Stream {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut state = replay.state;
    Ok(state.snapshot())
}
