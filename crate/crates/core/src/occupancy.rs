//! Vacant-spot tracking and per-lot availability counts.
//!
//! Every camera keeps its own list of [`SpotTrack`]s. Parking-class
//! detections are matched to tracks by IoU each frame; a track has to be seen
//! in `h_confirm` of the last `window` frames before it counts as an
//! available spot, and is dropped after `expiry` consecutive misses. A spot
//! that stays in view therefore keeps a single identity and is never counted
//! twice.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::perception::{filter_by_confidence, iou, BBox, DetectionEvent, ObjectClass};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("duplicate lot id `{0}`")]
    DuplicateLot(String),
    #[error("camera `{camera}` is assigned to both lot `{first}` and lot `{second}`")]
    SharedCamera { camera: String, first: String, second: String },
    #[error("invalid registry entry `{lot_id}`: {reason}")]
    InvalidEntry { lot_id: String, reason: String },
    #[error("cannot read registry: {0}")]
    Io(String),
    #[error("malformed registry: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OccupancyError {
    #[error("unknown lot `{0}`")]
    RegistryMiss(String),
    #[error("camera `{camera}` is not registered to lot `{lot_id}`")]
    UnknownCamera { camera: String, lot_id: String },
    #[error("camera `{camera}` sent frame {got} after frame {last}")]
    StaleFrame { camera: String, last: u64, got: u64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid tracker config: {0}")]
pub struct ConfigError(pub String);

/// A parking lot and the cameras that watch it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLot", into = "RawLot")]
pub struct ParkingLot {
    pub lot_id: String,
    pub name: String,
    pub location: GeoPoint,
    pub camera_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawLot {
    lot_id: String,
    name: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    camera_ids: Vec<String>,
}

impl TryFrom<RawLot> for ParkingLot {
    type Error = RegistryError;

    fn try_from(raw: RawLot) -> Result<Self, Self::Error> {
        let location = GeoPoint::new(raw.lat, raw.lon).map_err(|e| RegistryError::InvalidEntry {
            lot_id: raw.lot_id.clone(),
            reason: e.to_string(),
        })?;
        Ok(ParkingLot {
            lot_id: raw.lot_id,
            name: raw.name,
            location,
            camera_ids: raw.camera_ids,
        })
    }
}

impl From<ParkingLot> for RawLot {
    fn from(lot: ParkingLot) -> Self {
        RawLot {
            lot_id: lot.lot_id,
            name: lot.name,
            lat: lot.location.lat_deg(),
            lon: lot.location.lon_deg(),
            camera_ids: lot.camera_ids,
        }
    }
}

impl ParkingLot {
    pub fn new(lot_id: impl Into<String>, name: impl Into<String>, location: GeoPoint, camera_ids: Vec<String>) -> Self {
        ParkingLot {
            lot_id: lot_id.into(),
            name: name.into(),
            location,
            camera_ids,
        }
    }
}

/// Ordered set of lots. Registry order is the tie-break order for
/// recommendations.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    lots: Vec<ParkingLot>,
    by_id: HashMap<String, usize>,
    by_camera: HashMap<String, usize>,
}

/// The seven Johannesburg lots and their surveyed coordinates.
const JOHANNESBURG_LOTS: [(&str, &str, f64, f64); 7] = [
    ("1", "Brentwood Mall", -26.1189, 28.2804),
    ("2", "Engen Morningside service", -26.0709, 28.0644),
    ("3", "Intercare fourways", -26.0158, 28.0064),
    ("4", "Morning Glen Mall", -26.0659, 28.0736),
    ("5", "Pineslope", -26.0209, 28.0139),
    ("6", "Rivonia Junction Centre", -26.0597, 28.0600),
    ("7", "Best price supermarket Edenvale", -26.0540, 28.0552),
];

impl Registry {
    pub fn new(lots: Vec<ParkingLot>) -> Result<Self, RegistryError> {
        let mut by_id = HashMap::new();
        let mut by_camera: HashMap<String, usize> = HashMap::new();
        for (i, lot) in lots.iter().enumerate() {
            if lot.lot_id.is_empty() {
                return Err(RegistryError::InvalidEntry {
                    lot_id: lot.lot_id.clone(),
                    reason: "empty lot id".into(),
                });
            }
            if by_id.insert(lot.lot_id.clone(), i).is_some() {
                return Err(RegistryError::DuplicateLot(lot.lot_id.clone()));
            }
            for cam in &lot.camera_ids {
                if let Some(&prev) = by_camera.get(cam) {
                    return Err(RegistryError::SharedCamera {
                        camera: cam.clone(),
                        first: lots[prev].lot_id.clone(),
                        second: lot.lot_id.clone(),
                    });
                }
                by_camera.insert(cam.clone(), i);
            }
        }
        Ok(Registry { lots, by_id, by_camera })
    }

    /// Built-in registry of the seven Johannesburg lots, one camera each
    /// (`cam-1` … `cam-7`).
    pub fn johannesburg() -> Self {
        let lots = JOHANNESBURG_LOTS
            .iter()
            .map(|&(id, name, lat, lon)| {
                ParkingLot::new(id, name, GeoPoint::new(lat, lon).expect("valid"), vec![format!("cam-{id}")])
            })
            .collect();
        Registry::new(lots).expect("built-in registry is consistent")
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let lots: Vec<ParkingLot> = serde_json::from_str(text).map_err(|e| RegistryError::Format(e.to_string()))?;
        Registry::new(lots)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Io(format!("{}: {e}", path.display())))?;
        Registry::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.lots).expect("lots serialize")
    }

    pub fn lots(&self) -> &[ParkingLot] {
        &self.lots
    }

    pub fn len(&self) -> usize {
        self.lots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lots.is_empty()
    }

    pub fn index_of(&self, lot_id: &str) -> Option<usize> {
        self.by_id.get(lot_id).copied()
    }

    pub fn get(&self, lot_id: &str) -> Option<&ParkingLot> {
        self.index_of(lot_id).map(|i| &self.lots[i])
    }

    pub fn lot_of_camera(&self, camera_id: &str) -> Option<&ParkingLot> {
        self.by_camera.get(camera_id).map(|&i| &self.lots[i])
    }
}

/// Matching and debounce parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Minimum IoU for a detection to continue a track.
    pub tau_match: f64,
    /// Length of the hit/miss history, in frames.
    pub window: usize,
    /// Hits within the window needed for a track to count.
    pub h_confirm: usize,
    /// Consecutive misses after which a track is dropped.
    pub expiry: usize,
    /// Weight of the newest box in the smoothed box.
    pub beta: f64,
    pub confidence_threshold: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            tau_match: 0.5,
            window: 10,
            h_confirm: 3,
            expiry: 10,
            beta: 0.3,
            confidence_threshold: 0.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError(m.into()));
        if !(self.tau_match > 0.0 && self.tau_match <= 1.0) {
            return err("tau_match must lie in (0, 1]");
        }
        if self.window == 0 || self.h_confirm == 0 || self.h_confirm > self.window {
            return err("need 1 <= h_confirm <= window");
        }
        if self.expiry == 0 {
            return err("expiry must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return err("beta must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return err("confidence_threshold must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackState {
    Tentative,
    Active,
    Expired,
}

/// One physical parking space as seen by one camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotTrack {
    pub track_id: u64,
    pub camera_id: String,
    pub smoothed_bbox: BBox,
    /// Oldest first; `true` for frames where the track was matched.
    pub hit_window: VecDeque<bool>,
    pub state: TrackState,
    pub last_matched_frame: u64,
    pub miss_streak: usize,
}

impl SpotTrack {
    pub fn hits(&self) -> usize {
        self.hit_window.iter().filter(|&&h| h).count()
    }

    fn record(&mut self, hit: bool, window: usize) {
        self.hit_window.push_back(hit);
        while self.hit_window.len() > window {
            self.hit_window.pop_front();
        }
        if hit {
            self.miss_streak = 0;
        } else {
            self.miss_streak += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub lot_id: String,
    pub last_frame: u64,
    pub tracks: Vec<SpotTrack>,
}

/// What one `apply_event` call did to the tracks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ApplyReport {
    pub matched: Vec<u64>,
    pub created: Vec<u64>,
    pub expired: Vec<u64>,
    /// Tracks folded into an older overlapping track.
    pub merged: Vec<u64>,
    /// Unmatched detections dropped because they overlap an existing track.
    pub suppressed: usize,
}

/// Tracker state across all cameras of a registry.
#[derive(Debug, Clone)]
pub struct OccupancyState {
    registry: Registry,
    config: TrackerConfig,
    cameras: BTreeMap<String, CameraState>,
    next_track_id: u64,
    snapshot_version: u64,
    as_of_ms: Option<i64>,
    lot_last_update: Vec<Option<i64>>,
}

/// The persistable part of [`OccupancyState`]; the registry is stored
/// separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerCheckpoint {
    pub config: TrackerConfig,
    pub cameras: BTreeMap<String, CameraState>,
    pub next_track_id: u64,
    pub snapshot_version: u64,
    pub as_of_ms: Option<i64>,
    pub lot_last_update: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LotCount {
    pub lot_id: String,
    pub available: u32,
    pub last_update_ms: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CameraCount {
    pub camera_id: String,
    pub lot_id: String,
    pub tracks: usize,
    pub active: usize,
}

/// Immutable point-in-time availability counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySnapshot {
    pub version: u64,
    pub as_of_ms: Option<i64>,
    /// In registry order.
    pub lots: Vec<LotCount>,
    /// Sorted by camera id.
    pub cameras: Vec<CameraCount>,
}

impl OccupancySnapshot {
    /// Spots at `lot_id`; lots absent from the snapshot have none.
    pub fn available(&self, lot_id: &str) -> u32 {
        self.lots
            .iter()
            .find(|l| l.lot_id == lot_id)
            .map_or(0, |l| l.available)
    }

    /// Stable JSON encoding used for replay comparisons.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

impl OccupancyState {
    pub fn new(registry: Registry, config: TrackerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let n = registry.len();
        Ok(OccupancyState {
            registry,
            config,
            cameras: BTreeMap::new(),
            next_track_id: 1,
            snapshot_version: 0,
            as_of_ms: None,
            lot_last_update: vec![None; n],
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn camera(&self, camera_id: &str) -> Option<&CameraState> {
        self.cameras.get(camera_id)
    }

    pub fn cameras(&self) -> impl Iterator<Item = (&String, &CameraState)> {
        self.cameras.iter()
    }

    pub fn last_frame(&self, camera_id: &str) -> Option<u64> {
        self.cameras.get(camera_id).map(|c| c.last_frame)
    }

    /// Checks registry membership and frame ordering without touching state.
    pub fn check(&self, event: &DetectionEvent) -> Result<(), OccupancyError> {
        let lot = self
            .registry
            .get(&event.lot_id)
            .ok_or_else(|| OccupancyError::RegistryMiss(event.lot_id.clone()))?;
        if !lot.camera_ids.iter().any(|c| c == &event.camera_id) {
            return Err(OccupancyError::UnknownCamera {
                camera: event.camera_id.clone(),
                lot_id: event.lot_id.clone(),
            });
        }
        if let Some(last) = self.last_frame(&event.camera_id) {
            if event.frame_index <= last {
                return Err(OccupancyError::StaleFrame {
                    camera: event.camera_id.clone(),
                    last,
                    got: event.frame_index,
                });
            }
        }
        Ok(())
    }

    /// Advances the camera's tracks by one frame.
    ///
    /// Rejected events leave the state untouched.
    pub fn apply_event(&mut self, event: &DetectionEvent) -> Result<ApplyReport, OccupancyError> {
        self.check(event)?;
        let lot_index = self.registry.index_of(&event.lot_id).expect("checked");
        let cfg = self.config.clone();
        let event = filter_by_confidence(event, cfg.confidence_threshold);
        let boxes: Vec<BBox> = event
            .detections
            .iter()
            .filter(|d| d.object_class == ObjectClass::Parking)
            .map(|d| d.bbox)
            .collect();

        let cam = self
            .cameras
            .entry(event.camera_id.clone())
            .or_insert_with(|| CameraState {
                lot_id: event.lot_id.clone(),
                last_frame: event.frame_index,
                tracks: Vec::new(),
            });
        cam.last_frame = event.frame_index;
        let mut report = ApplyReport::default();

        // Greedy assignment, highest IoU first.
        let mut pairs = Vec::new();
        for (ti, track) in cam.tracks.iter().enumerate() {
            for (di, b) in boxes.iter().enumerate() {
                let score = iou(&track.smoothed_bbox, b);
                if score >= cfg.tau_match {
                    pairs.push((score, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_match: Vec<Option<usize>> = vec![None; cam.tracks.len()];
        let mut det_taken = vec![false; boxes.len()];
        for (_, ti, di) in pairs {
            if track_match[ti].is_none() && !det_taken[di] {
                track_match[ti] = Some(di);
                det_taken[di] = true;
            }
        }

        for (track, m) in cam.tracks.iter_mut().zip(&track_match) {
            match m {
                Some(di) => {
                    track.record(true, cfg.window);
                    track.last_matched_frame = event.frame_index;
                    track.smoothed_bbox = track.smoothed_bbox.blend(&boxes[*di], cfg.beta);
                    report.matched.push(track.track_id);
                }
                None => track.record(false, cfg.window),
            }
        }

        for track in cam.tracks.iter_mut() {
            if track.miss_streak >= cfg.expiry {
                track.state = TrackState::Expired;
                report.expired.push(track.track_id);
            } else if track.hits() >= cfg.h_confirm {
                track.state = TrackState::Active;
            } else {
                track.state = TrackState::Tentative;
            }
        }
        cam.tracks.retain(|t| t.state != TrackState::Expired);

        // Smoothing can walk two tracks onto the same spot; keep the older one.
        let mut kept: Vec<SpotTrack> = Vec::with_capacity(cam.tracks.len());
        for track in cam.tracks.drain(..) {
            if kept.iter().any(|k| iou(&k.smoothed_bbox, &track.smoothed_bbox) >= cfg.tau_match) {
                report.merged.push(track.track_id);
            } else {
                kept.push(track);
            }
        }
        cam.tracks = kept;

        for (di, b) in boxes.iter().enumerate() {
            if det_taken[di] {
                continue;
            }
            if cam.tracks.iter().any(|t| iou(&t.smoothed_bbox, b) >= cfg.tau_match) {
                report.suppressed += 1;
                continue;
            }
            let track_id = self.next_track_id;
            self.next_track_id += 1;
            let state = if cfg.h_confirm <= 1 {
                TrackState::Active
            } else {
                TrackState::Tentative
            };
            cam.tracks.push(SpotTrack {
                track_id,
                camera_id: event.camera_id.clone(),
                smoothed_bbox: *b,
                hit_window: VecDeque::from([true]),
                state,
                last_matched_frame: event.frame_index,
                miss_streak: 0,
            });
            report.created.push(track_id);
        }

        self.as_of_ms = Some(self.as_of_ms.map_or(event.timestamp_ms, |t| t.max(event.timestamp_ms)));
        let slot = &mut self.lot_last_update[lot_index];
        *slot = Some(slot.map_or(event.timestamp_ms, |t| t.max(event.timestamp_ms)));
        Ok(report)
    }

    fn active_on(&self, lot: &ParkingLot) -> u32 {
        lot.camera_ids
            .iter()
            .filter_map(|c| self.cameras.get(c))
            .flat_map(|c| c.tracks.iter())
            .filter(|t| t.state == TrackState::Active)
            .count() as u32
    }

    /// Active tracks summed over the lot's cameras.
    pub fn available_spots(&self, lot_id: &str) -> Result<u32, OccupancyError> {
        let lot = self
            .registry
            .get(lot_id)
            .ok_or_else(|| OccupancyError::RegistryMiss(lot_id.to_string()))?;
        Ok(self.active_on(lot))
    }

    /// Copies out the current counts and bumps the snapshot version.
    pub fn snapshot(&mut self) -> OccupancySnapshot {
        self.snapshot_version += 1;
        let lots = self
            .registry
            .lots()
            .iter()
            .zip(&self.lot_last_update)
            .map(|(lot, &last)| LotCount {
                lot_id: lot.lot_id.clone(),
                available: self.active_on(lot),
                last_update_ms: last,
            })
            .collect();
        let cameras = self
            .cameras
            .iter()
            .map(|(id, cam)| CameraCount {
                camera_id: id.clone(),
                lot_id: cam.lot_id.clone(),
                tracks: cam.tracks.len(),
                active: cam.tracks.iter().filter(|t| t.state == TrackState::Active).count(),
            })
            .collect();
        OccupancySnapshot {
            version: self.snapshot_version,
            as_of_ms: self.as_of_ms,
            lots,
            cameras,
        }
    }

    pub fn checkpoint(&self) -> TrackerCheckpoint {
        TrackerCheckpoint {
            config: self.config.clone(),
            cameras: self.cameras.clone(),
            next_track_id: self.next_track_id,
            snapshot_version: self.snapshot_version,
            as_of_ms: self.as_of_ms,
            lot_last_update: self
                .registry
                .lots()
                .iter()
                .zip(&self.lot_last_update)
                .filter_map(|(lot, t)| t.map(|t| (lot.lot_id.clone(), t)))
                .collect(),
        }
    }

    pub fn restore(registry: Registry, cp: TrackerCheckpoint) -> Result<Self, ConfigError> {
        let mut state = OccupancyState::new(registry, cp.config)?;
        for (cam_id, cam) in &cp.cameras {
            match state.registry.lot_of_camera(cam_id) {
                Some(lot) if lot.lot_id == cam.lot_id => {}
                _ => return Err(ConfigError(format!("checkpoint camera `{cam_id}` does not match the registry"))),
            }
        }
        state.cameras = cp.cameras;
        state.next_track_id = cp.next_track_id;
        state.snapshot_version = cp.snapshot_version;
        state.as_of_ms = cp.as_of_ms;
        for (i, lot) in state.registry.lots.iter().enumerate() {
            state.lot_last_update[i] = cp.lot_last_update.get(&lot.lot_id).copied();
        }
        Ok(state)
    }
}
