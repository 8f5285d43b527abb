//! The long-running occupancy service.
//!
//! [`Engine`] owns the tracker, the append-only log and the published
//! snapshot, independent of transport. [`http`] puts it behind `/v1`
//! endpoints.
//!
//! Writes (ingest, issued recommendations, feedback) go through one writer
//! lock that covers the log append and the state update. Readers only clone
//! the current `Arc<OccupancySnapshot>`, so a recommendation always sees one
//! snapshot version and never waits on ingestion beyond the swap.

pub mod config;
pub mod http;
pub mod log;

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::occupancy::{ApplyReport, OccupancyError, OccupancySnapshot, OccupancyState, Registry};
use crate::perception::{filter_by_confidence, DetectionEvent};
use crate::recommender::{recommend, Recommendation, RecommendError, RecommendationRequest};

pub use config::ServiceConfig;
pub use log::{replay_log, FeedbackRecord, LogRecord, Replay};

use log::{Checkpoint, LogError, LogWriter};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Registry(#[from] crate::occupancy::RegistryError),
    #[error("{0}")]
    Config(String),
}

/// Why an ingested record was turned away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectCode {
    SchemaViolation,
    RegistryMiss,
    UnknownCamera,
    StaleFrame,
    Backpressure,
    Storage,
}

impl RejectCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectCode::SchemaViolation => "schema-violation",
            RejectCode::RegistryMiss => "registry-miss",
            RejectCode::UnknownCamera => "unknown-camera",
            RejectCode::StaleFrame => "stale-frame",
            RejectCode::Backpressure => "backpressure",
            RejectCode::Storage => "storage",
        }
    }

    pub fn retryable(self) -> bool {
        matches!(self, RejectCode::Backpressure | RejectCode::Storage)
    }
}

impl From<&OccupancyError> for RejectCode {
    fn from(e: &OccupancyError) -> Self {
        match e {
            OccupancyError::RegistryMiss(_) => RejectCode::RegistryMiss,
            OccupancyError::UnknownCamera { .. } => RejectCode::UnknownCamera,
            OccupancyError::StaleFrame { .. } => RejectCode::StaleFrame,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum IngestOutcome {
    Accepted {
        snapshot_version: u64,
        #[serde(flatten)]
        report: ApplyReport,
    },
    Rejected {
        code: RejectCode,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LotStatus {
    pub lot_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub camera_ids: Vec<String>,
    pub available: u32,
    pub last_update_ms: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LotsView {
    pub snapshot_version: u64,
    pub lots: Vec<LotStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RecommendOutcome {
    Ok(Recommendation),
    NoAvailability { snapshot_version: u64 },
    Invalid { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FeedbackOutcome {
    Accepted { duplicate: bool },
    Rejected { reason: String },
}

struct Writer {
    state: OccupancyState,
    log: LogWriter,
    issued: HashMap<String, String>,
    feedback: HashMap<String, Vec<FeedbackRecord>>,
    detections: usize,
    since_checkpoint: usize,
}

pub struct Engine {
    registry: Registry,
    log_path: PathBuf,
    snapshot_interval: usize,
    queue_depth: usize,
    writer: Mutex<Writer>,
    published: RwLock<Arc<OccupancySnapshot>>,
    pending: Mutex<HashMap<String, usize>>,
    id_counter: AtomicU64,
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as i64)
}

/// Decrements a camera's in-flight counter on drop.
struct PendingGuard<'a> {
    engine: &'a Engine,
    camera: String,
}

impl Drop for PendingGuard<'_> {
    fn drop(&mut self) {
        let mut pending = self.engine.pending.lock().expect("pending lock");
        if let Some(n) = pending.get_mut(&self.camera) {
            *n -= 1;
            if *n == 0 {
                pending.remove(&self.camera);
            }
        }
    }
}

impl Engine {
    /// Loads the registry, recovers state from the log and opens it for
    /// appending.
    pub fn open(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate().map_err(ServiceError::Config)?;
        let registry = match &config.registry_path {
            Some(p) => Registry::load(p)?,
            None => Registry::johannesburg(),
        };
        let replay = log::recover(&config.log_path, registry.clone(), config.tracker.clone())?;
        let log = LogWriter::open(&config.log_path, config.fsync)?.with_lines(replay.lines);
        let Replay {
            mut state,
            issued,
            feedback,
            detections,
            ..
        } = replay;
        let id_counter = issued
            .keys()
            .filter_map(|id| id.strip_prefix("rec-")?.split('-').next()?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        let snapshot = Arc::new(state.snapshot());
        Ok(Engine {
            registry,
            log_path: config.log_path.clone(),
            snapshot_interval: config.snapshot_interval,
            queue_depth: config.queue_depth,
            writer: Mutex::new(Writer {
                state,
                log,
                issued,
                feedback,
                detections,
                since_checkpoint: 0,
            }),
            published: RwLock::new(snapshot),
            pending: Mutex::new(HashMap::new()),
            id_counter: AtomicU64::new(id_counter),
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// The current published snapshot.
    pub fn snapshot(&self) -> Arc<OccupancySnapshot> {
        self.published.read().expect("snapshot lock").clone()
    }

    fn reject(&self, code: RejectCode, reason: String, raw: &str) -> IngestOutcome {
        if !code.retryable() {
            if let Err(e) = log::quarantine(&self.log_path, code.as_str(), &reason, raw) {
                tracing::warn!("quarantine write failed: {e}");
            }
        }
        IngestOutcome::Rejected { code, reason }
    }

    /// Validates, logs and applies one wire-format record.
    pub fn ingest_raw(&self, raw: &str) -> IngestOutcome {
        match DetectionEvent::from_wire(raw) {
            Ok(event) => self.ingest_checked(event, raw),
            Err(e) => self.reject(RejectCode::SchemaViolation, e.to_string(), raw),
        }
    }

    pub fn ingest(&self, event: DetectionEvent) -> IngestOutcome {
        let raw = event.to_wire();
        self.ingest_checked(event, &raw)
    }

    fn ingest_checked(&self, event: DetectionEvent, raw: &str) -> IngestOutcome {
        let _guard = {
            let mut pending = self.pending.lock().expect("pending lock");
            let n = pending.entry(event.camera_id.clone()).or_insert(0);
            if *n >= self.queue_depth {
                return IngestOutcome::Rejected {
                    code: RejectCode::Backpressure,
                    reason: format!("camera `{}` has {} events in flight", event.camera_id, n),
                };
            }
            *n += 1;
            PendingGuard {
                engine: self,
                camera: event.camera_id.clone(),
            }
        };

        let mut w = self.writer.lock().expect("writer lock");
        if let Err(e) = w.state.check(&event) {
            drop(w);
            return self.reject((&e).into(), e.to_string(), raw);
        }
        let event = filter_by_confidence(&event, w.state.config().confidence_threshold);
        if let Err(e) = w.log.append(&LogRecord::Detection { event: event.clone() }) {
            return IngestOutcome::Rejected {
                code: RejectCode::Storage,
                reason: e.to_string(),
            };
        }
        let report = w.state.apply_event(&event).expect("event was checked under the same lock");
        w.detections += 1;
        w.since_checkpoint += 1;
        if w.since_checkpoint >= self.snapshot_interval {
            self.write_checkpoint(&mut w);
        }
        let snapshot = Arc::new(w.state.snapshot());
        let version = snapshot.version;
        *self.published.write().expect("snapshot lock") = snapshot;
        IngestOutcome::Accepted {
            snapshot_version: version,
            report,
        }
    }

    fn write_checkpoint(&self, w: &mut Writer) {
        let cp = Checkpoint {
            log_offset: w.log.offset(),
            lines: w.log.lines(),
            detections: w.detections,
            tracker: w.state.checkpoint(),
            issued: w.issued.clone(),
            feedback: w.feedback.clone(),
        };
        match log::write_checkpoint(&self.log_path, &cp) {
            Ok(()) => w.since_checkpoint = 0,
            Err(e) => tracing::warn!("checkpoint failed: {e}"),
        }
    }

    /// Registry entries with live counts from one snapshot.
    pub fn lots(&self) -> LotsView {
        let snap = self.snapshot();
        let lots = self
            .registry
            .lots()
            .iter()
            .map(|lot| {
                let count = snap.lots.iter().find(|c| c.lot_id == lot.lot_id);
                LotStatus {
                    lot_id: lot.lot_id.clone(),
                    name: lot.name.clone(),
                    lat: lot.location.lat_deg(),
                    lon: lot.location.lon_deg(),
                    camera_ids: lot.camera_ids.clone(),
                    available: count.map_or(0, |c| c.available),
                    last_update_ms: count.and_then(|c| c.last_update_ms),
                }
            })
            .collect();
        LotsView {
            snapshot_version: snap.version,
            lots,
        }
    }

    fn next_recommendation_id(&self) -> String {
        let n = self.id_counter.fetch_add(1, Ordering::SeqCst) + 1;
        let suffix: u32 = rand::rng().random();
        format!("rec-{n:010}-{suffix:08x}")
    }

    /// Ranks lots for a driver against the current snapshot and records the
    /// issued recommendation.
    pub fn recommend(&self, lat: f64, lon: f64, alpha: f64, top_k: Option<usize>) -> RecommendOutcome {
        let origin = match GeoPoint::new(lat, lon) {
            Ok(p) => p,
            Err(e) => return RecommendOutcome::Invalid { reason: e.to_string() },
        };
        let top_k = match top_k {
            None => None,
            Some(k) => match NonZeroUsize::new(k) {
                Some(k) => Some(k),
                None => return RecommendOutcome::Invalid { reason: "k must be positive".into() },
            },
        };
        let request = match RecommendationRequest::new(origin, alpha, top_k) {
            Ok(r) => r,
            Err(e) => return RecommendOutcome::Invalid { reason: e.to_string() },
        };
        let snap = self.snapshot();
        let ranking = match recommend(&snap, self.registry.lots(), &request) {
            Ok(r) => r,
            Err(RecommendError::NoAvailability) => {
                return RecommendOutcome::NoAvailability {
                    snapshot_version: snap.version,
                }
            }
            Err(e) => return RecommendOutcome::Invalid { reason: e.to_string() },
        };
        let rec = Recommendation::issue(self.next_recommendation_id(), request, snap.version, ranking);

        let mut w = self.writer.lock().expect("writer lock");
        if let Err(e) = w.log.append(&LogRecord::Recommendation {
            recommendation: rec.clone(),
        }) {
            tracing::warn!("recommendation not persisted: {e}");
        } else {
            w.issued.insert(rec.recommendation_id.clone(), rec.best.lot_id.clone());
        }
        RecommendOutcome::Ok(rec)
    }

    /// Stores driver feedback against an issued recommendation.
    pub fn feedback(&self, mut record: FeedbackRecord) -> FeedbackOutcome {
        if record.submitted_at == 0 {
            record.submitted_at = now_ms();
        }
        let mut w = self.writer.lock().expect("writer lock");
        let Some(best) = w.issued.get(&record.recommendation_id) else {
            return FeedbackOutcome::Rejected {
                reason: format!("unknown recommendation `{}`", record.recommendation_id),
            };
        };
        if record.accepted {
            if let Some(chosen) = &record.chosen_lot_id {
                if chosen != best {
                    return FeedbackOutcome::Rejected {
                        reason: format!("accepted feedback names lot `{chosen}` but lot `{best}` was recommended"),
                    };
                }
            }
        }
        if let Err(e) = w.log.append(&LogRecord::Feedback { feedback: record.clone() }) {
            return FeedbackOutcome::Rejected { reason: e.to_string() };
        }
        let entry = w.feedback.entry(record.recommendation_id.clone()).or_default();
        entry.push(record);
        FeedbackOutcome::Accepted {
            duplicate: entry.len() > 1,
        }
    }

    /// Recommendation ids that received more than one feedback record.
    pub fn duplicate_feedback(&self) -> Vec<String> {
        let w = self.writer.lock().expect("writer lock");
        let mut ids: Vec<String> = w
            .feedback
            .iter()
            .filter(|(_, v)| v.len() > 1)
            .map(|(k, _)| k.clone())
            .collect();
        ids.sort();
        ids
    }

    /// Forces a checkpoint, e.g. on shutdown.
    pub fn checkpoint(&self) {
        let mut w = self.writer.lock().expect("writer lock");
        self.write_checkpoint(&mut w);
    }
}
