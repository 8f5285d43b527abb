//! Seeded synthetic camera streams.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::occupancy::TrackerConfig;
use crate::perception::{iou, BBox, Detection, DetectionEvent, ObjectClass};

/// One camera's ground-truth spots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpots {
    pub lot_id: String,
    pub camera_id: String,
    pub spots: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub seed: u64,
    pub frames: u64,
    /// Maximum shift, in pixels, along each axis.
    #[serde(default)]
    pub jitter_px: f64,
    /// Probability that a spot is missing from a frame.
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub start_ms: i64,
    #[serde(default = "default_interval")]
    pub frame_interval_ms: i64,
    /// Threshold the jitter bound is checked against.
    #[serde(default = "default_tau")]
    pub tau_match: f64,
    pub cameras: Vec<CameraSpots>,
}

fn default_confidence() -> f64 {
    0.9
}

fn default_interval() -> i64 {
    100
}

fn default_tau() -> f64 {
    TrackerConfig::default().tau_match
}

/// Lowest IoU between `b` and any copy of it shifted by at most `j` on
/// each axis. The worst case is the corner shift `(j, j)`.
pub fn worst_case_jitter_iou(b: &BBox, j: f64) -> f64 {
    if j <= 0.0 {
        return 1.0;
    }
    match b.translate(j, j) {
        Ok(shifted) => iou(b, &shifted),
        Err(_) => 0.0,
    }
}

impl StreamSpec {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SimError::Format(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.jitter_px >= 0.0 && self.jitter_px.is_finite()) {
            return bad(format!("jitter_px {} must be finite and non-negative", self.jitter_px));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return bad(format!("confidence {} outside [0, 1]", self.confidence));
        }
        if !(self.tau_match > 0.0 && self.tau_match <= 1.0) {
            return bad(format!("tau_match {} outside (0, 1]", self.tau_match));
        }
        if self.frame_interval_ms < 0 {
            return bad("frame_interval_ms must be non-negative".into());
        }
        let mut seen = std::collections::HashSet::new();
        for cam in &self.cameras {
            if !seen.insert(cam.camera_id.as_str()) {
                return bad(format!("camera `{}` listed twice", cam.camera_id));
            }
            for b in &cam.spots {
                if b.x_min() < self.jitter_px || b.y_min() < self.jitter_px {
                    return bad(format!(
                        "spot {:?} on `{}` is closer than jitter_px to the image edge",
                        <[f64; 4]>::from(*b),
                        cam.camera_id
                    ));
                }
                let worst = worst_case_jitter_iou(b, self.jitter_px);
                if worst < self.tau_match {
                    return bad(format!(
                        "jitter {} px lets spot {:?} on `{}` fall to IoU {worst:.3} < {}",
                        self.jitter_px,
                        <[f64; 4]>::from(*b),
                        cam.camera_id,
                        self.tau_match
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Generates the stream: per frame, one event per camera, each visible
/// spot jittered by a uniform shift in `[-jitter_px, jitter_px]`.
pub fn generate_stream(spec: &StreamSpec) -> Result<Vec<DetectionEvent>, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let j = spec.jitter_px;
    let mut events = Vec::with_capacity(spec.frames as usize * spec.cameras.len());
    for frame in 0..spec.frames {
        let timestamp_ms = spec.start_ms + frame as i64 * spec.frame_interval_ms;
        for cam in &spec.cameras {
            let mut detections = Vec::with_capacity(cam.spots.len());
            for spot in &cam.spots {
                // Always draw all three numbers so the sequence does not depend on outcomes.
                let dropped = rng.random::<f64>() < spec.dropout;
                let dx = if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
                let dy = if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
                if dropped {
                    continue;
                }
                let b = spot.translate(dx, dy).map_err(|e| SimError::Invalid(e.to_string()))?;
                let det = Detection::boxed(ObjectClass::Parking, b, spec.confidence).map_err(|e| SimError::Invalid(e.to_string()))?;
                detections.push(det);
            }
            events.push(DetectionEvent {
                camera_id: cam.camera_id.clone(),
                lot_id: cam.lot_id.clone(),
                frame_index: frame,
                timestamp_ms,
                detections,
            });
        }
    }
    Ok(events)
}

/// One wire record per line.
pub fn stream_to_string(events: &[DetectionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_wire());
        out.push('\n');
    }
    out
}

pub fn write_stream(events: &[DetectionEvent], path: &Path) -> Result<(), SimError> {
    std::fs::write(path, stream_to_string(events)).map_err(|e| SimError::io(path, e))
}
