//! Detection events, box geometry, plate redaction and annotation ingestion.
//!
//! A [`DetectionEvent`] is the unit the cameras send: one frame's worth of
//! detector output. Its JSON form (one object per line) is the ingestion and
//! log-replay wire format.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("unknown object class `{0}`")]
    UnknownClass(String),
    #[error("invalid box [{0}, {1}, {2}, {3}]: need finite non-negative coordinates with min < max")]
    InvalidBox(f64, f64, f64, f64),
    #[error("confidence {0} outside [0, 1]")]
    Confidence(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite vertex")]
    NonFiniteVertex,
    #[error("polygon spans zero area")]
    DegeneratePolygon,
    #[error("polygon extends beyond its bounding box")]
    PolygonOutsideBox,
}

/// The four classes the detector emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    Car,
    Parking,
    Person,
    Plate,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 4] = [
        ObjectClass::Car,
        ObjectClass::Parking,
        ObjectClass::Person,
        ObjectClass::Plate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::Car => "car",
            ObjectClass::Parking => "parking",
            ObjectClass::Person => "person",
            ObjectClass::Plate => "plate",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectClass {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "car" => Ok(ObjectClass::Car),
            "parking" => Ok(ObjectClass::Parking),
            "person" => Ok(ObjectClass::Person),
            "plate" => Ok(ObjectClass::Plate),
            _ => Err(PerceptionError::UnknownClass(s.to_string())),
        }
    }
}

impl Serialize for ObjectClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ObjectClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned pixel box. Always has positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = PerceptionError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, PerceptionError> {
        let all_finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !all_finite || x_min < 0.0 || y_min < 0.0 || x_min >= x_max || y_min >= y_max {
            return Err(PerceptionError::InvalidBox(x_min, y_min, x_max, y_max));
        }
        Ok(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Grows the box by `margin` on every side, clipping at zero.
    pub fn dilate(&self, margin: f64) -> BBox {
        BBox {
            x_min: (self.x_min - margin).max(0.0),
            y_min: (self.y_min - margin).max(0.0),
            x_max: self.x_max + margin,
            y_max: self.y_max + margin,
        }
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x_min >= self.x_min
            && other.y_min >= self.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }

    /// Component-wise `(1 - weight) * self + weight * other`.
    ///
    /// Both inputs are valid boxes, so the blend keeps `min < max` on each
    /// axis and stays non-negative.
    pub fn blend(&self, other: &BBox, weight: f64) -> BBox {
        let mix = |a: f64, b: f64| (1.0 - weight) * a + weight * b;
        BBox {
            x_min: mix(self.x_min, other.x_min),
            y_min: mix(self.y_min, other.y_min),
            x_max: mix(self.x_max, other.x_max),
            y_max: mix(self.y_max, other.y_max),
        }
    }

    /// Shifts the box by `(dx, dy)`.
    pub fn translate(&self, dx: f64, dy: f64) -> Result<BBox, PerceptionError> {
        BBox::new(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)
    }
}

/// Intersection over union of two boxes. Boxes that only touch score 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let h = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Tight axis-aligned box around a polygon's vertices.
pub fn polygon_bbox(vertices: &[[f64; 2]]) -> Result<BBox, PerceptionError> {
    if vertices.len() < 3 {
        return Err(PerceptionError::TooFewVertices(vertices.len()));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in vertices {
        if !v[0].is_finite() || !v[1].is_finite() {
            return Err(PerceptionError::NonFiniteVertex);
        }
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    if lo[0] >= hi[0] || lo[1] >= hi[1] {
        return Err(PerceptionError::DegeneratePolygon);
    }
    BBox::new(lo[0], lo[1], hi[0], hi[1])
}

/// One detected object in a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetection")]
pub struct Detection {
    #[serde(rename = "class")]
    pub object_class: ObjectClass,
    pub bbox: BBox,
    pub confidence: f64,
    #[serde(rename = "polygon", skip_serializing_if = "Option::is_none")]
    pub mask_polygon: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    class: ObjectClass,
    bbox: BBox,
    confidence: f64,
    #[serde(default)]
    polygon: Option<Vec<[f64; 2]>>,
}

impl TryFrom<RawDetection> for Detection {
    type Error = PerceptionError;

    fn try_from(raw: RawDetection) -> Result<Self, Self::Error> {
        Detection::new(raw.class, raw.bbox, raw.confidence, raw.polygon)
    }
}

impl Detection {
    pub fn new(
        object_class: ObjectClass,
        bbox: BBox,
        confidence: f64,
        mask_polygon: Option<Vec<[f64; 2]>>,
    ) -> Result<Self, PerceptionError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(PerceptionError::Confidence(confidence));
        }
        if let Some(poly) = &mask_polygon {
            let tight = polygon_bbox(poly)?;
            if !bbox.dilate(1.0).contains(&tight) {
                return Err(PerceptionError::PolygonOutsideBox);
            }
        }
        Ok(Detection {
            object_class,
            bbox,
            confidence,
            mask_polygon,
        })
    }

    /// Box-only detection, the common case for synthetic streams.
    pub fn boxed(object_class: ObjectClass, bbox: BBox, confidence: f64) -> Result<Self, PerceptionError> {
        Detection::new(object_class, bbox, confidence, None)
    }
}

/// One camera frame of detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionEvent {
    pub camera_id: String,
    pub lot_id: String,
    pub frame_index: u64,
    pub timestamp_ms: i64,
    pub detections: Vec<Detection>,
}

impl DetectionEvent {
    /// Parses one wire record.
    pub fn from_wire(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n']))
    }

    /// Serializes to the single-line wire form (no trailing newline).
    pub fn to_wire(&self) -> String {
        serde_json::to_string(self).expect("detection events always serialize")
    }

    pub fn count(&self, class: ObjectClass) -> usize {
        self.detections.iter().filter(|d| d.object_class == class).count()
    }
}

/// Boxes to blank out for plate anonymity, in event order.
pub fn redaction_regions(event: &DetectionEvent, dilation_px: f64) -> Vec<BBox> {
    let margin = if dilation_px.is_finite() { dilation_px.max(0.0) } else { 0.0 };
    event
        .detections
        .iter()
        .filter(|d| d.object_class == ObjectClass::Plate)
        .map(|d| d.bbox.dilate(margin))
        .collect()
}

/// Keeps detections with `confidence >= threshold`.
pub fn filter_by_confidence(event: &DetectionEvent, threshold: f64) -> DetectionEvent {
    DetectionEvent {
        detections: event
            .detections
            .iter()
            .filter(|d| d.confidence >= threshold)
            .cloned()
            .collect(),
        ..event.clone()
    }
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("annotation document is not valid JSON for the supported subset: {0}")]
    Format(#[from] serde_json::Error),
    #[error("duplicate image id {0}")]
    DuplicateImageId(u64),
    #[error("category {id} has unknown name `{name}`")]
    UnknownCategory { id: u64, name: String },
    #[error("annotation {annotation_id} references undeclared category id {category_id}")]
    UndeclaredCategory { annotation_id: u64, category_id: u64 },
    #[error("annotation {annotation_id} references unknown image id {image_id}")]
    UnknownImage { annotation_id: u64, image_id: u64 },
    #[error("annotation {annotation_id} has a malformed polygon: {reason}")]
    MalformedPolygon { annotation_id: u64, reason: String },
}

#[derive(Deserialize)]
struct CocoDocument {
    #[serde(default)]
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    categories: Vec<CocoCategory>,
}

#[derive(Deserialize)]
#[allow(dead_code)]
struct CocoImage {
    id: u64,
    #[serde(default)]
    file_name: String,
    #[serde(default)]
    width: u32,
    #[serde(default)]
    height: u32,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    #[serde(default)]
    segmentation: Vec<Vec<f64>>,
    /// COCO `[x, y, width, height]`.
    #[serde(default)]
    bbox: Option<[f64; 4]>,
}

#[derive(Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

fn category_class(name: &str) -> Option<ObjectClass> {
    if let Ok(class) = name.parse() {
        return Some(class);
    }
    // Annotation tools commonly spell the plate class out.
    match name.trim().to_ascii_lowercase().replace(['_', '-'], " ").as_str() {
        "number plate" | "license plate" | "licence plate" => Some(ObjectClass::Plate),
        _ => None,
    }
}

/// Converts a COCO-style instance-segmentation document into one ground-truth
/// event per image, in document order.
///
/// Only `images`, `annotations` (polygon `segmentation`, optional `bbox`) and
/// `categories` are read. Confidence is fixed at 1.0 and `frame_index` is the
/// image's position in the document.
pub fn parse_annotations(document: &str, lot_id: &str, camera_id: &str) -> Result<Vec<DetectionEvent>, AnnotationError> {
    let doc: CocoDocument = serde_json::from_str(document)?;

    let mut classes = HashMap::new();
    for cat in &doc.categories {
        let class = category_class(&cat.name).ok_or_else(|| AnnotationError::UnknownCategory {
            id: cat.id,
            name: cat.name.clone(),
        })?;
        classes.insert(cat.id, class);
    }

    let mut slot_of = HashMap::new();
    let mut seen = HashSet::new();
    for (i, img) in doc.images.iter().enumerate() {
        if !seen.insert(img.id) {
            return Err(AnnotationError::DuplicateImageId(img.id));
        }
        slot_of.insert(img.id, i);
    }

    let mut per_image: Vec<Vec<Detection>> = vec![Vec::new(); doc.images.len()];
    for ann in &doc.annotations {
        let class = *classes.get(&ann.category_id).ok_or(AnnotationError::UndeclaredCategory {
            annotation_id: ann.id,
            category_id: ann.category_id,
        })?;
        let slot = *slot_of.get(&ann.image_id).ok_or(AnnotationError::UnknownImage {
            annotation_id: ann.id,
            image_id: ann.image_id,
        })?;
        let malformed = |reason: String| AnnotationError::MalformedPolygon {
            annotation_id: ann.id,
            reason,
        };

        let mut rings = Vec::with_capacity(ann.segmentation.len());
        for flat in &ann.segmentation {
            if flat.len() % 2 != 0 {
                return Err(malformed(format!("odd coordinate count {}", flat.len())));
            }
            let ring: Vec<[f64; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
            polygon_bbox(&ring).map_err(|e| malformed(e.to_string()))?;
            rings.push(ring);
        }
        let all_vertices: Vec<[f64; 2]> = rings.iter().flatten().copied().collect();

        let bbox = match ann.bbox {
            Some([x, y, w, h]) => BBox::new(x, y, x + w, y + h).map_err(|e| malformed(e.to_string()))?,
            None if !all_vertices.is_empty() => polygon_bbox(&all_vertices).map_err(|e| malformed(e.to_string()))?,
            None => return Err(malformed("no segmentation and no bbox".into())),
        };
        if !all_vertices.is_empty() {
            let tight = polygon_bbox(&all_vertices).map_err(|e| malformed(e.to_string()))?;
            if !bbox.dilate(1.0).contains(&tight) {
                return Err(malformed(PerceptionError::PolygonOutsideBox.to_string()));
            }
        }
        // A single ring is carried as the mask; multi-part masks are reduced to their box.
        let mask = if rings.len() == 1 { rings.pop() } else { None };
        let det = Detection::new(class, bbox, 1.0, mask).map_err(|e| malformed(e.to_string()))?;
        per_image[slot].push(det);
    }

    Ok(per_image
        .into_iter()
        .enumerate()
        .map(|(i, detections)| DetectionEvent {
            camera_id: camera_id.to_string(),
            lot_id: lot_id.to_string(),
            frame_index: i as u64,
            timestamp_ms: 0,
            detections,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(a: f64, b: f64, c: f64, d: f64) -> BBox {
        BBox::new(a, b, c, d).unwrap()
    }

    fn det(class: ObjectClass, b: BBox, conf: f64) -> Detection {
        Detection::boxed(class, b, conf).unwrap()
    }

    fn event(dets: Vec<Detection>) -> DetectionEvent {
        DetectionEvent {
            camera_id: "cam".into(),
            lot_id: "1".into(),
            frame_index: 0,
            timestamp_ms: 0,
            detections: dets,
        }
    }

    #[test]
    fn class_parsing() {
        assert_eq!("PARKING".parse::<ObjectClass>().unwrap(), ObjectClass::Parking);
        assert_eq!(" Plate".parse::<ObjectClass>().unwrap(), ObjectClass::Plate);
        assert!("truck".parse::<ObjectClass>().is_err());
        assert_eq!(serde_json::to_string(&ObjectClass::Car).unwrap(), "\"car\"");
        assert_eq!(serde_json::from_str::<ObjectClass>("\"Person\"").unwrap(), ObjectClass::Person);
    }

    #[test]
    fn box_validation() {
        assert!(BBox::new(1.0, 1.0, 1.0, 2.0).is_err());
        assert!(BBox::new(-1.0, 0.0, 1.0, 2.0).is_err());
        assert!(BBox::new(0.0, 0.0, f64::NAN, 2.0).is_err());
        assert!(serde_json::from_str::<BBox>("[0,0,2,1]").is_ok());
        assert!(serde_json::from_str::<BBox>("[3,0,2,1]").is_err());
    }

    #[test]
    fn iou_examples() {
        let b = bx(3.0, 4.0, 10.0, 12.5);
        assert_eq!(iou(&b, &b), 1.0);
        assert_eq!(iou(&bx(0.0, 0.0, 1.0, 1.0), &bx(5.0, 5.0, 6.0, 6.0)), 0.0);
        assert!((iou(&bx(0.0, 0.0, 2.0, 2.0), &bx(1.0, 1.0, 3.0, 3.0)) - 1.0 / 7.0).abs() < 1e-15);
        // touching edge and corner
        assert_eq!(iou(&bx(0.0, 0.0, 1.0, 1.0), &bx(1.0, 0.0, 2.0, 1.0)), 0.0);
        assert_eq!(iou(&bx(0.0, 0.0, 1.0, 1.0), &bx(1.0, 1.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn polygon_boxes() {
        assert_eq!(polygon_bbox(&[[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]]).unwrap(), bx(0.0, 0.0, 4.0, 3.0));
        let rect = [[2.0, 1.0], [6.0, 1.0], [6.0, 5.0], [2.0, 5.0]];
        assert_eq!(polygon_bbox(&rect).unwrap(), bx(2.0, 1.0, 6.0, 5.0));
        assert_eq!(polygon_bbox(&[[0.0, 0.0], [1.0, 1.0]]), Err(PerceptionError::TooFewVertices(2)));
        assert_eq!(
            polygon_bbox(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
            Err(PerceptionError::DegeneratePolygon)
        );
        assert_eq!(
            polygon_bbox(&[[0.0, 0.0], [1.0, f64::NAN], [2.0, 1.0]]),
            Err(PerceptionError::NonFiniteVertex)
        );
    }

    #[test]
    fn detection_invariants() {
        let b = bx(10.0, 10.0, 20.0, 20.0);
        assert_eq!(Detection::boxed(ObjectClass::Car, b, 1.2), Err(PerceptionError::Confidence(1.2)));
        let inside = vec![[9.5, 10.0], [20.5, 10.0], [15.0, 21.0]];
        assert!(Detection::new(ObjectClass::Car, b, 0.5, Some(inside)).is_ok());
        let outside = vec![[5.0, 10.0], [20.0, 10.0], [15.0, 20.0]];
        assert_eq!(
            Detection::new(ObjectClass::Car, b, 0.5, Some(outside)),
            Err(PerceptionError::PolygonOutsideBox)
        );
    }

    #[test]
    fn wire_format_is_exact() {
        let line = r#"{"camera_id":"cam-3","lot_id":"3","frame_index":7,"timestamp_ms":1700000000000,"detections":[{"class":"parking","bbox":[10.0,20.0,50.5,80.0],"confidence":0.93},{"class":"plate","bbox":[1.0,1.0,5.0,4.0],"confidence":0.8,"polygon":[[1.0,1.0],[5.0,1.0],[5.0,4.0]]}]}"#;
        let ev = DetectionEvent::from_wire(line).unwrap();
        assert_eq!(ev.detections.len(), 2);
        assert_eq!(ev.to_wire(), line);
        let upper = line.replace("\"parking\"", "\"Parking\"");
        assert_eq!(DetectionEvent::from_wire(&upper).unwrap().to_wire(), line);
    }

    #[test]
    fn wire_rejects_bad_records() {
        assert!(DetectionEvent::from_wire(r#"{"camera_id":"c","lot_id":"1","frame_index":-1,"timestamp_ms":0,"detections":[]}"#).is_err());
        assert!(DetectionEvent::from_wire(r#"{"camera_id":"c","lot_id":"1","frame_index":0,"timestamp_ms":0,"detections":[{"class":"bus","bbox":[0,0,1,1],"confidence":0.5}]}"#).is_err());
        assert!(DetectionEvent::from_wire(r#"{"camera_id":"c","lot_id":"1","frame_index":0,"timestamp_ms":0,"detections":[{"class":"car","bbox":[0,0,1,1],"confidence":1.5}]}"#).is_err());
        assert!(DetectionEvent::from_wire(r#"{"camera_id":"c","lot_id":"1","frame_index":0,"timestamp_ms":0}"#).is_err());
    }

    #[test]
    fn redaction() {
        assert!(redaction_regions(&event(vec![det(ObjectClass::Car, bx(0.0, 0.0, 5.0, 5.0), 0.9)]), 2.0).is_empty());
        let ev = event(vec![
            det(ObjectClass::Plate, bx(10.0, 10.0, 20.0, 15.0), 0.9),
            det(ObjectClass::Car, bx(0.0, 0.0, 50.0, 50.0), 0.9),
            det(ObjectClass::Plate, bx(1.0, 1.0, 5.0, 4.0), 0.7),
        ]);
        assert_eq!(
            redaction_regions(&ev, 2.0)[0],
            bx(8.0, 8.0, 22.0, 17.0)
        );
        assert_eq!(redaction_regions(&ev, 3.0)[1], bx(0.0, 0.0, 8.0, 7.0));
        assert_eq!(redaction_regions(&ev, 0.0).len(), 2);
    }

    #[test]
    fn confidence_filter() {
        let b = bx(0.0, 0.0, 1.0, 1.0);
        let ev = event(vec![
            det(ObjectClass::Parking, b, 0.3),
            det(ObjectClass::Parking, b, 0.5),
            det(ObjectClass::Car, b, 0.9),
        ]);
        assert_eq!(filter_by_confidence(&ev, 0.0), ev);
        assert!(filter_by_confidence(&ev, 1.0).detections.is_empty());
        let kept: Vec<f64> = filter_by_confidence(&ev, 0.5).detections.iter().map(|d| d.confidence).collect();
        assert_eq!(kept, vec![0.5, 0.9]);
    }

    #[test]
    fn annotations_basic() {
        assert!(parse_annotations(r#"{"images":[],"annotations":[],"categories":[]}"#, "1", "cam").unwrap().is_empty());
        let doc = r#"{"images":[{"id":4,"file_name":"a.jpg","width":640,"height":480}],
            "annotations":[{"id":1,"image_id":4,"category_id":2,"segmentation":[[10,10,60,12,58,90,12,88]]}],
            "categories":[{"id":2,"name":"parking"}]}"#;
        let evs = parse_annotations(doc, "3", "cam-3").unwrap();
        assert_eq!(evs.len(), 1);
        let d = &evs[0].detections[0];
        assert_eq!(d.object_class, ObjectClass::Parking);
        assert_eq!(d.confidence, 1.0);
        assert_eq!(d.bbox, bx(10.0, 10.0, 60.0, 90.0));
        assert_eq!(evs[0].lot_id, "3");
        assert_eq!(evs[0].camera_id, "cam-3");
    }

    #[test]
    fn annotations_errors() {
        let dup = r#"{"images":[{"id":1},{"id":1}],"annotations":[],"categories":[]}"#;
        assert!(matches!(parse_annotations(dup, "1", "c"), Err(AnnotationError::DuplicateImageId(1))));
        let unknown = r#"{"images":[],"annotations":[],"categories":[{"id":1,"name":"tree"}]}"#;
        assert!(matches!(parse_annotations(unknown, "1", "c"), Err(AnnotationError::UnknownCategory { .. })));
        let odd = r#"{"images":[{"id":1}],"annotations":[{"id":9,"image_id":1,"category_id":1,"segmentation":[[0,0,4,0,4]]}],"categories":[{"id":1,"name":"car"}]}"#;
        assert!(matches!(
            parse_annotations(odd, "1", "c"),
            Err(AnnotationError::MalformedPolygon { annotation_id: 9, .. })
        ));
        let flat = r#"{"images":[{"id":1}],"annotations":[{"id":9,"image_id":1,"category_id":1,"segmentation":[[0,0,4,0,8,0]]}],"categories":[{"id":1,"name":"car"}]}"#;
        assert!(matches!(parse_annotations(flat, "1", "c"), Err(AnnotationError::MalformedPolygon { .. })));
        let orphan = r#"{"images":[{"id":1}],"annotations":[{"id":9,"image_id":2,"category_id":1,"segmentation":[[0,0,4,0,4,4]]}],"categories":[{"id":1,"name":"car"}]}"#;
        assert!(matches!(parse_annotations(orphan, "1", "c"), Err(AnnotationError::UnknownImage { .. })));
    }

    #[test]
    fn number_plate_alias() {
        let doc = r#"{"images":[{"id":1}],"annotations":[{"id":1,"image_id":1,"category_id":7,"segmentation":[[0,0,4,0,4,3]]}],"categories":[{"id":7,"name":"Number plate"}]}"#;
        let evs = parse_annotations(doc, "1", "c").unwrap();
        assert_eq!(evs[0].count(ObjectClass::Plate), 1);
    }
}
