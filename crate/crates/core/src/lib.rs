//! Parking occupancy tracking and lot recommendation.
//!
//! Cameras send per-frame detections ([`perception::DetectionEvent`]). The
//! [`occupancy`] tracker turns parking-class detections into deduplicated
//! spot tracks and per-lot free-spot counts. The [`recommender`] ranks lots
//! for a driver by `alpha * distance_km + (1 - alpha) / free_spots` using
//! great-circle distances from [`geo`]. [`service`] runs this as an HTTP
//! service backed by an append-only log; [`sim`] drives batch scenarios.

pub mod geo;
pub mod occupancy;
pub mod perception;
pub mod recommender;
pub mod service;
pub mod sim;

pub use geo::{haversine_km, GeoPoint};
pub use occupancy::{OccupancySnapshot, OccupancyState, ParkingLot, Registry, TrackerConfig};
pub use perception::{iou, BBox, Detection, DetectionEvent, ObjectClass};
pub use recommender::{objective, recommend, recommend_with_fixed_distances, Recommendation, RecommendationRequest};
