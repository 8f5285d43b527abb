//! Geographic coordinates and great-circle distance on a spherical Earth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::occupancy::ParkingLot;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90] or not finite")]
    Latitude(f64),
    #[error("longitude {0} is outside [-180, 180] or not finite")]
    Longitude(f64),
    #[error("distance matrix needs at least one {0}")]
    Empty(&'static str),
}

/// A point on the Earth's surface in decimal degrees.
///
/// Construction validates the ranges, so every `GeoPoint` in circulation is
/// finite with `lat_deg ∈ [-90, 90]` and `lon_deg ∈ [-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint {
            lat: p.lat_deg,
            lon: p.lon_deg,
        }
    }
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !lat_deg.is_finite() || !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoError::Latitude(lat_deg));
        }
        if !lon_deg.is_finite() || !(-180.0..=180.0).contains(&lon_deg) {
            return Err(GeoError::Longitude(lon_deg));
        }
        Ok(GeoPoint { lat_deg, lon_deg })
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }
}

/// Spherical Earth used for every distance in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    pub radius_km: f64,
}

/// IUGG mean Earth radius.
pub const MEAN_EARTH: EarthModel = EarthModel {
    radius_km: 6371.0088,
};

impl EarthModel {
    /// Haversine great-circle distance in kilometers.
    pub fn haversine_km(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        let phi_a = a.lat_deg.to_radians();
        let phi_b = b.lat_deg.to_radians();
        let half_dphi = ((b.lat_deg - a.lat_deg).to_radians() / 2.0).sin();
        let half_dlambda = ((b.lon_deg - a.lon_deg).to_radians() / 2.0).sin();
        // Swapping a and b only flips the sign inside sin(), which the squares
        // erase, and the cosine product commutes: the result is bit-symmetric.
        let h = half_dphi * half_dphi + (phi_a.cos() * phi_b.cos()) * (half_dlambda * half_dlambda);
        2.0 * self.radius_km * h.clamp(0.0, 1.0).sqrt().asin()
    }
}

/// Haversine distance on [`MEAN_EARTH`].
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    MEAN_EARTH.haversine_km(a, b)
}

/// Kilometer matrix indexed `[origin][lot]`.
pub fn distance_matrix(origins: &[GeoPoint], lots: &[ParkingLot]) -> Result<Vec<Vec<f64>>, GeoError> {
    if origins.is_empty() {
        return Err(GeoError::Empty("origin"));
    }
    if lots.is_empty() {
        return Err(GeoError::Empty("lot"));
    }
    Ok(origins
        .iter()
        .map(|&o| lots.iter().map(|lot| haversine_km(o, lot.location)).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(GeoPoint::new(90.5, 0.0), Err(GeoError::Latitude(90.5)));
        assert_eq!(GeoPoint::new(0.0, -180.1), Err(GeoError::Longitude(-180.1)));
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn deserialize_validates() {
        let ok: GeoPoint = serde_json::from_str(r#"{"lat":-26.0158,"lon":28.0064}"#).unwrap();
        assert_eq!(ok, p(-26.0158, 28.0064));
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat":-126.0,"lon":28.0}"#).is_err());
    }

    #[test]
    fn identity_is_zero() {
        let a = p(-26.0158, 28.0064);
        assert_eq!(haversine_km(a, a), 0.0);
    }

    #[test]
    fn lot3_to_lot5_is_symmetric_and_near_a_kilometer() {
        let lot3 = p(-26.0158, 28.0064);
        let lot5 = p(-26.0209, 28.0139);
        let d = haversine_km(lot3, lot5);
        assert_eq!(d.to_bits(), haversine_km(lot5, lot3).to_bits());
        // Frozen from an independent mpmath evaluation at 50 digits.
        assert!((d - 0.939_820_655_717).abs() < 1e-9, "{d}");
        assert!((d - 0.94).abs() / 0.94 < 0.01);
    }

    #[test]
    fn antipodes_do_not_nan() {
        let d = haversine_km(p(0.0, 0.0), p(0.0, 180.0));
        assert!(d.is_finite());
        assert!((d - std::f64::consts::PI * MEAN_EARTH.radius_km).abs() < 1e-9);
        let d = haversine_km(p(90.0, 0.0), p(-90.0, 0.0));
        assert!(d <= std::f64::consts::PI * MEAN_EARTH.radius_km + 1e-9);
    }

    #[test]
    fn matrix_shapes_and_errors() {
        let lot = ParkingLot::new("1", "A", p(-26.0, 28.0), vec![]);
        let m = distance_matrix(&[lot.location], std::slice::from_ref(&lot)).unwrap();
        assert_eq!(m, vec![vec![0.0]]);
        assert_eq!(distance_matrix(&[], std::slice::from_ref(&lot)), Err(GeoError::Empty("origin")));
        assert_eq!(distance_matrix(&[lot.location], &[]), Err(GeoError::Empty("lot")));
    }
}
