//! Reference implementations used only by tests. None of these share code
//! with the library paths they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RADIUS_KM: f64 = 6371.0088;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central angle from unit vectors: `atan2(|a × b|, a · b)`.
///
/// Well conditioned at every separation, unlike the arcsine form.
pub fn great_circle_km(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let to_vec = |lat: f64, lon: f64| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let a = to_vec(lat_a, lon_a);
    let b = to_vec(lat_b, lon_b);
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    RADIUS_KM * sin.atan2(cos)
}

/// Vincenty's spherical special case, a second well-conditioned route.
pub fn vincenty_sphere_km(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let (p1, p2) = (lat_a.to_radians(), lat_b.to_radians());
    let dl = (lon_b - lon_a).to_radians();
    let num = ((p2.cos() * dl.sin()).powi(2) + (p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos()).powi(2)).sqrt();
    let den = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    RADIUS_KM * num.atan2(den)
}

/// Planar equirectangular approximation for short hops.
pub fn equirectangular_km(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let mean = ((lat_a + lat_b) / 2.0).to_radians();
    let x = (lon_b - lon_a).to_radians() * mean.cos();
    let y = (lat_b - lat_a).to_radians();
    RADIUS_KM * (x * x + y * y).sqrt()
}

pub fn random_point(rng: &mut impl Rng) -> (f64, f64) {
    (rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0))
}

/// Counts unit pixels covered by each integer box and by both.
/// Returns `(intersection, union)`.
pub fn raster_iou(a: [i64; 4], b: [i64; 4]) -> (i64, i64) {
    let x_lo = a[0].min(b[0]);
    let y_lo = a[1].min(b[1]);
    let x_hi = a[2].max(b[2]);
    let y_hi = a[3].max(b[3]);
    let inside = |bx: [i64; 4], x: i64, y: i64| x >= bx[0] && x < bx[2] && y >= bx[1] && y < bx[3];
    let (mut inter, mut union) = (0, 0);
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            if ia && ib {
                inter += 1;
            }
            if ia || ib {
                union += 1;
            }
        }
    }
    (inter, union)
}

pub fn random_int_box(rng: &mut impl Rng, extent: i64) -> [i64; 4] {
    let x0 = rng.random_range(0..extent - 1);
    let y0 = rng.random_range(0..extent - 1);
    let x1 = rng.random_range(x0 + 1..=extent);
    let y1 = rng.random_range(y0 + 1..=extent);
    [x0, y0, x1, y1]
}

/// Exhaustive argmin of `alpha * d + (1 - alpha) / m` over lots with
/// `m > 0`, first index on ties.
pub fn brute_force_best(distances: &[f64], spots: &[u32], alpha: f64) -> Option<usize> {
    let scores: Vec<Option<f64>> = distances
        .iter()
        .zip(spots)
        .map(|(&d, &m)| (m > 0).then(|| alpha * d + (1.0 - alpha) / m as f64))
        .collect();
    let min = scores.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    scores.iter().position(|s| *s == Some(min))
}
