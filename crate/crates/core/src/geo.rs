//! Planar and spherical helpers shared by the network and conflation stages.
//!
//! Geometry is stored as WGS84 longitude/latitude. Distances between
//! centroids and chord bearings are measured after a local equirectangular
//! projection about a caller-chosen origin, which is accurate to a few
//! centimetres over a city-sized extent.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }
}

/// Projected point in metres (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Local equirectangular projection: `x = R·Δlon·cos(lat0)`, `y = R·Δlat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    origin: LonLat,
    cos_lat0: f64,
}

impl Projection {
    pub fn new(origin: LonLat) -> Self {
        Self {
            origin,
            cos_lat0: origin.lat.to_radians().cos(),
        }
    }

    pub fn origin(&self) -> LonLat {
        self.origin
    }

    pub fn project(&self, p: LonLat) -> Point {
        Point {
            x: EARTH_RADIUS_M * (p.lon - self.origin.lon).to_radians() * self.cos_lat0,
            y: EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians(),
        }
    }

    pub fn unproject(&self, p: Point) -> LonLat {
        LonLat {
            lon: self.origin.lon + (p.x / (EARTH_RADIUS_M * self.cos_lat0)).to_degrees(),
            lat: self.origin.lat + (p.y / EARTH_RADIUS_M).to_degrees(),
        }
    }
}

/// Great-circle distance in kilometres.
pub fn haversine_km(a: LonLat, b: LonLat) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M / 1000.0 * h.sqrt().min(1.0).asin()
}

pub fn polyline_length_km(points: &[LonLat]) -> f64 {
    points.windows(2).map(|w| haversine_km(w[0], w[1])).sum()
}

/// Arithmetic mean of the vertices in lon/lat.
///
/// Equals the unprojected mean of projected vertices for any equirectangular
/// projection, since that projection is affine.
pub fn vertex_mean(points: &[LonLat]) -> LonLat {
    let n = points.len() as f64;
    let (lon, lat) = points
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p.lon, y + p.lat));
    LonLat::new(lon / n, lat / n)
}

/// Folds a compass direction (degrees clockwise from north) into `[0, 180)`.
pub fn fold_bearing(deg: f64) -> f64 {
    let b = deg.rem_euclid(180.0);
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if b >= 180.0 {
        0.0
    } else {
        b
    }
}

/// Smallest angle between two undirected lines, in `[0, 90]`.
pub fn undirected_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d).clamp(0.0, 90.0)
}

/// Even-odd containment over all rings of a polygon. Points on an edge count
/// as inside.
pub fn polygon_contains(rings: &[Vec<LonLat>], p: LonLat) -> bool {
    if rings.iter().any(|ring| on_ring_boundary(ring, p)) {
        return true;
    }
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        if n < 3 {
            continue;
        }
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[i], ring[j]);
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if p.lon < x {
                    inside = !inside;
                }
            }
            j = i;
        }
    }
    inside
}

fn on_ring_boundary(ring: &[LonLat], p: LonLat) -> bool {
    const EPS: f64 = 1e-12;
    let n = ring.len();
    if n < 2 {
        return false;
    }
    (0..n).any(|i| {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
        let scale = (b.lon - a.lon).abs().max((b.lat - a.lat).abs()).max(1.0);
        cross.abs() <= EPS * scale
            && p.lon >= a.lon.min(b.lon) - EPS
            && p.lon <= a.lon.max(b.lon) + EPS
            && p.lat >= a.lat.min(b.lat) - EPS
            && p.lat <= a.lat.max(b.lat) + EPS
    })
}
