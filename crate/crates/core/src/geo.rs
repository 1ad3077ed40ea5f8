//! Geodetic coordinates and the WGS-84 to ECEF conversion.
//!
//! Angles cross the public boundary in degrees (track reports carry
//! degrees) and are converted to radians internally.
//!
//! The height term of `z` is `(C(1 - e²) + H) sin B`. Some printed forms of
//! the conversion put `H` inside the `(1 - e²)` factor; that variant is not
//! dimensionally consistent and is not used here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} deg outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} deg outside [-180, 180]")]
    Longitude(f64),
    #[error("invalid ellipsoid: {0}")]
    Ellipsoid(&'static str),
}

/// Reference ellipsoid described by its equatorial radius and first
/// eccentricity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidParams {
    pub equatorial_radius_m: f64,
    pub eccentricity: f64,
}

/// WGS-84 first eccentricity squared.
pub const WGS84_E2: f64 = 0.006_694_379_990_14;
/// WGS-84 equatorial radius in metres.
pub const WGS84_A: f64 = 6_378_137.0;

impl EllipsoidParams {
    pub fn new(equatorial_radius_m: f64, eccentricity: f64) -> Result<Self, GeoError> {
        if !(equatorial_radius_m > 0.0) || !equatorial_radius_m.is_finite() {
            return Err(GeoError::Ellipsoid("equatorial radius must be positive"));
        }
        if !(0.0..1.0).contains(&eccentricity) {
            return Err(GeoError::Ellipsoid("eccentricity must lie in [0, 1)"));
        }
        Ok(Self { equatorial_radius_m, eccentricity })
    }

    pub fn wgs84() -> Self {
        Self { equatorial_radius_m: WGS84_A, eccentricity: WGS84_E2.sqrt() }
    }

    /// Sphere of the given radius (zero eccentricity).
    pub fn sphere(radius_m: f64) -> Self {
        Self { equatorial_radius_m: radius_m, eccentricity: 0.0 }
    }

    pub fn eccentricity_squared(&self) -> f64 {
        self.eccentricity * self.eccentricity
    }
}

impl Default for EllipsoidParams {
    fn default() -> Self {
        Self::wgs84()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPosition {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GeodeticPosition {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(GeoError::Latitude(latitude_deg));
        }
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(GeoError::Longitude(longitude_deg));
        }
        Ok(Self { latitude_deg, longitude_deg, altitude_m })
    }
}

/// Earth-centred, earth-fixed Cartesian position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefPosition {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl EcefPosition {
    pub fn norm(&self) -> f64 {
        (self.x_m * self.x_m + self.y_m * self.y_m + self.z_m * self.z_m).sqrt()
    }

    pub fn distance_to(&self, other: &EcefPosition) -> f64 {
        let dx = self.x_m - other.x_m;
        let dy = self.y_m - other.y_m;
        let dz = self.z_m - other.z_m;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Radius of curvature in the prime vertical, `C = a / sqrt(1 - e² sin²B)`.
pub fn prime_vertical_radius(params: &EllipsoidParams, latitude_deg: f64) -> f64 {
    let sin_b = latitude_deg.to_radians().sin();
    params.equatorial_radius_m / (1.0 - params.eccentricity_squared() * sin_b * sin_b).sqrt()
}

pub fn geodetic_to_ecef(params: &EllipsoidParams, pos: &GeodeticPosition) -> EcefPosition {
    let b = pos.latitude_deg.to_radians();
    let l = pos.longitude_deg.to_radians();
    let c = prime_vertical_radius(params, pos.latitude_deg);
    let h = pos.altitude_m;
    let (sin_b, cos_b) = b.sin_cos();
    let (sin_l, cos_l) = l.sin_cos();
    EcefPosition {
        x_m: (c + h) * cos_b * cos_l,
        y_m: (c + h) * cos_b * sin_l,
        z_m: (c * (1.0 - params.eccentricity_squared()) + h) * sin_b,
    }
}

/// Straight-line (chord) distance between two positions on WGS-84.
pub fn surface_distance(a: &GeodeticPosition, b: &GeodeticPosition) -> f64 {
    if a == b {
        return 0.0;
    }
    let params = EllipsoidParams::wgs84();
    geodetic_to_ecef(&params, a).distance_to(&geodetic_to_ecef(&params, b))
}
