//! Unit conversions shared across modules.

/// Kilometres per hour in one knot.
pub const KMH_PER_KNOT: f64 = 1.852;

/// Metres per second in one knot (1852 m / 3600 s).
pub const MPS_PER_KNOT: f64 = 1852.0 / 3600.0;

/// Maximum permitted taxi speed on the movement area, km/h.
pub const MAX_TAXI_SPEED_KMH: f64 = 50.0;

pub fn knots_to_kmh(kn: f64) -> f64 {
    kn * KMH_PER_KNOT
}

pub fn kmh_to_knots(kmh: f64) -> f64 {
    kmh / KMH_PER_KNOT
}

pub fn knots_to_mps(kn: f64) -> f64 {
    kn * MPS_PER_KNOT
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// The taxi speed cap expressed in knots (about 26.998 kn).
pub fn max_taxi_speed_knots() -> f64 {
    kmh_to_knots(MAX_TAXI_SPEED_KMH)
}
