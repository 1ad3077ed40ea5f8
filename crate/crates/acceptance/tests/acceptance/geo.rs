use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxiguard_core::geo::{geodetic_to_ecef, prime_vertical_radius, EllipsoidParams, GeodeticPosition};

use crate::Outcome;

const TOL_M: f64 = 1e-2;

/// (lat, lon, alt) -> (C, x, y, z), evaluated at 50 significant digits
/// with an independent decimal implementation.
const REFERENCE: &[((f64, f64, f64), (f64, f64, f64, f64))] = &[
    ((0.0, 0.0, 0.0), (6378137.0, 6378137.0, 0.0, 0.0)),
    ((0.0, 90.0, 0.0), (6378137.0, 0.0, 6378137.0, 0.0)),
    ((90.0, 0.0, 0.0), (6399593.625758, 0.0, 0.0, 6356752.314245)),
    ((39.5, 116.4, 30.0), (6386792.229263, -2191264.003077, 4414272.709917, 4035322.601896)),
    ((-33.95, 151.18, 21.0), (6384805.887840, -4640357.927166, 2553168.103298, -3541859.016438)),
    ((45.0, -120.0, 1000.0), (6388838.290121, -2259148.992815, -3912960.837424, 4488055.515647)),
];

fn pos(lat: f64, lon: f64, alt: f64) -> GeodeticPosition {
    GeodeticPosition { latitude_deg: lat, longitude_deg: lon, altitude_m: alt }
}

pub fn ecef_conversion() -> Outcome {
    let w = EllipsoidParams::wgs84();
    let mut worst: f64 = 0.0;
    for &((lat, lon, alt), (c, x, y, z)) in REFERENCE {
        let e = geodetic_to_ecef(&w, &pos(lat, lon, alt));
        let err = [prime_vertical_radius(&w, lat) - c, e.x_m - x, e.y_m - y, e.z_m - z]
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        if err > TOL_M {
            return Err(format!("({lat}, {lon}, {alt}) off by {err} m"));
        }
        worst = worst.max(err);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x9e0);
    let mut worst_prop: f64 = 0.0;
    for _ in 0..10_000 {
        let (lat, lon, alt) =
            (rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0), rng.random_range(-500.0..9000.0));
        let p = geodetic_to_ecef(&w, &pos(lat, lon, alt));
        let south = geodetic_to_ecef(&w, &pos(-lat, lon, alt));
        let west = geodetic_to_ecef(&w, &pos(lat, -lon, alt));
        let wrapped = geodetic_to_ecef(&w, &pos(lat, lon + 360.0, alt));
        let checks = [
            ("latitude parity x", p.x_m - south.x_m),
            ("latitude parity y", p.y_m - south.y_m),
            ("latitude parity z", p.z_m + south.z_m),
            ("longitude parity x", p.x_m - west.x_m),
            ("longitude parity y", p.y_m + west.y_m),
            ("longitude parity z", p.z_m - west.z_m),
            ("periodicity", p.distance_to(&wrapped)),
        ];
        for (what, d) in checks {
            if d.abs() > TOL_M {
                return Err(format!("{what} off by {d} m at ({lat}, {lon}, {alt})"));
            }
            worst_prop = worst_prop.max(d.abs());
        }
        let r = rng.random_range(1.0e6..1.0e7);
        let s = geodetic_to_ecef(&EllipsoidParams::sphere(r), &pos(lat, lon, alt));
        let d = s.norm() - (r + alt);
        if d.abs() > TOL_M {
            return Err(format!("sphere radius off by {d} m"));
        }
        worst_prop = worst_prop.max(d.abs());
    }
    Ok(format!(
        "{} reference points, worst {worst:.1e} m; 10^4 parity/periodicity/sphere cases, worst {worst_prop:.1e} m",
        REFERENCE.len()
    ))
}
