//! Seeded synthetic surface tracks: Gaussian ground speeds per taxiway and
//! time band, positions uniform inside each taxiway geofence. Stands in for
//! proprietary surveillance data.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airportmodel::{AirportMap, TaxiSegment};
use crate::calibration::{classify_time_band, DayWindow, TimeBand};
use crate::geo::GeodeticPosition;
use crate::trackdata::{Icao24, TrackRecord};
use crate::units::max_taxi_speed_knots;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("profile names unknown taxiway {0}")]
    UnknownTaxiway(String),
    #[error("taxiway {0} has no geofence to place fixes in")]
    NoGeofence(String),
    #[error("speed parameters for {0} need mean >= 0 and std > 0")]
    BadSpeed(String),
    #[error("profile must cover at least one day")]
    NoDays,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedParams {
    pub mean_kn: f64,
    pub std_kn: f64,
}

impl SpeedParams {
    fn valid(&self) -> bool {
        self.mean_kn.is_finite() && self.mean_kn >= 0.0 && self.std_kn.is_finite() && self.std_kn > 0.0
    }

    /// One Gaussian draw restricted to `[0, cap_kn]` by resampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, cap_kn: f64) -> f64 {
        let d = Normal::new(self.mean_kn, self.std_kn).expect("validated parameters");
        for _ in 0..1000 {
            let v = d.sample(rng);
            if (0.0..=cap_kn).contains(&v) {
                return v;
            }
        }
        self.mean_kn.clamp(0.0, cap_kn)
    }
}

fn default_speed() -> SpeedParams {
    SpeedParams { mean_kn: 12.0, std_kn: 2.0 }
}

fn default_altitude() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    pub start_date: NaiveDate,
    pub days: u32,
    pub fixes_per_band: usize,
    #[serde(default = "default_speed")]
    pub default: SpeedParams,
    /// Per-taxiway, per-band speed parameters overriding `default`.
    #[serde(default)]
    pub overrides: BTreeMap<String, BTreeMap<TimeBand, SpeedParams>>,
    /// Taxiways to generate; all map segments when absent.
    #[serde(default)]
    pub taxiways: Option<Vec<String>>,
    #[serde(default)]
    pub aircraft: Vec<Icao24>,
    #[serde(default)]
    pub day_window: DayWindow,
    #[serde(default = "default_altitude")]
    pub altitude_m: f64,
}

impl SynthProfile {
    pub fn new(start_date: NaiveDate, days: u32, fixes_per_band: usize) -> Self {
        Self {
            start_date,
            days,
            fixes_per_band,
            default: default_speed(),
            overrides: BTreeMap::new(),
            taxiways: None,
            aircraft: Vec::new(),
            day_window: DayWindow::default(),
            altitude_m: default_altitude(),
        }
    }

    pub fn speed_params(&self, taxiway: &str, band: TimeBand) -> SpeedParams {
        self.overrides.get(taxiway).and_then(|m| m.get(&band)).copied().unwrap_or(self.default)
    }

    fn start(&self) -> DateTime<Utc> {
        self.start_date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc()
    }

    /// Minutes since the profile start that fall in each band.
    fn band_minutes(&self) -> BTreeMap<TimeBand, Vec<u32>> {
        let t0 = self.start();
        let mut out: BTreeMap<TimeBand, Vec<u32>> = BTreeMap::new();
        for m in 0..self.days * 1440 {
            let band = classify_time_band(t0 + Duration::minutes(m as i64), &self.day_window);
            out.entry(band).or_default().push(m);
        }
        out
    }
}

fn heading(map: &AirportMap, seg: &TaxiSegment) -> f64 {
    let (Some(a), Some(b)) = (map.node(&seg.from), map.node(&seg.to)) else { return 0.0 };
    let dn = b.lat - a.lat;
    let de = (b.lon - a.lon) * a.lat.to_radians().cos();
    de.atan2(dn).to_degrees().rem_euclid(360.0)
}

fn default_aircraft() -> Vec<Icao24> {
    (0..16).map(|i| Icao24::new(0x780000 + 0x111 * i).expect("24-bit")).collect()
}

/// Generate `fixes_per_band` fixes for each selected taxiway and band.
/// Output is sorted by time and depends only on the map, profile and seed.
pub fn generate(map: &AirportMap, profile: &SynthProfile, seed: u64) -> Result<Vec<TrackRecord>, SynthError> {
    let ids: Vec<String> = match &profile.taxiways {
        Some(v) => v.clone(),
        None => map.segment_ids().map(str::to_owned).collect(),
    };
    let mut segments = Vec::with_capacity(ids.len());
    for id in &ids {
        let seg = map.segment(id).ok_or_else(|| SynthError::UnknownTaxiway(id.clone()))?;
        let fence = seg.geofence.as_ref().ok_or_else(|| SynthError::NoGeofence(id.clone()))?;
        for band in TimeBand::ALL {
            if !profile.speed_params(id, band).valid() {
                return Err(SynthError::BadSpeed(format!("{id}/{band}")));
            }
        }
        segments.push((seg, fence));
    }
    if segments.is_empty() {
        return Ok(Vec::new());
    }
    if profile.days == 0 {
        return Err(SynthError::NoDays);
    }

    let aircraft = if profile.aircraft.is_empty() { default_aircraft() } else { profile.aircraft.clone() };
    let minutes = profile.band_minutes();
    let t0 = profile.start();
    let cap = max_taxi_speed_knots();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(segments.len() * 4 * profile.fixes_per_band);

    for (seg, fence) in segments {
        let areas = fence.fan_areas();
        let total: f64 = areas.iter().sum();
        let hdg = heading(map, seg);
        for band in TimeBand::ALL {
            let Some(slots) = minutes.get(&band) else { continue };
            let params = profile.speed_params(&seg.taxiway_id, band);
            for _ in 0..profile.fixes_per_band {
                let minute = slots[rng.random_range(0..slots.len())];
                let micros = rng.random_range(0..60_000_000i64);
                let timestamp = t0 + Duration::minutes(minute as i64) + Duration::microseconds(micros);

                let mut pick = rng.random::<f64>() * total;
                let mut tri = areas.len() - 1;
                for (i, a) in areas.iter().enumerate() {
                    if pick < *a {
                        tri = i;
                        break;
                    }
                    pick -= a;
                }
                let [lat, lon] = fence.point_in_triangle(tri, rng.random(), rng.random());

                let reverse = rng.random_bool(0.5);
                out.push(TrackRecord {
                    icao24: aircraft[rng.random_range(0..aircraft.len())],
                    timestamp,
                    position: GeodeticPosition::new(lat, lon, profile.altitude_m).expect("inside map"),
                    ground_speed_kn: params.sample(&mut rng, cap),
                    heading_deg: if reverse { (hdg + 180.0) % 360.0 } else { hdg },
                });
            }
        }
    }
    out.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.icao24.cmp(&b.icao24)));
    Ok(out)
}
