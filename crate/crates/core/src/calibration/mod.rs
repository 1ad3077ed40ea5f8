//! Taxi-speed calibration: per-taxiway Pauta (3σ) intervals and the four
//! time-banded intervals (weekday/weekend × day/night).

mod report;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, FixedOffset, NaiveTime, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airportmodel::AirportMap;
use crate::trackdata::SegmentFix;
use crate::units::max_taxi_speed_knots;

pub use report::{constraint_report, ConstraintReport, FleetParams, FleetTable, PERIODS};
pub use stats::{ks_gaussian_test, ks_test_against, pearson, KsResult, KS_MIN_SAMPLES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("insufficient data: {got} samples, need {need}")]
    InsufficientData { got: usize, need: usize },
    #[error("degenerate data: zero spread")]
    DegenerateData,
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("invalid day window {0:?}: expected HH:MM-HH:MM")]
    DayWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeBand {
    #[serde(rename = "wdd")]
    WeekdayDay,
    #[serde(rename = "wdn")]
    WeekdayNight,
    #[serde(rename = "wed")]
    WeekendDay,
    #[serde(rename = "wen")]
    WeekendNight,
}

impl TimeBand {
    pub const ALL: [TimeBand; 4] =
        [TimeBand::WeekdayDay, TimeBand::WeekdayNight, TimeBand::WeekendDay, TimeBand::WeekendNight];

    pub fn code(self) -> &'static str {
        match self {
            TimeBand::WeekdayDay => "wdd",
            TimeBand::WeekdayNight => "wdn",
            TimeBand::WeekendDay => "wed",
            TimeBand::WeekendNight => "wen",
        }
    }

    pub fn is_weekend(self) -> bool {
        matches!(self, TimeBand::WeekendDay | TimeBand::WeekendNight)
    }
}

impl fmt::Display for TimeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Daytime window `[start, end)` in airport local time. Local time is UTC
/// plus a fixed offset so classification does not depend on the host locale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayWindow {
    #[serde(with = "hhmm")]
    pub start: NaiveTime,
    #[serde(with = "hhmm")]
    pub end: NaiveTime,
    #[serde(default)]
    pub utc_offset_minutes: i32,
}

impl Default for DayWindow {
    fn default() -> Self {
        Self {
            start: NaiveTime::from_hms_opt(6, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(18, 0, 0).unwrap(),
            utc_offset_minutes: 0,
        }
    }
}

impl DayWindow {
    pub fn with_offset(mut self, minutes: i32) -> Self {
        self.utc_offset_minutes = minutes;
        self
    }

    pub fn local(&self, ts: DateTime<Utc>) -> DateTime<FixedOffset> {
        let offset = FixedOffset::east_opt(self.utc_offset_minutes * 60)
            .unwrap_or_else(|| FixedOffset::east_opt(0).unwrap());
        ts.with_timezone(&offset)
    }

    fn is_day(&self, t: NaiveTime) -> bool {
        if self.start <= self.end {
            self.start <= t && t < self.end
        } else {
            t >= self.start || t < self.end
        }
    }
}

impl FromStr for DayWindow {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CalibrationError::DayWindow(s.to_owned());
        let (a, b) = s.split_once('-').ok_or_else(err)?;
        let parse = |t: &str| NaiveTime::parse_from_str(t.trim(), "%H:%M").map_err(|_| err());
        let (start, end) = (parse(a)?, parse(b)?);
        if start == end {
            return Err(err());
        }
        Ok(Self { start, end, utc_offset_minutes: 0 })
    }
}

impl fmt::Display for DayWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start.format("%H:%M"), self.end.format("%H:%M"))
    }
}

mod hhmm {
    use chrono::NaiveTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.format("%H:%M"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let s = String::deserialize(d)?;
        NaiveTime::parse_from_str(&s, "%H:%M").map_err(serde::de::Error::custom)
    }
}

/// Saturday and Sunday are weekend; local time inside the window is day.
pub fn classify_time_band(ts: DateTime<Utc>, window: &DayWindow) -> TimeBand {
    let local = window.local(ts);
    let weekend = matches!(local.weekday(), Weekday::Sat | Weekday::Sun);
    let t = NaiveTime::from_hms_opt(local.hour(), local.minute(), local.second()).unwrap();
    match (weekend, window.is_day(t)) {
        (false, true) => TimeBand::WeekdayDay,
        (false, false) => TimeBand::WeekdayNight,
        (true, true) => TimeBand::WeekendDay,
        (true, false) => TimeBand::WeekendNight,
    }
}

/// Taxi speed bounds for one taxiway (and optionally one time band), knots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedInterval {
    #[serde(rename = "lo")]
    pub v_lo_kn: f64,
    #[serde(rename = "hi")]
    pub v_hi_kn: f64,
    #[serde(rename = "n")]
    pub sample_count: usize,
    #[serde(rename = "mean")]
    pub mean_kn: f64,
    #[serde(rename = "std")]
    pub stddev_kn: f64,
}

impl SpeedInterval {
    /// Fixed bounds with no sample statistics behind them.
    pub fn fixed(v_lo_kn: f64, v_hi_kn: f64) -> Self {
        Self {
            v_lo_kn,
            v_hi_kn,
            sample_count: 0,
            mean_kn: (v_lo_kn + v_hi_kn) / 2.0,
            stddev_kn: (v_hi_kn - v_lo_kn) / 6.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.v_lo_kn > 0.0
            && self.v_lo_kn <= self.v_hi_kn
            && self.v_hi_kn <= 27.0
            && self.v_lo_kn.is_finite()
            && self.v_hi_kn.is_finite()
    }

    pub fn contains(&self, v_kn: f64) -> bool {
        self.v_lo_kn <= v_kn && v_kn <= self.v_hi_kn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub min_samples: usize,
    /// Lower clamp so no interval reaches zero speed.
    pub floor_kn: f64,
    /// Upper clamp; the taxi speed cap in knots.
    pub cap_kn: f64,
    pub day_window: DayWindow,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            min_samples: 30,
            floor_kn: 0.5,
            cap_kn: max_taxi_speed_knots(),
            day_window: DayWindow::default(),
        }
    }
}

/// `[max(floor, μ − 3σ), min(cap, μ + 3σ)]` with the sample mean and the
/// (n − 1) sample standard deviation.
pub fn pauta_interval(samples: &[f64], config: &CalibrationConfig) -> Result<SpeedInterval, CalibrationError> {
    if samples.len() < config.min_samples.max(2) {
        return Err(CalibrationError::InsufficientData {
            got: samples.len(),
            need: config.min_samples.max(2),
        });
    }
    let (mean, std) = stats::mean_std(samples);
    if !(std > 0.0) {
        return Err(CalibrationError::DegenerateData);
    }
    let hi = (mean + 3.0 * std).min(config.cap_kn);
    let lo = (mean - 3.0 * std).max(config.floor_kn).min(hi);
    let hi = hi.max(lo);
    Ok(SpeedInterval { v_lo_kn: lo, v_hi_kn: hi, sample_count: samples.len(), mean_kn: mean, stddev_kn: std })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMode {
    /// Banded intervals selected by the start-of-taxi time.
    #[default]
    TimeBanded,
    /// One all-hours 3σ interval per taxiway.
    Pauta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxiwayCalibration {
    pub pauta: Option<SpeedInterval>,
    #[serde(default)]
    pub bands: BTreeMap<TimeBand, SpeedInterval>,
    /// Bands whose entry is the taxiway's Pauta interval because the band
    /// had too little data.
    #[serde(default)]
    pub fallback: Vec<TimeBand>,
    #[serde(default)]
    pub uncalibrated: bool,
}

impl TaxiwayCalibration {
    fn uncalibrated() -> Self {
        Self { pauta: None, bands: BTreeMap::new(), fallback: Vec::new(), uncalibrated: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMetadata {
    pub source_start: Option<DateTime<Utc>>,
    pub source_end: Option<DateTime<Utc>>,
    pub fix_count: usize,
    pub min_samples: usize,
    pub floor_kn: f64,
    pub cap_kn: f64,
    pub day_window: DayWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub taxiways: BTreeMap<String, TaxiwayCalibration>,
    pub metadata: CalibrationMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLookup {
    pub interval: SpeedInterval,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CalibrationIssue {
    #[error("taxiway {taxiway} has no calibration entry")]
    MissingTaxiway { taxiway: String },
    #[error("taxiway {taxiway} interval {band} is invalid")]
    InvalidInterval { taxiway: String, band: String },
    #[error("taxiway {taxiway} is calibrated but lacks band {band}")]
    MissingBand { taxiway: String, band: String },
}

impl CalibrationSet {
    /// The same interval on every taxiway and band, with no sample data
    /// behind it. Useful for what-if studies and fixtures.
    pub fn uniform(map: &AirportMap, interval: SpeedInterval, day_window: DayWindow) -> Self {
        let entry = TaxiwayCalibration {
            pauta: Some(interval),
            bands: TimeBand::ALL.iter().map(|&b| (b, interval)).collect(),
            fallback: Vec::new(),
            uncalibrated: false,
        };
        let defaults = CalibrationConfig::default();
        CalibrationSet {
            taxiways: map.segment_ids().map(|id| (id.to_owned(), entry.clone())).collect(),
            metadata: CalibrationMetadata {
                source_start: None,
                source_end: None,
                fix_count: 0,
                min_samples: defaults.min_samples,
                floor_kn: defaults.floor_kn,
                cap_kn: defaults.cap_kn,
                day_window,
            },
        }
    }

    pub fn day_window(&self) -> &DayWindow {
        &self.metadata.day_window
    }

    pub fn get(&self, taxiway: &str) -> Option<&TaxiwayCalibration> {
        self.taxiways.get(taxiway)
    }

    /// Interval to use on `taxiway` for `band`; `None` if the taxiway is
    /// missing or uncalibrated.
    pub fn lookup(&self, taxiway: &str, band: TimeBand, mode: CalibrationMode) -> Option<BandLookup> {
        let entry = self.taxiways.get(taxiway)?;
        if entry.uncalibrated {
            return None;
        }
        match mode {
            CalibrationMode::Pauta => entry.pauta.map(|interval| BandLookup { interval, fallback: false }),
            CalibrationMode::TimeBanded => entry.bands.get(&band).map(|&interval| BandLookup {
                interval,
                fallback: entry.fallback.contains(&band),
            }),
        }
    }

    /// Structural check used before importing a calibration for `map`.
    pub fn validate(&self, map: &AirportMap) -> Result<(), Vec<CalibrationIssue>> {
        let mut issues = Vec::new();
        for id in map.segment_ids() {
            if !self.taxiways.contains_key(id) {
                issues.push(CalibrationIssue::MissingTaxiway { taxiway: id.to_owned() });
            }
        }
        for (id, entry) in &self.taxiways {
            if entry.uncalibrated {
                continue;
            }
            match entry.pauta {
                Some(p) if p.is_valid() => {}
                _ => issues.push(CalibrationIssue::InvalidInterval { taxiway: id.clone(), band: "pauta".into() }),
            }
            for band in TimeBand::ALL {
                match entry.bands.get(&band) {
                    Some(i) if i.is_valid() => {}
                    Some(_) => issues.push(CalibrationIssue::InvalidInterval {
                        taxiway: id.clone(),
                        band: band.code().into(),
                    }),
                    None => issues.push(CalibrationIssue::MissingBand {
                        taxiway: id.clone(),
                        band: band.code().into(),
                    }),
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn uncalibrated_taxiways(&self) -> impl Iterator<Item = &str> {
        self.taxiways.iter().filter(|(_, e)| e.uncalibrated).map(|(k, _)| k.as_str())
    }
}

/// Build intervals for every taxiway in `map` from already speed-filtered
/// fixes. Fixes on taxiways not in the map are ignored. The result does not
/// depend on the order of `fixes`.
pub fn build_calibration(fixes: &[SegmentFix], map: &AirportMap, config: &CalibrationConfig) -> CalibrationSet {
    let mut by_taxiway: BTreeMap<&str, BTreeMap<TimeBand, Vec<f64>>> = BTreeMap::new();
    for f in fixes {
        if map.segment(&f.taxiway_id).is_none() {
            continue;
        }
        let band = classify_time_band(f.timestamp, &config.day_window);
        by_taxiway
            .entry(&f.taxiway_id)
            .or_default()
            .entry(band)
            .or_default()
            .push(f.ground_speed_kn);
    }

    let mut taxiways = BTreeMap::new();
    for id in map.segment_ids() {
        let mut bands = by_taxiway.remove(id).unwrap_or_default();
        for v in bands.values_mut() {
            v.sort_by(f64::total_cmp);
        }
        let mut all: Vec<f64> = bands.values().flatten().copied().collect();
        all.sort_by(f64::total_cmp);

        let entry = match pauta_interval(&all, config) {
            Err(_) => TaxiwayCalibration::uncalibrated(),
            Ok(pauta) => {
                let mut out = BTreeMap::new();
                let mut fallback = Vec::new();
                for band in TimeBand::ALL {
                    let samples = bands.get(&band).map(Vec::as_slice).unwrap_or(&[]);
                    match pauta_interval(samples, config) {
                        Ok(i) => {
                            out.insert(band, i);
                        }
                        Err(_) => {
                            out.insert(band, pauta);
                            fallback.push(band);
                        }
                    }
                }
                TaxiwayCalibration { pauta: Some(pauta), bands: out, fallback, uncalibrated: false }
            }
        };
        taxiways.insert(id.to_owned(), entry);
    }

    let in_map = fixes.iter().filter(|f| map.segment(&f.taxiway_id).is_some());
    let source_start = in_map.clone().map(|f| f.timestamp).min();
    let source_end = in_map.clone().map(|f| f.timestamp).max();
    CalibrationSet {
        taxiways,
        metadata: CalibrationMetadata {
            source_start,
            source_end,
            fix_count: in_map.count(),
            min_samples: config.min_samples,
            floor_kn: config.floor_kn,
            cap_kn: config.cap_kn,
            day_window: config.day_window,
        },
    }
}
