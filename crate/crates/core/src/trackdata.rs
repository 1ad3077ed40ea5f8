//! Ingest of decoded surface-track records.
//!
//! Input is BaseStation-style CSV with one fix per line:
//!
//! ```text
//! icao24,timestamp_iso8601,lat_deg,lon_deg,alt_m,gs_kn,heading_deg
//! 78142A,2019-08-06T10:00:00Z,39.5031,116.4001,35.0,12.5,358.0
//! ```
//!
//! A header line and `#` comment lines are skipped. Malformed lines never
//! disappear silently; each becomes a [`RejectedLine`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airportmodel::AirportMap;
use crate::geo::GeodeticPosition;
use crate::units::{knots_to_kmh, MAX_TAXI_SPEED_KMH};

/// 24-bit ICAO aircraft address, written as six hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Icao24(u32);

#[derive(Debug, Error, PartialEq)]
#[error("invalid ICAO address {0:?}: expected 6 hex digits")]
pub struct Icao24Error(pub String);

impl Icao24 {
    pub fn new(value: u32) -> Option<Self> {
        (value <= 0xFF_FFFF).then_some(Self(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl FromStr for Icao24 {
    type Err = Icao24Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 6 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Icao24Error(s.to_owned()));
        }
        u32::from_str_radix(s, 16).map(Self).map_err(|_| Icao24Error(s.to_owned()))
    }
}

impl fmt::Display for Icao24 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06X}", self.0)
    }
}

impl Serialize for Icao24 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Icao24 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub icao24: Icao24,
    pub timestamp: DateTime<Utc>,
    pub position: GeodeticPosition,
    pub ground_speed_kn: f64,
    pub heading_deg: f64,
}

pub const CSV_HEADER: &str = "icao24,timestamp_iso8601,lat_deg,lon_deg,alt_m,gs_kn,heading_deg";

impl TrackRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.icao24,
            self.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            self.position.latitude_deg,
            self.position.longitude_deg,
            self.position.altitude_m,
            self.ground_speed_kn,
            self.heading_deg
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    MissingField,
    FieldCount,
    BadIcao,
    BadTimestamp,
    BadNumber,
    OutOfRange,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::MissingField => "missing-field",
            RejectReason::FieldCount => "field-count",
            RejectReason::BadIcao => "bad-icao",
            RejectReason::BadTimestamp => "bad-timestamp",
            RejectReason::BadNumber => "bad-number",
            RejectReason::OutOfRange => "out-of-range",
        })
    }
}

/// One input line that did not yield a record. Serialised as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedLine {
    pub line_no: usize,
    pub reason: RejectReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read track stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("track stream is not valid CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("registry does not parse: {0}")]
    Registry(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTracks {
    pub records: Vec<TrackRecord>,
    pub rejected: Vec<RejectedLine>,
}

const FIELDS: [&str; 7] = ["icao24", "timestamp", "lat_deg", "lon_deg", "alt_m", "gs_kn", "heading_deg"];

pub fn parse_track_file<R: BufRead>(reader: R) -> Result<ParsedTracks, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = ParsedTracks::default();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                let line_no = e.position().map_or(0, |p| p.line() as usize);
                out.rejected.push(RejectedLine { line_no, reason: RejectReason::FieldCount, field: None });
                continue;
            }
        }
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.get(0) == Some("icao24") {
            continue;
        }
        match parse_fields(&record) {
            Ok(r) => out.records.push(r),
            Err((reason, field)) => out.rejected.push(RejectedLine {
                line_no,
                reason,
                field: field.map(str::to_owned),
            }),
        }
    }
    Ok(out)
}

pub fn read_track_file(path: impl AsRef<Path>) -> Result<ParsedTracks, IngestError> {
    let f = std::fs::File::open(path)?;
    parse_track_file(std::io::BufReader::new(f))
}

type FieldError = (RejectReason, Option<&'static str>);

fn parse_fields(rec: &csv::StringRecord) -> Result<TrackRecord, FieldError> {
    if rec.len() > FIELDS.len() {
        return Err((RejectReason::FieldCount, None));
    }
    let field = |i: usize| -> Result<&str, FieldError> {
        match rec.get(i) {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err((RejectReason::MissingField, Some(FIELDS[i]))),
        }
    };
    let num = |i: usize| -> Result<f64, FieldError> {
        let v: f64 = field(i)?.parse().map_err(|_| (RejectReason::BadNumber, Some(FIELDS[i])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err((RejectReason::BadNumber, Some(FIELDS[i])))
        }
    };

    let icao24 = field(0)?.parse().map_err(|_| (RejectReason::BadIcao, Some(FIELDS[0])))?;
    let timestamp = DateTime::parse_from_rfc3339(field(1)?)
        .map_err(|_| (RejectReason::BadTimestamp, Some(FIELDS[1])))?
        .with_timezone(&Utc);
    let (lat, lon, alt) = (num(2)?, num(3)?, num(4)?);
    let position = GeodeticPosition::new(lat, lon, alt).map_err(|e| match e {
        crate::geo::GeoError::Latitude(_) => (RejectReason::OutOfRange, Some(FIELDS[2])),
        _ => (RejectReason::OutOfRange, Some(FIELDS[3])),
    })?;
    let ground_speed_kn = num(5)?;
    if ground_speed_kn < 0.0 {
        return Err((RejectReason::OutOfRange, Some(FIELDS[5])));
    }
    let heading_deg = num(6)?;
    if !(0.0..360.0).contains(&heading_deg) {
        return Err((RejectReason::OutOfRange, Some(FIELDS[6])));
    }
    Ok(TrackRecord { icao24, timestamp, position, ground_speed_kn, heading_deg })
}

pub fn write_track_csv<W: Write>(mut w: W, records: &[TrackRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.to_csv_line())?;
    }
    Ok(())
}

pub fn write_rejections<W: Write>(mut w: W, rejected: &[RejectedLine]) -> std::io::Result<()> {
    for r in rejected {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Drop fixes faster than `max_taxi_speed_kmh`. Very slow and stationary
/// fixes stay: holding is part of the taxi-speed population.
pub fn filter_speed_outliers(records: Vec<TrackRecord>, max_taxi_speed_kmh: f64) -> Vec<TrackRecord> {
    records
        .into_iter()
        .filter(|r| knots_to_kmh(r.ground_speed_kn) <= max_taxi_speed_kmh)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFix {
    pub taxiway_id: String,
    pub timestamp: DateTime<Utc>,
    pub ground_speed_kn: f64,
    pub icao24: Icao24,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub fixes: Vec<SegmentFix>,
    /// Fixes outside every geofence.
    pub outside: usize,
    /// Fixes on a shared boundary of two geofences.
    pub ambiguous: usize,
    /// Fixes above the taxi speed cap that reached assignment unfiltered.
    pub over_speed: usize,
}

pub fn assign_to_segments(records: &[TrackRecord], map: &AirportMap) -> Assignment {
    let mut out = Assignment::default();
    for r in records {
        if knots_to_kmh(r.ground_speed_kn) > MAX_TAXI_SPEED_KMH {
            out.over_speed += 1;
            continue;
        }
        let lat = r.position.latitude_deg;
        let lon = r.position.longitude_deg;
        let mut hits = map
            .segments()
            .iter()
            .filter(|s| s.geofence.as_ref().is_some_and(|g| g.contains(lat, lon)));
        match (hits.next(), hits.next()) {
            (Some(seg), None) => out.fixes.push(SegmentFix {
                taxiway_id: seg.taxiway_id.clone(),
                timestamp: r.timestamp,
                ground_speed_kn: r.ground_speed_kn,
                icao24: r.icao24,
            }),
            (None, _) => out.outside += 1,
            (Some(_), Some(_)) => out.ambiguous += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AircraftInfo {
    pub icao24: Icao24,
    pub airline: String,
    #[serde(rename = "type")]
    pub aircraft_type: String,
    pub registration: String,
}

pub const UNKNOWN: &str = "UNKNOWN";

/// Local ICAO address lookup table.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<Icao24, AircraftInfo>,
}

impl Registry {
    pub fn from_json_str(s: &str) -> Result<Self, IngestError> {
        let rows: Vec<AircraftInfo> = serde_json::from_str(s)?;
        Ok(Self::from_rows(rows))
    }

    pub fn from_rows(rows: impl IntoIterator<Item = AircraftInfo>) -> Self {
        Self { entries: rows.into_iter().map(|r| (r.icao24, r)).collect() }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, icao24: Icao24) -> Option<&AircraftInfo> {
        self.entries.get(&icao24)
    }
}

/// One row per distinct address seen in `records`, ordered by address.
pub fn build_aircraft_table(records: &[TrackRecord], registry: &Registry) -> Vec<AircraftInfo> {
    let mut seen = BTreeMap::new();
    for r in records {
        seen.entry(r.icao24).or_insert_with(|| {
            registry.get(r.icao24).cloned().unwrap_or_else(|| AircraftInfo {
                icao24: r.icao24,
                airline: UNKNOWN.into(),
                aircraft_type: UNKNOWN.into(),
                registration: UNKNOWN.into(),
            })
        });
    }
    seen.into_values().collect()
}
