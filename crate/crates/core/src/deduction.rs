//! Arrival-time deduction along a cleared route.
//!
//! Each segment contributes the duration interval `[L / v_hi, L / v_lo]`;
//! node arrivals are the running interval sum from the start of taxi.
//! Arrivals are kept as elapsed seconds since `start_time` so that
//! comparisons between two timelines never pass through large epoch values.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airportmodel::{validate_command, AirportMap, CommandViolation, Leg, ResolvedRoute, TaxiCommand};
use crate::calibration::{classify_time_band, pearson, CalibrationMode, CalibrationSet, SpeedInterval, TimeBand};
use crate::units::MPS_PER_KNOT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeductionError {
    #[error("invalid command: {}", join(.0))]
    InvalidCommand(Vec<CommandViolation>),
    #[error("taxiway {0} has no calibrated interval")]
    Uncalibrated(String),
    #[error("taxiway {taxiway}: speed interval [{lo}, {hi}] kn is not usable")]
    InvalidCalibration { taxiway: String, lo: f64, hi: f64 },
    #[error("{got} observations for {expected} timeline entries")]
    LengthMismatch { got: usize, expected: usize },
    #[error("observed elapsed time at entry {0} must be positive")]
    NonPositiveObservation(usize),
}

fn join(v: &[CommandViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Closed interval of seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub lo_s: f64,
    pub hi_s: f64,
}

impl TimeInterval {
    /// `None` unless `lo ≤ hi` and both are finite.
    pub fn new(lo_s: f64, hi_s: f64) -> Option<Self> {
        (lo_s.is_finite() && hi_s.is_finite() && lo_s <= hi_s).then_some(Self { lo_s, hi_s })
    }

    pub const fn point(t: f64) -> Self {
        Self { lo_s: t, hi_s: t }
    }

    pub const ZERO: Self = Self::point(0.0);

    pub fn width(&self) -> f64 {
        self.hi_s - self.lo_s
    }

    pub fn midpoint(&self) -> f64 {
        self.lo_s + self.width() / 2.0
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo_s <= t && t <= self.hi_s
    }

    pub fn contains_interval(&self, other: &TimeInterval) -> bool {
        self.lo_s <= other.lo_s && other.hi_s <= self.hi_s
    }

    pub fn shift(&self, dt: f64) -> Self {
        Self { lo_s: self.lo_s + dt, hi_s: self.hi_s + dt }
    }
}

impl std::ops::Add for TimeInterval {
    type Output = TimeInterval;

    fn add(self, rhs: TimeInterval) -> TimeInterval {
        TimeInterval { lo_s: self.lo_s + rhs.lo_s, hi_s: self.hi_s + rhs.hi_s }
    }
}

/// Inclusive containment of an observed time.
pub fn interval_contains(interval: &TimeInterval, observed_s: f64) -> bool {
    interval.contains(observed_s)
}

/// Time to cover `length_m` at any speed in `interval`.
pub fn segment_duration(length_m: f64, interval: &SpeedInterval) -> Result<TimeInterval, DeductionError> {
    let bad = || DeductionError::InvalidCalibration {
        taxiway: String::new(),
        lo: interval.v_lo_kn,
        hi: interval.v_hi_kn,
    };
    if !(interval.v_lo_kn > 0.0) || !(interval.v_lo_kn <= interval.v_hi_kn) || !interval.v_hi_kn.is_finite() {
        return Err(bad());
    }
    if length_m == 0.0 {
        return Ok(TimeInterval::ZERO);
    }
    let lo = length_m / (interval.v_hi_kn * MPS_PER_KNOT);
    let hi = length_m / (interval.v_lo_kn * MPS_PER_KNOT);
    TimeInterval::new(lo, hi).ok_or_else(bad)
}

/// Arrival at the exit node of one route segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineEntry {
    pub taxiway_id: String,
    pub length_m: f64,
    /// Node reached on completing the segment.
    pub node_id: String,
    /// Elapsed seconds since the start of taxi.
    pub arrival: TimeInterval,
    pub band_used: TimeBand,
    pub speed: SpeedInterval,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "wire::Timeline", try_from = "wire::Timeline")]
pub struct DeducedTimeline {
    pub command_id: String,
    pub start_time: DateTime<Utc>,
    pub start_node: String,
    pub band: TimeBand,
    pub mode: CalibrationMode,
    pub entries: Vec<TimelineEntry>,
}

impl DeducedTimeline {
    /// Elapsed arrival interval at `node`; the start node is `[0, 0]`.
    pub fn node_arrival(&self, node: &str) -> Option<TimeInterval> {
        if node == self.start_node {
            return Some(TimeInterval::ZERO);
        }
        self.entries.iter().find(|e| e.node_id == node).map(|e| e.arrival)
    }

    /// Elapsed arrival interval at completion of `taxiway_id`.
    pub fn segment_arrival(&self, taxiway_id: &str) -> Option<TimeInterval> {
        self.entries.iter().find(|e| e.taxiway_id == taxiway_id).map(|e| e.arrival)
    }

    /// Absolute time `elapsed_s` after the start of taxi.
    pub fn absolute(&self, elapsed_s: f64) -> DateTime<Utc> {
        self.start_time + chrono::Duration::nanoseconds((elapsed_s * 1e9).round() as i64)
    }

    /// Seconds from `self.start_time` to `t`.
    pub fn elapsed_at(&self, t: DateTime<Utc>) -> f64 {
        seconds_between(self.start_time, t)
    }

    pub fn fallbacks(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| e.fallback).map(|e| e.taxiway_id.as_str()).collect()
    }

    /// Directed legs reconstructed from the entries.
    pub fn route(&self) -> ResolvedRoute {
        let mut at = self.start_node.clone();
        let legs = self
            .entries
            .iter()
            .map(|e| {
                let leg = Leg {
                    taxiway_id: e.taxiway_id.clone(),
                    length_m: e.length_m,
                    entry_node: at.clone(),
                    exit_node: e.node_id.clone(),
                };
                at = e.node_id.clone();
                leg
            })
            .collect();
        ResolvedRoute { legs }
    }
}

/// `b − a` in seconds, exact to the microsecond.
pub fn seconds_between(a: DateTime<Utc>, b: DateTime<Utc>) -> f64 {
    let d = b - a;
    match d.num_microseconds() {
        Some(us) => us as f64 / 1e6,
        None => d.num_milliseconds() as f64 / 1e3,
    }
}

/// Deduce arrival intervals for every node on the route.
///
/// The time band is read once from the start of taxi and used for every
/// segment. In Pauta mode the band is still recorded but the all-hours
/// interval is used.
pub fn deduce_timeline(
    cmd: &TaxiCommand,
    cal: &CalibrationSet,
    map: &AirportMap,
    mode: CalibrationMode,
) -> Result<DeducedTimeline, DeductionError> {
    let route = validate_command(cmd, map).map_err(DeductionError::InvalidCommand)?;
    deduce_route(cmd, &route, cal, mode)
}

/// As [`deduce_timeline`] for a route already resolved against the map.
pub fn deduce_route(
    cmd: &TaxiCommand,
    route: &ResolvedRoute,
    cal: &CalibrationSet,
    mode: CalibrationMode,
) -> Result<DeducedTimeline, DeductionError> {
    let band = classify_time_band(cmd.start_time, cal.day_window());
    let mut acc = TimeInterval::ZERO;
    let mut entries = Vec::with_capacity(route.legs.len());
    for leg in &route.legs {
        let found = cal
            .lookup(&leg.taxiway_id, band, mode)
            .ok_or_else(|| DeductionError::Uncalibrated(leg.taxiway_id.clone()))?;
        let d = segment_duration(leg.length_m, &found.interval).map_err(|e| match e {
            DeductionError::InvalidCalibration { lo, hi, .. } => {
                DeductionError::InvalidCalibration { taxiway: leg.taxiway_id.clone(), lo, hi }
            }
            other => other,
        })?;
        acc = acc + d;
        entries.push(TimelineEntry {
            taxiway_id: leg.taxiway_id.clone(),
            length_m: leg.length_m,
            node_id: leg.exit_node.clone(),
            arrival: acc,
            band_used: band,
            speed: found.interval,
            fallback: found.fallback,
        });
    }
    Ok(DeducedTimeline {
        command_id: cmd.command_id.clone(),
        start_time: cmd.start_time,
        start_node: route.start_node().to_owned(),
        band,
        mode,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    /// Mean of `(midpoint − observed) / observed`, in percent.
    pub avg_deviation_pct: f64,
    /// Pearson r of midpoints against observations; absent when undefined.
    pub correlation: Option<f64>,
    pub contained: usize,
    pub n: usize,
}

/// Compare deduced midpoints with observed elapsed arrival times, one per
/// entry.
pub fn timeline_midpoint_deviation(
    timeline: &DeducedTimeline,
    observed_elapsed_s: &[f64],
) -> Result<DeviationSummary, DeductionError> {
    let n = timeline.entries.len();
    if observed_elapsed_s.len() != n {
        return Err(DeductionError::LengthMismatch { got: observed_elapsed_s.len(), expected: n });
    }
    if let Some(i) = observed_elapsed_s.iter().position(|&t| !(t > 0.0)) {
        return Err(DeductionError::NonPositiveObservation(i));
    }
    let mids: Vec<f64> = timeline.entries.iter().map(|e| e.arrival.midpoint()).collect();
    let sum: f64 = mids.iter().zip(observed_elapsed_s).map(|(m, o)| (m - o) / o).sum();
    let contained = timeline
        .entries
        .iter()
        .zip(observed_elapsed_s)
        .filter(|(e, &o)| e.arrival.contains(o))
        .count();
    Ok(DeviationSummary {
        avg_deviation_pct: if n == 0 { 0.0 } else { 100.0 * sum / n as f64 },
        correlation: pearson(&mids, observed_elapsed_s).ok(),
        contained,
        n,
    })
}

mod wire {
    use super::*;

    #[derive(Serialize, Deserialize)]
    pub struct Entry {
        pub taxiway_id: String,
        pub length_m: f64,
        pub node: String,
        pub lo_iso: String,
        pub hi_iso: String,
        pub lo_s: f64,
        pub hi_s: f64,
        pub band_used: TimeBand,
        pub speed: SpeedInterval,
        pub fallback: bool,
    }

    #[derive(Serialize, Deserialize)]
    pub struct Timeline {
        pub command_id: String,
        pub start_time: DateTime<Utc>,
        pub start_node: String,
        pub band: TimeBand,
        pub mode: CalibrationMode,
        pub entries: Vec<Entry>,
        pub fallbacks: Vec<String>,
    }

    impl From<DeducedTimeline> for Timeline {
        fn from(t: DeducedTimeline) -> Self {
            let iso = |s: f64| t.absolute(s).to_rfc3339_opts(SecondsFormat::AutoSi, true);
            Timeline {
                command_id: t.command_id.clone(),
                start_time: t.start_time,
                start_node: t.start_node.clone(),
                band: t.band,
                mode: t.mode,
                fallbacks: t.fallbacks().into_iter().map(str::to_owned).collect(),
                entries: t
                    .entries
                    .iter()
                    .map(|e| Entry {
                        taxiway_id: e.taxiway_id.clone(),
                        length_m: e.length_m,
                        node: e.node_id.clone(),
                        lo_iso: iso(e.arrival.lo_s),
                        hi_iso: iso(e.arrival.hi_s),
                        lo_s: e.arrival.lo_s,
                        hi_s: e.arrival.hi_s,
                        band_used: e.band_used,
                        speed: e.speed,
                        fallback: e.fallback,
                    })
                    .collect(),
            }
        }
    }

    impl TryFrom<Timeline> for DeducedTimeline {
        type Error = String;

        fn try_from(t: Timeline) -> Result<Self, String> {
            let entries = t
                .entries
                .into_iter()
                .map(|e| {
                    let arrival = TimeInterval::new(e.lo_s, e.hi_s)
                        .ok_or_else(|| format!("entry {}: lo_s > hi_s", e.taxiway_id))?;
                    Ok(TimelineEntry {
                        taxiway_id: e.taxiway_id,
                        length_m: e.length_m,
                        node_id: e.node,
                        arrival,
                        band_used: e.band_used,
                        speed: e.speed,
                        fallback: e.fallback,
                    })
                })
                .collect::<Result<_, String>>()?;
            Ok(DeducedTimeline {
                command_id: t.command_id,
                start_time: t.start_time,
                start_node: t.start_node,
                band: t.band,
                mode: t.mode,
                entries,
            })
        }
    }
}
