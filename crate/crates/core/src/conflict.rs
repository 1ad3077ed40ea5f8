//! Pairwise conflict detection and fuzzy warning levels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airportmodel::{shared_features, AirportMap, Feature, Relation, SharedFeature, TaxiCommand};
use crate::calibration::{CalibrationMode, CalibrationSet};
use crate::deduction::{deduce_timeline, seconds_between, DeducedTimeline, DeductionError, TimeInterval};
use crate::units::kmh_to_mps;

/// Inputs of the minimum-safe-time thresholds. Derived values are always
/// recomputed from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyThresholds {
    pub v_max_kmh: f64,
    pub l_min_m: f64,
    /// Pilot reaction time.
    pub t_r_s: f64,
    /// Braking coordination time.
    pub t_bc_s: f64,
}

impl Default for SafetyThresholds {
    fn default() -> Self {
        Self { v_max_kmh: 50.0, l_min_m: 50.0, t_r_s: 2.0, t_bc_s: 1.2 }
    }
}

impl SafetyThresholds {
    /// Head-on: both aircraft close the separation.
    pub fn t_c1(&self) -> f64 {
        self.l_min_m / (2.0 * kmh_to_mps(self.v_max_kmh))
    }

    pub fn t_c2(&self) -> f64 {
        self.l_min_m / kmh_to_mps(self.v_max_kmh)
    }

    pub fn t_no1(&self) -> f64 {
        self.t_c1() + self.t_bc_s + self.t_r_s
    }

    pub fn t_no2(&self) -> f64 {
        self.t_c2() + self.t_bc_s + self.t_r_s
    }

    pub fn threshold_for(&self, relation: Relation) -> f64 {
        match relation {
            Relation::Confrontation => self.t_no1(),
            Relation::Cross | Relation::RearEnd => self.t_no2(),
        }
    }
}

/// Threshold for `relation` with the default safety parameters.
pub fn threshold_for(relation: Relation) -> f64 {
    SafetyThresholds::default().threshold_for(relation)
}

/// Interval of absolute arrival-time differences at a shared feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGapInterval {
    pub t_min_s: f64,
    pub t_max_s: f64,
}

impl Serialize for TimeGapInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.t_min_s, self.t_max_s].serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeGapInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [t_min_s, t_max_s] = <[f64; 2]>::deserialize(d)?;
        if !(0.0 <= t_min_s && t_min_s <= t_max_s) {
            return Err(serde::de::Error::custom("gap must satisfy 0 <= min <= max"));
        }
        Ok(Self { t_min_s, t_max_s })
    }
}

/// Absolute value of a signed difference interval `[lo, hi]`.
fn abs_interval(lo: f64, hi: f64) -> TimeGapInterval {
    if lo <= 0.0 && 0.0 <= hi {
        TimeGapInterval { t_min_s: 0.0, t_max_s: (-lo).max(hi) }
    } else {
        let (x, y) = (lo.abs(), hi.abs());
        TimeGapInterval { t_min_s: x.min(y), t_max_s: x.max(y) }
    }
}

/// Gap between `a` and `b` when `b`'s clock runs `offset_s` ahead of `a`'s,
/// i.e. `b`'s absolute arrival is `b + offset_s`. Written so that swapping
/// the arguments and negating the offset gives a bitwise identical gap.
pub fn gap_with_offset(a: TimeInterval, b: TimeInterval, offset_s: f64) -> TimeGapInterval {
    let lo = (a.lo_s - b.hi_s) - offset_s;
    let hi = (a.hi_s - b.lo_s) - offset_s;
    abs_interval(lo, hi)
}

/// Gap interval of two arrival intervals on a common clock.
pub fn gap_interval(a: TimeInterval, b: TimeInterval) -> TimeGapInterval {
    gap_with_offset(a, b, 0.0)
}

/// Linear conflict probability of a gap interval against `t_no`.
///
/// A point gap is certain: 1 if it does not exceed `t_no`, else 0.
pub fn conflict_probability(gap: TimeGapInterval, t_no: f64) -> f64 {
    let TimeGapInterval { t_min_s: lo, t_max_s: hi } = gap;
    if hi <= lo {
        return if lo <= t_no { 1.0 } else { 0.0 };
    }
    if t_no < lo {
        0.0
    } else if t_no > hi {
        1.0
    } else {
        ((t_no - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("warning thresholds need 0 < a < b < 1, got a = {a}, b = {b}")]
pub struct WarningThresholdError {
    pub a: f64,
    pub b: f64,
}

/// Breakpoints between the low/intermediate and intermediate/high levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThresholds")]
pub struct WarningThresholds {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawThresholds {
    a: f64,
    b: f64,
}

impl TryFrom<RawThresholds> for WarningThresholds {
    type Error = WarningThresholdError;

    fn try_from(r: RawThresholds) -> Result<Self, Self::Error> {
        Self::new(r.a, r.b)
    }
}

impl Default for WarningThresholds {
    fn default() -> Self {
        Self { a: 0.32, b: 0.61 }
    }
}

impl WarningThresholds {
    pub fn new(a: f64, b: f64) -> Result<Self, WarningThresholdError> {
        if 0.0 < a && a < b && b < 1.0 {
            Ok(Self { a, b })
        } else {
            Err(WarningThresholdError { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Memberships {
    pub low: f64,
    pub intermediate: f64,
    pub high: f64,
}

pub fn memberships(p: f64, t: &WarningThresholds) -> Memberships {
    let (a, b) = (t.a, t.b);
    let sq = |x: f64| x * x;
    let low = if p < a {
        1.0
    } else if p <= b {
        sq((b - p) / (b - a))
    } else {
        0.0
    };
    let intermediate = if !(0.0..=1.0).contains(&p) {
        0.0
    } else if p < a {
        sq(p / a)
    } else if p <= b {
        1.0
    } else {
        sq((1.0 - p) / (1.0 - b))
    };
    let high = if p < a {
        0.0
    } else if p <= b {
        sq((p - a) / (b - a))
    } else {
        1.0
    };
    Memberships { low, intermediate, high }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningLevel {
    Low,
    Intermediate,
    High,
    Danger,
}

impl fmt::Display for WarningLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarningLevel::Low => "low",
            WarningLevel::Intermediate => "intermediate",
            WarningLevel::High => "high",
            WarningLevel::Danger => "danger",
        })
    }
}

impl FromStr for WarningLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(WarningLevel::Low),
            "intermediate" | "medium" => Ok(WarningLevel::Intermediate),
            "high" => Ok(WarningLevel::High),
            "danger" | "dangerous" => Ok(WarningLevel::Danger),
            other => Err(format!("unknown warning level {other:?}")),
        }
    }
}

/// Maximum membership; ties go to the more severe level. Certain conflict
/// is `Danger`.
pub fn classify(p: f64, t: &WarningThresholds) -> WarningLevel {
    if p >= 1.0 {
        return WarningLevel::Danger;
    }
    let m = memberships(p, t);
    if m.high >= m.intermediate && m.high >= m.low {
        WarningLevel::High
    } else if m.intermediate >= m.low {
        WarningLevel::Intermediate
    } else {
        WarningLevel::Low
    }
}

/// Classify a probability given in percent.
pub fn classify_percent(percent: f64, t: &WarningThresholds) -> WarningLevel {
    classify(percent / 100.0, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionCode {
    NoChange,
    ConditionalModify,
    MandatoryModify,
    MandatoryImmediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResponseAction {
    pub code: ActionCode,
    pub text: &'static str,
    /// Whether the controller is obliged to act.
    pub obligatory: bool,
}

impl<'de> Deserialize<'de> for ResponseAction {
    /// The text is fixed per code, so only the code is read back.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            code: ActionCode,
        }
        let level = match Raw::deserialize(d)?.code {
            ActionCode::NoChange => WarningLevel::Low,
            ActionCode::ConditionalModify => WarningLevel::Intermediate,
            ActionCode::MandatoryModify => WarningLevel::High,
            ActionCode::MandatoryImmediate => WarningLevel::Danger,
        };
        Ok(response_action(level))
    }
}

pub fn response_action(level: WarningLevel) -> ResponseAction {
    let (code, text, obligatory) = match level {
        WarningLevel::Low => (ActionCode::NoChange, "does not need to adjust the control command", false),
        WarningLevel::Intermediate => {
            (ActionCode::ConditionalModify, "modify the issued command route if necessary", false)
        }
        WarningLevel::High => (ActionCode::MandatoryModify, "must modify the issued control command", true),
        WarningLevel::Danger => {
            (ActionCode::MandatoryImmediate, "must immediately modify the issued control command", true)
        }
    };
    ResponseAction { code, text, obligatory }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConflictConfig {
    #[serde(default)]
    pub safety: SafetyThresholds,
    #[serde(default)]
    pub warning: WarningThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureResult {
    pub feature: Feature,
    pub relation: Relation,
    pub gap: TimeGapInterval,
    pub t_no: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub p: f64,
    pub level: WarningLevel,
    pub action: ResponseAction,
    pub memberships: Memberships,
    /// Feature carrying the highest probability.
    pub feature: Option<Feature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub pair: [String; 2],
    pub features: Vec<FeatureResult>,
    pub overall: Overall,
}

fn arrival_at(t: &DeducedTimeline, f: &Feature) -> Option<TimeInterval> {
    match f {
        Feature::Node(n) => t.node_arrival(n),
        Feature::Segment(s) => t.segment_arrival(s),
    }
}

/// Evaluate every shared feature of two timelines.
///
/// A shared segment compares arrivals at segment completion; a crossing
/// node compares node arrivals. Features absent from either timeline are
/// skipped.
pub fn detect(
    a: &DeducedTimeline,
    b: &DeducedTimeline,
    features: &[SharedFeature],
    cfg: &ConflictConfig,
) -> ConflictReport {
    let offset = seconds_between(a.start_time, b.start_time);
    let mut results = Vec::with_capacity(features.len());
    for sf in features {
        let (Some(ia), Some(ib)) = (arrival_at(a, &sf.feature), arrival_at(b, &sf.feature)) else {
            continue;
        };
        let gap = gap_with_offset(ia, ib, offset);
        let t_no = cfg.safety.threshold_for(sf.relation);
        results.push(FeatureResult {
            feature: sf.feature.clone(),
            relation: sf.relation,
            gap,
            t_no,
            p: conflict_probability(gap, t_no),
        });
    }
    let worst = results.iter().fold(None::<&FeatureResult>, |best, r| match best {
        Some(b) if b.p >= r.p => Some(b),
        _ => Some(r),
    });
    let p = worst.map_or(0.0, |r| r.p);
    let level = classify(p, &cfg.warning);
    ConflictReport {
        pair: [a.command_id.clone(), b.command_id.clone()],
        overall: Overall {
            p,
            level,
            action: response_action(level),
            memberships: memberships(p, &cfg.warning),
            feature: worst.map(|r| r.feature.clone()),
        },
        features: results,
    }
}

/// Shared features of two deduced timelines.
pub fn timeline_features(a: &DeducedTimeline, b: &DeducedTimeline) -> Vec<SharedFeature> {
    shared_features(&a.route(), &b.route())
}

/// Deduce both commands and detect.
pub fn detect_commands(
    a: &TaxiCommand,
    b: &TaxiCommand,
    cal: &CalibrationSet,
    map: &AirportMap,
    mode: CalibrationMode,
    cfg: &ConflictConfig,
) -> Result<ConflictReport, DeductionError> {
    let ta = deduce_timeline(a, cal, map, mode)?;
    let tb = deduce_timeline(b, cal, map, mode)?;
    Ok(detect(&ta, &tb, &timeline_features(&ta, &tb), cfg))
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid offset spec {0:?}: expected start:end:step with step > 0 and start <= end")]
pub struct OffsetSpecError(pub String);

/// Inclusive arithmetic range of start-time offsets, `start:end:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for OffsetSpec {
    fn default() -> Self {
        Self { start: 0.0, end: 100.0, step: 5.0 }
    }
}

impl OffsetSpec {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self, OffsetSpecError> {
        let ok = start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && start <= end;
        let count = ((end - start) / step).floor();
        if !ok || count > 1e6 {
            return Err(OffsetSpecError(format!("{start}:{end}:{step}")));
        }
        Ok(Self { start, end, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for OffsetSpec {
    type Err = OffsetSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| OffsetSpecError(s.to_owned()))?;
        match parts[..] {
            [a, b, c] => Self::new(a, b, c).map_err(|_| OffsetSpecError(s.to_owned())),
            _ => Err(OffsetSpecError(s.to_owned())),
        }
    }
}

impl fmt::Display for OffsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset_s: f64,
    pub probability: f64,
    pub level: WarningLevel,
}

/// Re-run detection with `b` started `offset` seconds later, for each offset.
pub fn offset_sweep(
    a: &TaxiCommand,
    b: &TaxiCommand,
    cal: &CalibrationSet,
    map: &AirportMap,
    mode: CalibrationMode,
    cfg: &ConflictConfig,
    offsets: &OffsetSpec,
) -> Result<Vec<SweepRow>, DeductionError> {
    let ta = deduce_timeline(a, cal, map, mode)?;
    offsets
        .values()
        .into_iter()
        .map(|off| {
            let tb = deduce_timeline(&b.shifted(off), cal, map, mode)?;
            let r = detect(&ta, &tb, &timeline_features(&ta, &tb), cfg);
            Ok(SweepRow { offset_s: off, probability: r.overall.p, level: r.overall.level })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("offset_s,probability,level\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.offset_s, r.probability, r.level));
    }
    s
}
