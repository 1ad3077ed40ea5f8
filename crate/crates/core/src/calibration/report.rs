//! Constraint analysis: which factors move taxi speed enough to justify a
//! separate interval. Length and aircraft type are expected to come out weak;
//! weekday/weekend and time of day strong.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::Timelike;
use serde::{Deserialize, Serialize};

use super::{classify_time_band, pearson, DayWindow};
use crate::airportmodel::AirportMap;
use crate::trackdata::{AircraftInfo, Icao24, SegmentFix};

const BUNDLED_FLEET: &str = include_str!("../../data/fleet.json");

/// Local-time periods of the day used for the seven-period speed table:
/// `[start_hour, end_hour)`.
pub const PERIODS: [(u32, u32); 7] = [(0, 6), (6, 9), (9, 12), (12, 15), (15, 18), (18, 21), (21, 24)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetParams {
    pub types: Vec<String>,
    pub mtow_kg: f64,
    pub empty_weight_kg: f64,
    pub max_thrust_kn: f64,
}

impl FleetParams {
    pub fn label(&self) -> String {
        self.types.join("/")
    }
}

/// Static airframe parameters keyed by ICAO type designator.
#[derive(Debug, Clone)]
pub struct FleetTable {
    rows: Vec<FleetParams>,
}

impl FleetTable {
    pub fn bundled() -> Self {
        Self { rows: serde_json::from_str(BUNDLED_FLEET).expect("bundled fleet table parses") }
    }

    pub fn from_rows(rows: Vec<FleetParams>) -> Self {
        Self { rows }
    }

    pub fn lookup(&self, aircraft_type: &str) -> Option<&FleetParams> {
        self.rows.iter().find(|r| r.types.iter().any(|t| t.eq_ignore_ascii_case(aircraft_type)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub r: Option<f64>,
    pub n: usize,
}

impl Correlation {
    fn of(x: &[f64], y: &[f64]) -> Self {
        Self { r: pearson(x, y).ok(), n: x.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxiwayLengthRow {
    pub taxiway_id: String,
    pub length_m: f64,
    pub mean_speed_kn: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeCorrelationRow {
    pub taxiway_id: String,
    pub types: usize,
    pub mtow: Correlation,
    pub empty_weight: Correlation,
    pub max_thrust: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekRow {
    pub taxiway_id: String,
    pub weekday_mean_kn: Option<f64>,
    pub weekend_mean_kn: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRow {
    pub taxiway_id: String,
    pub means_kn: [Option<f64>; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub length_rows: Vec<TaxiwayLengthRow>,
    pub length_vs_speed: Correlation,
    pub type_rows: Vec<TypeCorrelationRow>,
    pub week_rows: Vec<WeekRow>,
    pub weekday_vs_weekend: Correlation,
    pub period_rows: Vec<PeriodRow>,
    pub warnings: Vec<String>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn constraint_report(
    fixes: &[SegmentFix],
    map: &AirportMap,
    aircraft: &[AircraftInfo],
    fleet: &FleetTable,
    window: &DayWindow,
) -> ConstraintReport {
    let types: BTreeMap<Icao24, &str> = aircraft.iter().map(|a| (a.icao24, a.aircraft_type.as_str())).collect();
    let mut per_taxiway: BTreeMap<&str, Vec<&SegmentFix>> = BTreeMap::new();
    for f in fixes {
        if map.segment(&f.taxiway_id).is_some() {
            per_taxiway.entry(&f.taxiway_id).or_default().push(f);
        }
    }
    let mut warnings = Vec::new();

    let mut length_rows = Vec::new();
    for seg in map.segments() {
        let Some(fs) = per_taxiway.get(seg.taxiway_id.as_str()) else { continue };
        let speeds: Vec<f64> = fs.iter().map(|f| f.ground_speed_kn).collect();
        length_rows.push(TaxiwayLengthRow {
            taxiway_id: seg.taxiway_id.clone(),
            length_m: seg.length_m,
            mean_speed_kn: mean(&speeds).unwrap_or(0.0),
            n: speeds.len(),
        });
    }
    let length_vs_speed = Correlation::of(
        &length_rows.iter().map(|r| r.length_m).collect::<Vec<_>>(),
        &length_rows.iter().map(|r| r.mean_speed_kn).collect::<Vec<_>>(),
    );

    let mut type_rows = Vec::new();
    let mut skipped = 0usize;
    for (taxiway, fs) in &per_taxiway {
        let mut by_type: BTreeMap<String, (&FleetParams, Vec<f64>)> = BTreeMap::new();
        for f in fs {
            let params = types.get(&f.icao24).and_then(|t| fleet.lookup(t));
            match params {
                Some(p) => by_type.entry(p.label()).or_insert_with(|| (p, Vec::new())).1.push(f.ground_speed_kn),
                None => skipped += 1,
            }
        }
        let rows: Vec<(&FleetParams, f64)> =
            by_type.values().map(|(p, v)| (*p, mean(v).unwrap_or(0.0))).collect();
        let speed: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let col = |f: fn(&FleetParams) -> f64| rows.iter().map(|r| f(r.0)).collect::<Vec<_>>();
        type_rows.push(TypeCorrelationRow {
            taxiway_id: (*taxiway).to_owned(),
            types: rows.len(),
            mtow: Correlation::of(&col(|p| p.mtow_kg), &speed),
            empty_weight: Correlation::of(&col(|p| p.empty_weight_kg), &speed),
            max_thrust: Correlation::of(&col(|p| p.max_thrust_kn), &speed),
        });
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} fixes skipped in type analysis: aircraft parameters unknown"));
    }

    let mut week_rows = Vec::new();
    let mut period_rows = Vec::new();
    for (taxiway, fs) in &per_taxiway {
        let (mut wd, mut we) = (Vec::new(), Vec::new());
        let mut periods: [Vec<f64>; 7] = Default::default();
        for f in fs {
            if classify_time_band(f.timestamp, window).is_weekend() {
                we.push(f.ground_speed_kn);
            } else {
                wd.push(f.ground_speed_kn);
            }
            let hour = window.local(f.timestamp).hour();
            let slot = PERIODS.iter().position(|&(a, b)| a <= hour && hour < b).unwrap_or(0);
            periods[slot].push(f.ground_speed_kn);
        }
        week_rows.push(WeekRow {
            taxiway_id: (*taxiway).to_owned(),
            weekday_mean_kn: mean(&wd),
            weekend_mean_kn: mean(&we),
        });
        period_rows.push(PeriodRow {
            taxiway_id: (*taxiway).to_owned(),
            means_kn: std::array::from_fn(|i| mean(&periods[i])),
        });
    }
    let paired: Vec<(f64, f64)> = week_rows
        .iter()
        .filter_map(|r| Some((r.weekday_mean_kn?, r.weekend_mean_kn?)))
        .collect();
    let weekday_vs_weekend = Correlation::of(
        &paired.iter().map(|p| p.0).collect::<Vec<_>>(),
        &paired.iter().map(|p| p.1).collect::<Vec<_>>(),
    );

    ConstraintReport {
        length_rows,
        length_vs_speed,
        type_rows,
        week_rows,
        weekday_vs_weekend,
        period_rows,
        warnings,
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.digits$}"))
}

impl ConstraintReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Taxi speed constraint analysis\n");
        let _ = writeln!(s, "## Taxiway length vs mean speed\n");
        let _ = writeln!(s, "| Taxiway | Length (m) | Mean speed (kn) | n |\n|---|---|---|---|");
        for r in &self.length_rows {
            let _ = writeln!(s, "| {} | {} | {:.2} | {} |", r.taxiway_id, r.length_m, r.mean_speed_kn, r.n);
        }
        let _ = writeln!(s, "\nPearson r = {} (n = {})\n", opt(self.length_vs_speed.r, 2), self.length_vs_speed.n);

        let _ = writeln!(s, "## Aircraft type parameters vs mean speed\n");
        let _ = writeln!(s, "| Taxiway | Types | r(MTOW) | r(empty weight) | r(max thrust) |\n|---|---|---|---|---|");
        for r in &self.type_rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                r.taxiway_id,
                r.types,
                opt(r.mtow.r, 2),
                opt(r.empty_weight.r, 2),
                opt(r.max_thrust.r, 2)
            );
        }

        let _ = writeln!(s, "\n## Weekday vs weekend\n");
        let _ = writeln!(s, "| Taxiway | Weekday (kn) | Weekend (kn) |\n|---|---|---|");
        for r in &self.week_rows {
            let _ = writeln!(s, "| {} | {} | {} |", r.taxiway_id, opt(r.weekday_mean_kn, 2), opt(r.weekend_mean_kn, 2));
        }
        let _ = writeln!(
            s,
            "\nPearson r = {} (n = {})\n",
            opt(self.weekday_vs_weekend.r, 2),
            self.weekday_vs_weekend.n
        );

        let _ = writeln!(s, "## Mean speed by period of day (kn)\n");
        let mut header = String::from("| Taxiway |");
        for (a, b) in PERIODS {
            let _ = write!(header, " {a:02}:00-{:02}:59 |", b - 1);
        }
        let _ = writeln!(s, "{header}\n|---|{}", "---|".repeat(PERIODS.len()));
        for r in &self.period_rows {
            let cells: Vec<String> = r.means_kn.iter().map(|m| opt(*m, 2)).collect();
            let _ = writeln!(s, "| {} | {} |", r.taxiway_id, cells.join(" | "));
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "\n## Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(s, "- {w}");
            }
        }
        s
    }

    /// Long-format CSV: `section,taxiway,column,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,taxiway,column,value\n");
        let mut row = |section: &str, taxiway: &str, column: &str, value: Option<f64>| {
            let v = value.map_or_else(String::new, |x| x.to_string());
            let _ = writeln!(s, "{section},{taxiway},{column},{v}");
        };
        for r in &self.length_rows {
            row("length", &r.taxiway_id, "length_m", Some(r.length_m));
            row("length", &r.taxiway_id, "mean_speed_kn", Some(r.mean_speed_kn));
        }
        row("length", "*", "pearson_r", self.length_vs_speed.r);
        for r in &self.type_rows {
            row("type", &r.taxiway_id, "r_mtow", r.mtow.r);
            row("type", &r.taxiway_id, "r_empty_weight", r.empty_weight.r);
            row("type", &r.taxiway_id, "r_max_thrust", r.max_thrust.r);
        }
        for r in &self.week_rows {
            row("week", &r.taxiway_id, "weekday_mean_kn", r.weekday_mean_kn);
            row("week", &r.taxiway_id, "weekend_mean_kn", r.weekend_mean_kn);
        }
        row("week", "*", "pearson_r", self.weekday_vs_weekend.r);
        for r in &self.period_rows {
            for ((a, b), m) in PERIODS.iter().zip(r.means_kn) {
                row("period", &r.taxiway_id, &format!("{a:02}-{b:02}"), m);
            }
        }
        s
    }
}
