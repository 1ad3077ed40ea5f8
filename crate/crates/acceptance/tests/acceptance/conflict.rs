use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxiguard_core::airportmodel::Feature;
use taxiguard_core::calibration::CalibrationMode;
use taxiguard_core::conflict::{
    classify_percent, detect, memberships, offset_sweep, timeline_features, ConflictConfig, OffsetSpec,
    SafetyThresholds, WarningLevel, WarningThresholds,
};
use taxiguard_core::deduction::{deduce_timeline, seconds_between, DeducedTimeline, TimeInterval};
use taxiguard_core::{AirportMap, TaxiCommand};

use crate::common::{jitter, random_calibration, random_command, spearman, t0};
use crate::Outcome;

pub fn threshold_constants() -> Outcome {
    let s = SafetyThresholds::default();
    // Independent recomputation from the raw inputs.
    let v = 50.0 / 3.6;
    let (l, t_r, t_bc) = (50.0, 2.0, 1.2);
    let expected = [
        ("t_c1", s.t_c1(), l / (2.0 * v), 1.8),
        ("t_c2", s.t_c2(), l / v, 3.6),
        ("t_no1", s.t_no1(), l / (2.0 * v) + t_bc + t_r, 5.0),
        ("t_no2", s.t_no2(), l / v + t_bc + t_r, 6.8),
    ];
    for (name, got, recomputed, published) in expected {
        if (got - recomputed).abs() > 1e-9 || (got - published).abs() > 1e-9 {
            return Err(format!("{name} = {got}, recomputed {recomputed}, published {published}"));
        }
    }
    Ok("t_c1 1.8, t_c2 3.6, t_no1 5.0, t_no2 6.8 s within 1e-9".into())
}

/// (table, offset s, probability %, printed level)
const TABLES: &[(u8, u32, f64, &str)] = &[
    (11, 0, 32.90, "intermediate"), (11, 5, 40.09, "intermediate"), (11, 10, 47.28, "intermediate"),
    (11, 15, 47.28, "intermediate"), (11, 20, 61.66, "intermediate"), (11, 25, 50.71, "intermediate"),
    (11, 30, 50.24, "intermediate"), (11, 35, 57.79, "intermediate"), (11, 40, 65.33, "intermediate"),
    (11, 45, 47.64, "intermediate"), (11, 50, 40.10, "intermediate"), (11, 55, 32.55, "intermediate"),
    (11, 60, 25.01, "low"), (11, 65, 17.46, "low"), (11, 70, 22.92, "low"),
    (11, 75, 31.82, "intermediate"), (11, 80, 40.71, "intermediate"), (11, 85, 49.61, "intermediate"),
    (11, 90, 58.51, "intermediate"), (11, 95, 67.40, "high"), (11, 100, 76.30, "high"),
    (12, 0, 9.43, "low"), (12, 5, 18.29, "low"), (12, 10, 27.84, "low"),
    (12, 15, 36.01, "intermediate"), (12, 20, 44.87, "intermediate"), (12, 25, 53.73, "intermediate"),
    (12, 30, 61.51, "high"), (12, 35, 52.65, "intermediate"), (12, 40, 43.78, "intermediate"),
    (12, 45, 34.92, "intermediate"), (12, 50, 26.06, "low"), (12, 55, 17.20, "low"),
    (12, 60, 8.34, "low"), (12, 65, 0.0, "low"), (12, 70, 0.0, "low"),
    (12, 75, 0.0, "low"), (12, 80, 0.0, "low"), (12, 85, 0.0, "low"),
    (12, 90, 0.0, "low"), (12, 95, 0.0, "low"), (12, 100, 0.0, "low"),
    (13, 0, 16.54, "low"), (13, 5, 22.19, "low"), (13, 10, 27.84, "low"),
    (13, 15, 33.49, "intermediate"), (13, 20, 39.15, "intermediate"), (13, 25, 44.80, "intermediate"),
    (13, 30, 52.45, "high"), (13, 35, 62.50, "intermediate"), (13, 40, 53.62, "intermediate"),
    (13, 45, 42.31, "intermediate"), (13, 50, 36.66, "low"), (13, 55, 31.04, "low"),
    (13, 60, 25.35, "low"), (13, 65, 19.70, "low"), (13, 70, 14.04, "low"),
    (13, 75, 8.39, "low"), (13, 80, 2.74, "low"), (13, 85, 0.0, "low"),
    (13, 90, 0.0, "low"), (13, 95, 0.0, "low"), (13, 100, 0.0, "low"),
];

/// Printed levels that contradict the membership breakpoints.
const INCONSISTENT: &[(u8, u32)] = &[(11, 20), (11, 40), (11, 75), (13, 30), (13, 35), (13, 50)];

pub fn golden_set() -> Outcome {
    let t = WarningThresholds::default();
    let mut checked = 0;
    for &(table, offset, pct, printed) in TABLES {
        if INCONSISTENT.contains(&(table, offset)) {
            continue;
        }
        let want: WarningLevel = printed.parse().map_err(|_| format!("bad level {printed}"))?;
        let got = classify_percent(pct, &t);
        if got != want {
            return Err(format!("table {table} offset {offset}: {pct}% gives {got}, printed {want}"));
        }
        checked += 1;
    }
    if checked < 55 {
        return Err(format!("only {checked} rows checked"));
    }
    let skipped: Vec<String> = INCONSISTENT.iter().map(|(t, o)| format!("T{t}@{o}s")).collect();
    Ok(format!("{checked}/{} rows reproduced; excluded as inconsistent: {}", TABLES.len(), skipped.join(", ")))
}

pub fn membership_continuity() -> Outcome {
    let t = WarningThresholds::default();
    const N: usize = 100_000;
    let mut prev = memberships(0.0, &t);
    let mut worst: f64 = 0.0;
    for i in 1..=N {
        let m = memberships(i as f64 / N as f64, &t);
        for (a, b) in [(prev.low, m.low), (prev.intermediate, m.intermediate), (prev.high, m.high)] {
            worst = worst.max((a - b).abs());
        }
        prev = m;
    }
    if worst >= 1e-3 {
        return Err(format!("largest adjacent jump {worst}"));
    }
    let at_a = memberships(0.32, &t);
    let at_b = memberships(0.61, &t);
    if at_a.low != 1.0 || at_a.intermediate != 1.0 || at_b.intermediate != 1.0 || at_b.high != 1.0 {
        return Err(format!("boundary values {at_a:?} at 0.32, {at_b:?} at 0.61"));
    }
    Ok(format!("largest adjacent jump {worst:.2e} on a 10^5 grid; both boundaries equal 1 for adjacent levels"))
}

fn arrival(t: &DeducedTimeline, f: &Feature) -> Option<TimeInterval> {
    match f {
        Feature::Node(n) => t.node_arrival(n),
        Feature::Segment(s) => t.segment_arrival(s),
    }
}

struct Scenario {
    map: AirportMap,
    cal: taxiguard_core::CalibrationSet,
    a: TaxiCommand,
    b: TaxiCommand,
}

/// Two random commands with at least one shared feature.
fn scenario<R: Rng>(rng: &mut R, single_feature: bool) -> Scenario {
    let map = AirportMap::bundled();
    loop {
        let cal = random_calibration(&map, rng);
        let a = random_command(&map, rng, "A", t0());
        let start = jitter(rng, t0(), 120);
        let b = random_command(&map, rng, "B", start);
        let mode = CalibrationMode::TimeBanded;
        let (Ok(ta), Ok(tb)) = (deduce_timeline(&a, &cal, &map, mode), deduce_timeline(&b, &cal, &map, mode)) else {
            continue;
        };
        let n = timeline_features(&ta, &tb).len();
        if n > 0 && (!single_feature || n == 1) {
            return Scenario { map, cal, a, b };
        }
    }
}

const DRAWS: usize = 10_000;
const DELTA: f64 = 0.05;

pub fn monte_carlo_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let cfg = ConflictConfig::default();
    let spec = OffsetSpec::default();
    let (mut compared, mut points) = (0, 0);
    for k in 0..100 {
        let s = scenario(&mut rng, false);
        let mode = CalibrationMode::TimeBanded;
        let ta = deduce_timeline(&s.a, &s.cal, &s.map, mode).unwrap();
        let tb = deduce_timeline(&s.b, &s.cal, &s.map, mode).unwrap();
        let features = timeline_features(&ta, &tb);

        // Common random numbers across offsets: one pair of uniforms per
        // draw and feature.
        let uniforms: Vec<Vec<(f64, f64)>> = features
            .iter()
            .map(|_| (0..DRAWS).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect())
            .collect();
        let base = seconds_between(s.a.start_time, s.b.start_time);

        let (mut exact, mut sampled) = (Vec::new(), Vec::new());
        for off in spec.values() {
            let tb_off = deduce_timeline(&s.b.shifted(off), &s.cal, &s.map, mode).unwrap();
            let report = detect(&ta, &tb_off, &features, &cfg);
            let mut best: f64 = 0.0;
            for (sf, us) in features.iter().zip(&uniforms) {
                let (ia, ib) = (arrival(&ta, &sf.feature).unwrap(), arrival(&tb, &sf.feature).unwrap());
                let t_no = cfg.safety.threshold_for(sf.relation);
                let hits = us
                    .iter()
                    .filter(|(u, v)| {
                        let x = ia.lo_s + u * ia.width();
                        let y = ib.lo_s + v * ib.width() + base + off;
                        (x - y).abs() <= t_no
                    })
                    .count();
                best = best.max(hits as f64 / DRAWS as f64);
            }
            exact.push(report.overall.p);
            sampled.push(best);
        }

        // Keep offsets whose analytic probabilities are clearly separated.
        let mut keep: Vec<usize> = Vec::new();
        for i in 0..exact.len() {
            if keep.iter().all(|&j| (exact[i] - exact[j]).abs() >= DELTA) {
                keep.push(i);
            }
        }
        if keep.len() < 2 {
            continue;
        }
        let x: Vec<f64> = keep.iter().map(|&i| exact[i]).collect();
        let y: Vec<f64> = keep.iter().map(|&i| sampled[i]).collect();
        let rho = spearman(&x, &y);
        if (rho - 1.0).abs() > 1e-12 {
            return Err(format!("scenario {k}: Spearman {rho}; analytic {x:?}, sampled {y:?}"));
        }
        compared += 1;
        points += keep.len();
    }
    Ok(format!(
        "100 scenarios x 21 offsets x 10^4 draws; {compared} with >= 2 separated offsets ({points} points), Spearman = 1 on all"
    ))
}

fn second_differences(offsets: &[f64], p: &[f64], breaks: &[f64], straddle: impl Fn(f64) -> bool) -> (usize, f64) {
    let (mut n, mut worst) = (0, 0.0f64);
    for i in 1..offsets.len() - 1 {
        let (l, m, r) = (offsets[i - 1], offsets[i], offsets[i + 1]);
        if breaks.iter().any(|&b| l < b && b < r) || [l, m, r].iter().any(|&o| straddle(o)) {
            continue;
        }
        n += 1;
        worst = worst.max((p[i - 1] - 2.0 * p[i] + p[i + 1]).abs());
    }
    (n, worst)
}

pub fn sweep_shape() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4301);
    let cfg = ConflictConfig::default();
    let mode = CalibrationMode::TimeBanded;
    let coarse = OffsetSpec::default();
    let fine = OffsetSpec::new(0.0, 100.0, 0.25).unwrap();
    let (mut triples, mut worst) = (0, 0.0f64);
    for k in 0..50 {
        let s = scenario(&mut rng, true);
        let ta = deduce_timeline(&s.a, &s.cal, &s.map, mode).unwrap();
        let tb = deduce_timeline(&s.b, &s.cal, &s.map, mode).unwrap();
        let f = &timeline_features(&ta, &tb)[0];
        let (ia, ib) = (arrival(&ta, &f.feature).unwrap(), arrival(&tb, &f.feature).unwrap());
        let t_no = cfg.safety.threshold_for(f.relation);
        let base = seconds_between(s.a.start_time, s.b.start_time);

        // Signed difference a - b at offset o is [lo0 - o, hi0 - o].
        let (lo0, hi0) = (ia.lo_s - ib.hi_s - base, ia.hi_s - ib.lo_s - base);
        let breaks: Vec<f64> =
            [lo0, hi0].iter().flat_map(|&e| [e, e - t_no, e + t_no]).collect();
        let straddle = |o: f64| lo0 - o < 0.0 && 0.0 < hi0 - o;

        for spec in [coarse, fine] {
            let rows = offset_sweep(&s.a, &s.b, &s.cal, &s.map, mode, &cfg, &spec).map_err(|e| e.to_string())?;
            if spec == coarse && rows.len() != 21 {
                return Err(format!("scenario {k}: {} rows", rows.len()));
            }
            let offs: Vec<f64> = rows.iter().map(|r| r.offset_s).collect();
            let p: Vec<f64> = rows.iter().map(|r| r.probability).collect();
            let (n, w) = second_differences(&offs, &p, &breaks, straddle);
            if w > 1e-6 {
                return Err(format!("scenario {k}: second difference {w} between breakpoints"));
            }
            triples += n;
            worst = worst.max(w);
        }
    }
    Ok(format!(
        "50 single-feature scenarios: 21 rows each at 0:100:5; {triples} triples between breakpoints (coarse and 0.25 s grids), worst second difference {worst:.1e}"
    ))
}
