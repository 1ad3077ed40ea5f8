use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxiguard_core::calibration::{
    build_calibration, classify_time_band, pearson, CalibrationConfig, CalibrationMode, TimeBand,
};
use taxiguard_core::conflict::gap_with_offset;
use taxiguard_core::deduction::{deduce_timeline, segment_duration, TimeInterval};
use taxiguard_core::synth::{generate, SpeedParams, SynthProfile};
use taxiguard_core::trackdata::{assign_to_segments, filter_speed_outliers};
use taxiguard_core::units::{max_taxi_speed_knots, MAX_TAXI_SPEED_KMH, MPS_PER_KNOT};
use taxiguard_core::{AirportMap, SpeedInterval};

use crate::common::random_command;
use crate::Outcome;

const COMMANDS: usize = 50;

pub fn containment() -> Outcome {
    let map = AirportMap::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(2019);

    let start = NaiveDate::from_ymd_opt(2019, 8, 5).unwrap();
    let days = 14;
    let mut profile = SynthProfile::new(start, days, 400);
    for id in map.segment_ids() {
        let bands: BTreeMap<TimeBand, SpeedParams> = TimeBand::ALL
            .iter()
            .map(|&b| (b, SpeedParams { mean_kn: rng.random_range(8.0..16.0), std_kn: rng.random_range(1.0..2.5) }))
            .collect();
        profile.overrides.insert(id.to_owned(), bands);
    }
    let records = generate(&map, &profile, 7).map_err(|e| e.to_string())?;
    let kept = filter_speed_outliers(records, MAX_TAXI_SPEED_KMH);
    let fixes = assign_to_segments(&kept, &map).fixes;
    let config = CalibrationConfig { day_window: profile.day_window, ..Default::default() };
    let cal = build_calibration(&fixes, &map, &config);

    let t_begin = start.and_hms_opt(0, 0, 0).unwrap().and_utc();
    let span_ms = Duration::days(days as i64).num_milliseconds();
    let (mut mids, mut actual) = (Vec::new(), Vec::new());
    let (mut inside, mut total, mut dev) = (0usize, 0usize, 0.0);
    for i in 0..COMMANDS {
        let t_si = t_begin + Duration::milliseconds(rng.random_range(0..span_ms));
        let cmd = random_command(&map, &mut rng, &format!("C{i}"), t_si);
        let tl = deduce_timeline(&cmd, &cal, &map, CalibrationMode::TimeBanded).map_err(|e| e.to_string())?;

        // Replay: one speed per segment drawn from the generating distribution
        // of the band the command starts in.
        let band = classify_time_band(t_si, &profile.day_window);
        let mut t = 0.0;
        for e in &tl.entries {
            let v = profile.speed_params(&e.taxiway_id, band).sample(&mut rng, max_taxi_speed_knots());
            t += e.length_m / (v * MPS_PER_KNOT);
            total += 1;
            inside += usize::from(e.arrival.contains(t));
            mids.push(e.arrival.midpoint());
            actual.push(t);
            dev += (e.arrival.midpoint() - t).abs() / t;
        }
    }
    let share = inside as f64 / total as f64;
    let r = pearson(&mids, &actual).map_err(|e| e.to_string())?;
    let detail = format!(
        "{inside}/{total} node arrivals inside ({:.2}%), r = {r:.4}, mean |deviation| {:.2}%",
        100.0 * share,
        100.0 * dev / total as f64
    );
    if share >= 0.99 && r >= 0.9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_interval<R: Rng>(rng: &mut R) -> TimeInterval {
    let lo = rng.random_range(0.0..500.0);
    TimeInterval::new(lo, lo + rng.random_range(0.0..300.0)).unwrap()
}

fn random_speed<R: Rng>(rng: &mut R) -> SpeedInterval {
    let lo = rng.random_range(0.5..20.0);
    SpeedInterval::fixed(lo, lo + rng.random_range(0.0..7.0))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

pub fn interval_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    const CASES: usize = 10_000;
    for case in 0..CASES {
        let fail = |what: &str| Err(format!("case {case}: {what}"));

        let (x, y, z) = (random_interval(&mut rng), random_interval(&mut rng), random_interval(&mut rng));
        let (l, r) = ((x + y) + z, x + (y + z));
        if !(close(l.lo_s, r.lo_s) && close(l.hi_s, r.hi_s)) {
            return fail("accumulation is not associative");
        }

        // Longer segments and wider speed ranges never shrink the duration.
        let v = random_speed(&mut rng);
        let len = rng.random_range(0.0..3000.0);
        let longer = len + rng.random_range(0.0..500.0);
        let d = segment_duration(len, &v).map_err(|e| e.to_string())?;
        let d_long = segment_duration(longer, &v).map_err(|e| e.to_string())?;
        if d.lo_s > d_long.lo_s || d.hi_s > d_long.hi_s || d.lo_s > d.hi_s {
            return fail("duration not monotone in length");
        }
        let wider = SpeedInterval::fixed(v.v_lo_kn * rng.random_range(0.5..1.0), v.v_hi_kn * rng.random_range(1.0..1.5));
        let d_wide = segment_duration(len, &wider).map_err(|e| e.to_string())?;
        if !(d_wide.lo_s <= d.lo_s + 1e-9 && d.hi_s <= d_wide.hi_s + 1e-9) {
            return fail("wider speed interval does not contain the narrower duration");
        }
        let expect = TimeInterval::new(len / (v.v_hi_kn * MPS_PER_KNOT), len / (v.v_lo_kn * MPS_PER_KNOT)).unwrap();
        if !(close(d.lo_s, expect.lo_s) && close(d.hi_s, expect.hi_s)) {
            return fail("duration differs from length over speed");
        }

        // Accumulation of a route is monotone in every leg.
        let (a, b) = (x + d, x + d_long);
        if a.lo_s > b.lo_s || a.hi_s > b.hi_s {
            return fail("accumulated arrival not monotone");
        }

        // Gap: symmetric under swapping, contains every pointwise gap, and
        // grows with its inputs.
        let off = rng.random_range(-200.0..200.0);
        let g = gap_with_offset(x, y, off);
        let g_swap = gap_with_offset(y, x, -off);
        if g != g_swap {
            return fail("gap not symmetric");
        }
        if !(0.0 <= g.t_min_s && g.t_min_s <= g.t_max_s) {
            return fail("gap bounds out of order");
        }
        for _ in 0..4 {
            let (ta, tb) = (rng.random_range(x.lo_s..=x.hi_s), rng.random_range(y.lo_s..=y.hi_s));
            let d = (ta - tb - off).abs();
            if d < g.t_min_s - 1e-9 || d > g.t_max_s + 1e-9 {
                return fail("pointwise gap outside gap interval");
            }
        }
        let grown = gap_with_offset(x + TimeInterval::new(-1.0, 1.0).unwrap(), y, off);
        if grown.t_min_s > g.t_min_s + 1e-9 || grown.t_max_s < g.t_max_s - 1e-9 {
            return fail("gap not monotone under widening");
        }
    }
    Ok(format!("{CASES} random cases: associativity, monotonicity, gap symmetry and containment within 1e-9 s"))
}
