use chrono::{DateTime, Duration, Utc};
use rand::seq::IndexedRandom;
use rand::Rng;
use taxiguard_core::calibration::{CalibrationSet, DayWindow, TimeBand};
use taxiguard_core::{AirportMap, SpeedInterval, TaxiCommand};

pub fn t0() -> DateTime<Utc> {
    "2019-08-06T10:00:00Z".parse().unwrap()
}

/// A random simple walk of up to `max_len` segments. Returns the route and
/// its entry node.
pub fn random_route<R: Rng>(map: &AirportMap, rng: &mut R, max_len: usize) -> (Vec<String>, String) {
    let first = map.segments().choose(rng).unwrap();
    let (entry, mut at) =
        if rng.random_bool(0.5) { (first.from.clone(), first.to.clone()) } else { (first.to.clone(), first.from.clone()) };
    let mut route = vec![first.taxiway_id.clone()];
    let mut visited = vec![entry.clone(), at.clone()];
    let len = rng.random_range(1..=max_len);
    while route.len() < len {
        let next: Vec<_> = map
            .incident(&at)
            .filter(|s| !route.contains(&s.taxiway_id))
            .filter(|s| !visited.contains(if s.from == at { &s.to } else { &s.from }))
            .collect();
        let Some(s) = next.choose(rng) else { break };
        at = if s.from == at { s.to.clone() } else { s.from.clone() };
        visited.push(at.clone());
        route.push(s.taxiway_id.clone());
    }
    (route, entry)
}

pub fn command(id: &str, route: Vec<String>, entry: String, start: DateTime<Utc>) -> TaxiCommand {
    TaxiCommand { command_id: id.into(), icao24: "78142A".parse().unwrap(), route, start_time: start, entry_node: Some(entry) }
}

pub fn random_command<R: Rng>(map: &AirportMap, rng: &mut R, id: &str, start: DateTime<Utc>) -> TaxiCommand {
    let (route, entry) = random_route(map, rng, 4);
    command(id, route, entry, start)
}

/// Same interval in every band, drawn per taxiway.
pub fn random_calibration<R: Rng>(map: &AirportMap, rng: &mut R) -> CalibrationSet {
    let mut cal = CalibrationSet::uniform(map, SpeedInterval::fixed(8.0, 12.0), DayWindow::default());
    for e in cal.taxiways.values_mut() {
        let lo = rng.random_range(4.0..10.0);
        let iv = SpeedInterval::fixed(lo, lo + rng.random_range(1.0..8.0));
        e.pauta = Some(iv);
        e.bands = TimeBand::ALL.iter().map(|&b| (b, iv)).collect();
    }
    cal
}

pub fn jitter<R: Rng>(rng: &mut R, base: DateTime<Utc>, max_s: i64) -> DateTime<Utc> {
    base + Duration::milliseconds(rng.random_range(-max_s * 1000..=max_s * 1000))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
