use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use taxiguard_core::calibration::CalibrationMode;
use taxiguard_core::conflict::{detect, offset_sweep, timeline_features, ConflictConfig, OffsetSpec};
use taxiguard_core::deduction::{deduce_timeline, DeducedTimeline};
use taxiguard_core::AirportMap;
use taxiguard_service::{router, AppState, Scenario};
use tower::ServiceExt;

use crate::common::{jitter, random_calibration, random_command, t0};
use crate::Outcome;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

/// Byte comparison of one served value against the library's serialization.
fn same<T: Serialize>(served: &Value, lib: &T) -> bool {
    let lib = serde_json::to_value(lib).unwrap();
    serde_json::to_vec(served).unwrap() == serde_json::to_vec(&lib).unwrap()
}

async fn run() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let map = AirportMap::bundled();
    let cal = random_calibration(&map, &mut rng);
    let cfg = ConflictConfig::default();
    let mode = CalibrationMode::TimeBanded;

    let mut scenario = Scenario::new(map.clone(), mode, cfg, None);
    scenario.swap_calibration(cal.clone()).map_err(|e| e.to_string())?;
    let app = router(AppState::new(scenario, None, None, Duration::from_secs(15), 64));

    let (_, served_cal) = call(&app, "GET", "/api/calibration", None).await;
    if !same(&served_cal, &cal) {
        return Err("served calibration differs from the imported one".into());
    }

    let mut active: Vec<DeducedTimeline> = Vec::new();
    let mut active_cmds = Vec::new();
    let mut values = 0;
    for i in 0..12 {
        let start = jitter(&mut rng, t0(), 90);
        let cmd = random_command(&map, &mut rng, &format!("C{i}"), start);
        let lib_tl = deduce_timeline(&cmd, &cal, &map, mode).map_err(|e| e.to_string())?;
        let lib_conflicts: Vec<_> =
            active.iter().map(|o| detect(&lib_tl, o, &timeline_features(&lib_tl, o), &cfg)).collect();

        let (_, before) = call(&app, "GET", "/api/state", None).await;
        let mut whatif = serde_json::to_value(&cmd).unwrap();
        whatif["sweep"] = json!({"offsets": "0:100:5"});
        let (s, w) = call(&app, "POST", "/api/whatif", Some(whatif)).await;
        if s != StatusCode::OK {
            return Err(format!("what-if {i} returned {s}: {w}"));
        }
        let (_, after) = call(&app, "GET", "/api/state", None).await;
        if before["state_hash"] != after["state_hash"] {
            return Err(format!("what-if {i} changed the state hash"));
        }
        if !same(&w["timeline"], &lib_tl) || !same(&w["conflicts"], &lib_conflicts) {
            return Err(format!("what-if {i} differs from the library"));
        }
        for (j, (other, pair)) in active_cmds.iter().zip(w["sweep"].as_array().unwrap()).enumerate() {
            let rows = offset_sweep(other, &cmd, &cal, &map, mode, &cfg, &OffsetSpec::default())
                .map_err(|e| e.to_string())?;
            if !same(&pair["rows"], &rows) {
                return Err(format!("what-if {i} sweep against #{j} differs from the library"));
            }
            values += rows.len();
        }

        let (s, v) = call(&app, "POST", "/api/commands", Some(serde_json::to_value(&cmd).unwrap())).await;
        if s != StatusCode::CREATED {
            return Err(format!("register {i} returned {s}: {v}"));
        }
        if !same(&v["timeline"], &lib_tl) || !same(&v["conflicts"], &lib_conflicts) {
            return Err(format!("register {i} differs from the library"));
        }
        values += 1 + lib_conflicts.len();
        active.push(lib_tl);
        active_cmds.push(cmd);
    }

    let (_, state) = call(&app, "GET", "/api/state", None).await;
    for (served, lib) in state["commands"].as_array().unwrap().iter().zip(&active) {
        if !same(&served["timeline"], lib) {
            return Err("state timeline differs from the library".into());
        }
    }
    Ok(format!(
        "12 registrations and 12 what-ifs: {values} timelines, reports and sweep tables byte-identical; state hash unchanged by every what-if; no console involved"
    ))
}

pub fn equivalence() -> Outcome {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?.block_on(run())
}
