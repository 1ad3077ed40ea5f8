//! HTTP service holding one airport scenario: the map, the active
//! calibration and every cleared taxi command with its deduced timeline and
//! pairwise conflict reports. Mutations are serialized and pushed to
//! subscribers as server-sent events.

mod api;
pub mod config;
pub mod state;

use std::sync::Arc;
use std::time::Duration;

pub use api::{router, AppState, Event};
pub use config::ServiceConfig;
pub use state::{Scenario, ScenarioError, Snapshot};

use taxiguard_core::airportmodel::load_map;
use taxiguard_core::calibration::CalibrationSet;
use taxiguard_core::conflict::ConflictConfig;
use taxiguard_core::AirportMap;

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("map: {0}")]
    Map(#[from] taxiguard_core::airportmodel::MapError),
    #[error("calibration {path}: {message}")]
    Calibration { path: String, message: String },
    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
}

/// Build the scenario described by `cfg`, restoring the snapshot if one
/// exists.
pub fn build_state(cfg: &ServiceConfig) -> Result<Arc<AppState>, StartupError> {
    let map = match &cfg.map_path {
        Some(p) => load_map(p)?,
        None => AirportMap::bundled(),
    };
    let conflict = ConflictConfig { warning: cfg.warning, ..ConflictConfig::default() };
    let mut scenario = Scenario::new(map, cfg.mode, conflict, cfg.day_window);

    if let Some(path) = &cfg.calibration_path {
        let err = |message: String| StartupError::Calibration { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let cal: CalibrationSet = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        scenario.swap_calibration(cal).map_err(|e| err(format!("{e:?}")))?;
    }

    if let Some(path) = cfg.snapshot_path.as_ref().filter(|p| p.exists()) {
        let err = |message: String| StartupError::Snapshot { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if snap.map_epoch != scenario.map_epoch {
            return Err(err(format!("taken against map {}, current map is {}", snap.map_epoch, scenario.map_epoch)));
        }
        let skipped = scenario.restore(snap).map_err(|e| err(format!("{e:?}")))?;
        for (id, e) in skipped {
            tracing::warn!("snapshot command {id} not restored: {e}");
        }
    }

    Ok(AppState::new(
        scenario,
        cfg.snapshot_path.clone(),
        cfg.token.clone(),
        Duration::from_secs(cfg.keepalive_secs.max(1)),
        cfg.event_buffer,
    ))
}
