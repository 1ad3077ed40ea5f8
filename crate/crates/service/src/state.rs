//! Scenario state and the pure computations behind each endpoint.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use taxiguard_core::airportmodel::{validate_command, CommandViolation};
use taxiguard_core::calibration::{CalibrationIssue, CalibrationMode, CalibrationSet, DayWindow};
use taxiguard_core::conflict::{
    detect, offset_sweep, response_action, timeline_features, ConflictConfig, ConflictReport, OffsetSpec,
    ResponseAction, SweepRow, WarningLevel,
};
use taxiguard_core::deduction::{deduce_route, DeducedTimeline, DeductionError};
use taxiguard_core::{AirportMap, TaxiCommand};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("command violates the map")]
    InvalidCommand(Vec<CommandViolation>),
    #[error("{0}")]
    Deduction(String),
    #[error("command {0} is already active")]
    Duplicate(String),
    #[error("command {0} is not active")]
    NotFound(String),
    #[error("no calibration loaded")]
    NoCalibration,
    #[error("calibration does not fit the map")]
    InvalidCalibration(Vec<CalibrationIssue>),
}

impl From<DeductionError> for ScenarioError {
    fn from(e: DeductionError) -> Self {
        match e {
            DeductionError::InvalidCommand(v) => ScenarioError::InvalidCommand(v),
            other => ScenarioError::Deduction(other.to_string()),
        }
    }
}

/// Short content hash used as an epoch id.
pub fn epoch_id<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveCommand {
    pub command: TaxiCommand,
    pub timeline: DeducedTimeline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub command_id: String,
    pub timeline: DeducedTimeline,
    pub conflicts: Vec<ConflictReport>,
    pub highest_level: WarningLevel,
    pub action: ResponseAction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSweep {
    pub against: String,
    pub rows: Vec<SweepRow>,
}

/// Persisted form: everything else is recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub map_epoch: String,
    pub calibration: Option<CalibrationSet>,
    pub commands: Vec<TaxiCommand>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub map: Arc<AirportMap>,
    pub map_epoch: String,
    pub calibration: Option<Arc<CalibrationSet>>,
    pub calibration_epoch: Option<String>,
    pub mode: CalibrationMode,
    pub conflict: ConflictConfig,
    pub day_window: Option<DayWindow>,
    /// Registration order.
    pub commands: Vec<ActiveCommand>,
    /// Keyed by `(later, earlier)` command id.
    pub conflicts: BTreeMap<(String, String), ConflictReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateView<'a> {
    pub map_epoch: &'a str,
    pub calibration_epoch: Option<&'a str>,
    pub state_hash: String,
    pub commands: &'a [ActiveCommand],
    pub conflicts: Vec<&'a ConflictReport>,
}

impl Scenario {
    pub fn new(map: AirportMap, mode: CalibrationMode, conflict: ConflictConfig, day_window: Option<DayWindow>) -> Self {
        Self {
            map_epoch: epoch_id(&map),
            map: Arc::new(map),
            calibration: None,
            calibration_epoch: None,
            mode,
            conflict,
            day_window,
            commands: Vec::new(),
            conflicts: BTreeMap::new(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            map_epoch: self.map_epoch.clone(),
            calibration: self.calibration.as_deref().cloned(),
            commands: self.commands.iter().map(|c| c.command.clone()).collect(),
        }
    }

    /// Hash of the persisted state; unchanged by read-only operations.
    pub fn state_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.snapshot()).expect("serializable");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn view(&self) -> StateView<'_> {
        StateView {
            map_epoch: &self.map_epoch,
            calibration_epoch: self.calibration_epoch.as_deref(),
            state_hash: self.state_hash(),
            commands: &self.commands,
            conflicts: self.conflicts.values().collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&ActiveCommand> {
        self.commands.iter().find(|c| c.command.command_id == id)
    }

    fn prepare(&self, cal: &CalibrationSet) -> CalibrationSet {
        let mut c = cal.clone();
        if let Some(w) = self.day_window {
            c.metadata.day_window = w;
        }
        c
    }

    fn deduce(&self, cal: &CalibrationSet, cmd: &TaxiCommand) -> Result<DeducedTimeline, ScenarioError> {
        let route = validate_command(cmd, &self.map).map_err(ScenarioError::InvalidCommand)?;
        Ok(deduce_route(cmd, &route, cal, self.mode)?)
    }

    /// Timeline and conflicts of `cmd` against every active command other
    /// than one with the same id. Does not modify state.
    pub fn evaluate(&self, cmd: &TaxiCommand) -> Result<Evaluation, ScenarioError> {
        let cal = self.calibration.as_deref().ok_or(ScenarioError::NoCalibration)?;
        let timeline = self.deduce(cal, cmd)?;
        let conflicts: Vec<ConflictReport> = self
            .commands
            .iter()
            .filter(|c| c.command.command_id != cmd.command_id)
            .map(|c| detect(&timeline, &c.timeline, &timeline_features(&timeline, &c.timeline), &self.conflict))
            .collect();
        let highest_level = conflicts.iter().map(|r| r.overall.level).max().unwrap_or(WarningLevel::Low);
        Ok(Evaluation {
            command_id: cmd.command_id.clone(),
            timeline,
            conflicts,
            highest_level,
            action: response_action(highest_level),
        })
    }

    /// Offset sweeps of `cmd` (shifted later) against active commands.
    pub fn sweep(&self, cmd: &TaxiCommand, spec: &OffsetSpec, against: Option<&str>) -> Result<Vec<PairSweep>, ScenarioError> {
        let cal = self.calibration.as_deref().ok_or(ScenarioError::NoCalibration)?;
        let mut out = Vec::new();
        for c in &self.commands {
            if c.command.command_id == cmd.command_id || against.is_some_and(|a| a != c.command.command_id) {
                continue;
            }
            let rows = offset_sweep(&c.command, cmd, cal, &self.map, self.mode, &self.conflict, spec)?;
            out.push(PairSweep { against: c.command.command_id.clone(), rows });
        }
        if let Some(a) = against {
            if out.is_empty() {
                return Err(ScenarioError::NotFound(a.to_owned()));
            }
        }
        Ok(out)
    }

    pub fn register(&mut self, cmd: TaxiCommand) -> Result<Evaluation, ScenarioError> {
        if self.get(&cmd.command_id).is_some() {
            return Err(ScenarioError::Duplicate(cmd.command_id));
        }
        let eval = self.evaluate(&cmd)?;
        for r in &eval.conflicts {
            self.conflicts.insert((r.pair[0].clone(), r.pair[1].clone()), r.clone());
        }
        self.commands.push(ActiveCommand { command: cmd, timeline: eval.timeline.clone() });
        Ok(eval)
    }

    pub fn remove(&mut self, id: &str) -> Result<ActiveCommand, ScenarioError> {
        let idx = self
            .commands
            .iter()
            .position(|c| c.command.command_id == id)
            .ok_or_else(|| ScenarioError::NotFound(id.to_owned()))?;
        self.conflicts.retain(|(a, b), _| a != id && b != id);
        Ok(self.commands.remove(idx))
    }

    /// Swap the calibration and re-deduce every active command. On error
    /// nothing changes.
    pub fn swap_calibration(&mut self, cal: CalibrationSet) -> Result<String, ScenarioError> {
        cal.validate(&self.map).map_err(ScenarioError::InvalidCalibration)?;
        let prepared = self.prepare(&cal);
        let mut commands = Vec::with_capacity(self.commands.len());
        for c in &self.commands {
            let timeline = self.deduce(&prepared, &c.command)?;
            commands.push(ActiveCommand { command: c.command.clone(), timeline });
        }
        let epoch = epoch_id(&cal);
        self.calibration = Some(Arc::new(prepared));
        self.calibration_epoch = Some(epoch.clone());
        self.commands = commands;
        self.rebuild_conflicts();
        Ok(epoch)
    }

    fn rebuild_conflicts(&mut self) {
        self.conflicts.clear();
        for (i, later) in self.commands.iter().enumerate() {
            for earlier in &self.commands[..i] {
                let r = detect(
                    &later.timeline,
                    &earlier.timeline,
                    &timeline_features(&later.timeline, &earlier.timeline),
                    &self.conflict,
                );
                self.conflicts.insert((r.pair[0].clone(), r.pair[1].clone()), r);
            }
        }
    }

    /// Rebuild from a snapshot. Commands that no longer deduce are skipped
    /// and returned.
    pub fn restore(&mut self, snap: Snapshot) -> Result<Vec<(String, ScenarioError)>, ScenarioError> {
        let mut skipped = Vec::new();
        if let Some(cal) = snap.calibration {
            self.swap_calibration(cal)?;
        }
        for cmd in snap.commands {
            let id = cmd.command_id.clone();
            if let Err(e) = self.register(cmd) {
                skipped.push((id, e));
            }
        }
        Ok(skipped)
    }

    /// Conflict matrix covers exactly the active pairs.
    pub fn is_consistent(&self) -> bool {
        let n = self.commands.len();
        self.conflicts.len() == n * n.saturating_sub(1) / 2
            && self.conflicts.keys().all(|(a, b)| a != b && self.get(a).is_some() && self.get(b).is_some())
    }
}
