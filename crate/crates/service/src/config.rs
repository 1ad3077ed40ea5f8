use std::path::{Path, PathBuf};

use serde::Deserialize;
use taxiguard_core::calibration::{CalibrationMode, DayWindow};
use taxiguard_core::conflict::WarningThresholds;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("environment variable {var}: {message}")]
    Env { var: String, message: String },
}

/// Service configuration. Every field can be overridden by a
/// `TAXIGUARD_*` environment variable.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Map file; the bundled map when absent.
    pub map_path: Option<PathBuf>,
    pub calibration_path: Option<PathBuf>,
    pub snapshot_path: Option<PathBuf>,
    pub warning: WarningThresholds,
    /// Overrides the calibration's own day window when selecting bands.
    pub day_window: Option<DayWindow>,
    pub mode: CalibrationMode,
    /// Static bearer token required on mutating requests.
    pub token: Option<String>,
    pub keepalive_secs: u64,
    pub event_buffer: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            map_path: None,
            calibration_path: None,
            snapshot_path: None,
            warning: WarningThresholds::default(),
            day_window: None,
            mode: CalibrationMode::default(),
            token: None,
            keepalive_secs: 15,
            event_buffer: 256,
        }
    }
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// Apply `TAXIGUARD_*` overrides from `vars`.
    pub fn apply_env<I, K, V>(mut self, vars: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let (mut a, mut b) = (self.warning.a(), self.warning.b());
        for (k, v) in vars {
            let (k, v) = (k.as_ref(), v.into());
            let err = |message: String| ConfigError::Env { var: k.to_owned(), message };
            let num = |v: &str| v.parse::<f64>().map_err(|e| err(e.to_string()));
            match k {
                "TAXIGUARD_BIND" => self.bind = v,
                "TAXIGUARD_MAP" => self.map_path = Some(v.into()),
                "TAXIGUARD_CALIBRATION" => self.calibration_path = Some(v.into()),
                "TAXIGUARD_SNAPSHOT" => self.snapshot_path = Some(v.into()),
                "TAXIGUARD_TOKEN" => self.token = Some(v),
                "TAXIGUARD_WARN_A" => a = num(&v)?,
                "TAXIGUARD_WARN_B" => b = num(&v)?,
                "TAXIGUARD_DAY_WINDOW" => self.day_window = Some(v.parse().map_err(|e| err(format!("{e}")))?),
                "TAXIGUARD_MODE" => {
                    self.mode = match v.as_str() {
                        "time-banded" => CalibrationMode::TimeBanded,
                        "pauta" => CalibrationMode::Pauta,
                        other => return Err(err(format!("unknown mode {other:?}"))),
                    }
                }
                "TAXIGUARD_KEEPALIVE_SECS" => self.keepalive_secs = v.parse().map_err(|e| err(format!("{e}")))?,
                _ => {}
            }
        }
        self.warning = WarningThresholds::new(a, b).map_err(|e| ConfigError::Env {
            var: "TAXIGUARD_WARN_A/B".into(),
            message: e.to_string(),
        })?;
        Ok(self)
    }

    /// File (if given) then process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        base.apply_env(std::env::vars())
    }
}
