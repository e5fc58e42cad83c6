//! Study configuration file (TOML).
//!
//! ```toml
//! output_dir = "out"
//! zones = "zones.geojson"
//!
//! [calibration]
//! reference_speeds = "2023/reference_speeds.csv"
//!
//! [resampling]
//! seed = 7
//!
//! [[periods]]
//! label = "2010"
//! measurements = "2010/measurements.csv"
//! network = "2010/network.geojson"
//! detectors = "2010/detectors.geojson"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conflation::MatchParams;
use crate::error::{Error, Result};
use crate::metrics::MetricsParams;
use crate::nfd::DEFAULT_S_KM;
use crate::resampling::ResampleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodConfig {
    pub label: String,
    pub measurements: PathBuf,
    pub network: PathBuf,
    pub detectors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Fixed `s` in km. Mutually exclusive with `reference_speeds`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_speeds: Option<PathBuf>,
    /// Period whose measurements are calibrated; the last one if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub zones: PathBuf,
    #[serde(default)]
    pub occupancy_percent: bool,
    #[serde(default)]
    pub states_dump: bool,
    /// Restrict estimation to these zone ids.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zone_filter: Vec<String>,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub matching: MatchParams,
    #[serde(default)]
    pub resampling: ResampleParams,
    #[serde(default)]
    pub metrics: MetricsParams,
    pub periods: Vec<PeriodConfig>,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl StudyConfig {
    pub fn new(zones: impl Into<PathBuf>, periods: Vec<PeriodConfig>) -> Self {
        Self {
            output_dir: default_output_dir(),
            zones: zones.into(),
            occupancy_percent: false,
            states_dump: false,
            zone_filter: Vec::new(),
            calibration: CalibrationConfig::default(),
            matching: MatchParams::default(),
            resampling: ResampleParams::default(),
            metrics: MetricsParams::default(),
            periods,
            base_dir: PathBuf::new(),
        }
    }

    /// Reads and validates a config file. Every error is a config error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Every input file the study reads, in a fixed order, as written in the
    /// config.
    pub fn inputs(&self) -> Vec<PathBuf> {
        let mut v = vec![self.zones.clone()];
        if let Some(r) = &self.calibration.reference_speeds {
            v.push(r.clone());
        }
        for p in &self.periods {
            v.extend([p.measurements.clone(), p.network.clone(), p.detectors.clone()]);
        }
        v
    }

    /// Checks parameters and that every input exists, before anything is
    /// written.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.periods.is_empty() {
            return cfg("at least one [[periods]] entry is required".into());
        }
        let mut labels = BTreeSet::new();
        for p in &self.periods {
            if p.label.trim().is_empty() || p.label.contains(['/', '\\']) {
                return cfg(format!("invalid period label {:?}", p.label));
            }
            if !labels.insert(p.label.as_str()) {
                return cfg(format!("duplicate period label {}", p.label));
            }
        }
        let c = &self.calibration;
        if c.s_km.is_some() && c.reference_speeds.is_some() {
            return cfg("calibration: set either s_km or reference_speeds, not both".into());
        }
        if let Some(s) = c.s_km {
            if !(s.is_finite() && s > 0.0) {
                return cfg(format!("calibration.s_km must be > 0, got {s}"));
            }
        }
        if let Some(label) = &c.period {
            if !labels.contains(label.as_str()) {
                return cfg(format!("calibration.period {label} is not a configured period"));
            }
        }
        for check in [self.matching.validate(), self.resampling.validate()] {
            if let Err(e) = check {
                return cfg(e.to_string());
            }
        }
        let m = &self.metrics;
        if !(0.0..=1.0).contains(&m.capacity_percentile) {
            return cfg("metrics.capacity_percentile must be in [0, 1]".into());
        }
        if !(m.free_flow_k_max > 0.0) {
            return cfg("metrics.free_flow_k_max must be > 0".into());
        }
        for input in self.inputs() {
            let full = self.resolve(&input);
            if !full.is_file() {
                return cfg(format!("input file not found: {}", full.display()));
            }
        }
        Ok(())
    }

    /// Period used for calibration.
    pub fn calibration_period(&self) -> Option<&PeriodConfig> {
        match &self.calibration.period {
            Some(label) => self.periods.iter().find(|p| &p.label == label),
            None => self.periods.last(),
        }
    }

    /// `s` when fixed in the config (or defaulted), `None` when calibrated.
    pub fn fixed_s(&self) -> Option<f64> {
        match (&self.calibration.s_km, &self.calibration.reference_speeds) {
            (Some(s), _) => Some(*s),
            (None, None) => Some(DEFAULT_S_KM),
            (None, Some(_)) => None,
        }
    }
}
