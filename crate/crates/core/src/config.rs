//! TOML configuration shared by the harness and the command-line tool.
//!
//! Every section and field is optional; missing values take the defaults
//! shown by `SimConfig::default()`.

use serde::{Deserialize, Serialize};

use crate::driver::DriverSection;
use crate::error::{Error, Result};
use crate::lane::{LaneGeometry, PlantParams, RoadDisturbance};
use crate::lkas::{LkasConfig, LkasSection};
use crate::metrics::SrrOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub tor_levels: Vec<f64>,
    pub dev_levels: Vec<f64>,
    pub seeds_per_condition: usize,
    /// Defaults to the time needed to cover the track at cruise speed.
    pub session_duration_s: Option<f64>,
    pub participant_count: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            tor_levels: vec![1.0, 2.0, 3.0],
            dev_levels: vec![0.0, 0.4, 0.8],
            seeds_per_condition: 30,
            session_duration_s: None,
            participant_count: 18,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub sweep: SweepSection,
    pub driver: DriverSection,
    pub plant: PlantParams,
    pub lane: LaneGeometry,
    pub lkas: LkasSection,
    pub disturbance: RoadDisturbance,
    pub metrics: SrrOptions,
}

/// Resolved sweep: levels, seeds and session length.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub tor_levels: Vec<f64>,
    pub dev_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub session_duration: f64,
    pub participant_count: usize,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.lane.validate()?;
        self.plant.validate()?;
        self.driver.validate()?;
        self.disturbance.validate()?;
        self.lkas_template()?;
        self.plan()?;
        Ok(())
    }

    /// The `[lkas]` section as a controller configuration for this lane.
    pub fn lkas_template(&self) -> Result<LkasConfig> {
        self.lkas.to_config(self.lane.lane_width)
    }

    pub fn session_duration(&self) -> f64 {
        self.sweep
            .session_duration_s
            .unwrap_or(self.lane.track_length / self.plant.cruise_speed)
    }

    pub fn plan(&self) -> Result<ExperimentPlan> {
        let s = &self.sweep;
        if s.tor_levels.is_empty() || s.dev_levels.is_empty() {
            return Err(Error::Config("sweep needs at least one TOR and one DEV level".into()));
        }
        if s.seeds_per_condition < 1 {
            return Err(Error::Config("seeds_per_condition must be >= 1".into()));
        }
        let duration = self.session_duration();
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Config(format!(
                "session duration must be > 0, got {duration}"
            )));
        }
        let base = self.driver.seed;
        Ok(ExperimentPlan {
            tor_levels: s.tor_levels.clone(),
            dev_levels: s.dev_levels.clone(),
            seeds: (0..s.seeds_per_condition as u64)
                .map(|i| base.wrapping_add(i))
                .collect(),
            session_duration: duration,
            participant_count: s.participant_count,
        })
    }
}
