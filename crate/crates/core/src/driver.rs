//! Synthetic drivers.
//!
//! An engaged driver is a proportional-derivative steerer on lateral
//! position, heading and column rate with additive Gaussian torque noise.
//! A distracted driver keeps hands off the wheel until the vehicle reaches
//! the departure trigger, reacts after a delay, steers back, and returns to
//! the secondary task once the vehicle has stayed near the lane center for
//! the hold duration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lane::VehicleState;

/// Slack on elapsed-time comparisons; simulation times are multiples of the step.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverConfig {
    /// N m per meter of lateral offset.
    pub preview_gain: f64,
    /// N m per radian of heading.
    pub heading_gain: f64,
    /// N m s per radian of column rate.
    pub damping_gain: f64,
    /// Standard deviation of the per-step torque noise, N m.
    pub noise_std: f64,
    /// Seconds between the departure and the driver taking the wheel.
    pub reaction_delay: f64,
    pub rng_seed: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            preview_gain: 1.5,
            heading_gain: 20.0,
            damping_gain: 0.2,
            noise_std: 0.1,
            reaction_delay: 0.7,
            rng_seed: 0,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("preview_gain", self.preview_gain),
            ("heading_gain", self.heading_gain),
            ("damping_gain", self.damping_gain),
            ("noise_std", self.noise_std),
            ("reaction_delay", self.reaction_delay),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!("driver {name} must be >= 0, got {value}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverMode {
    Attentive,
    Distracted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistractionProtocol {
    pub mode: DriverMode,
    /// |lateral position| that brings the driver back to the wheel, m.
    pub departure_trigger: f64,
    /// |lateral position| counted as re-centered, m.
    pub recenter_band: f64,
    /// Continuous in-band time required before distraction resumes, s.
    pub hold_duration: f64,
}

impl Default for DistractionProtocol {
    fn default() -> Self {
        Self {
            mode: DriverMode::Distracted,
            departure_trigger: 1.85,
            recenter_band: 0.2,
            hold_duration: 3.0,
        }
    }
}

impl DistractionProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.recenter_band.is_finite() && self.recenter_band >= 0.0) {
            return Err(Error::Config(format!(
                "recenter band must be >= 0, got {}",
                self.recenter_band
            )));
        }
        if !(self.departure_trigger.is_finite() && self.departure_trigger > self.recenter_band) {
            return Err(Error::Config(format!(
                "departure trigger ({}) must exceed the recenter band ({})",
                self.departure_trigger, self.recenter_band
            )));
        }
        if !(self.hold_duration.is_finite() && self.hold_duration >= 0.0) {
            return Err(Error::Config(format!(
                "hold duration must be >= 0, got {}",
                self.hold_duration
            )));
        }
        Ok(())
    }

    /// Starting engagement for this protocol.
    pub fn initial_engagement(&self) -> Engagement {
        match self.mode {
            DriverMode::Attentive => Engagement::Engaged,
            DriverMode::Distracted => Engagement::Distracted,
        }
    }
}

/// Driver engagement state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engagement {
    /// Attentive driver, permanently on the wheel.
    Engaged,
    /// Hands off, doing the secondary task.
    Distracted,
    /// Departure noticed at `since`; still hands off until the reaction delay has passed.
    Reacting { since: f64 },
    /// Steering back. `in_band_since` is the start of the current in-band streak.
    Recovering { in_band_since: Option<f64> },
}

impl Engagement {
    /// Whether the driver's hands are on the wheel.
    pub fn is_engaged(&self) -> bool {
        matches!(self, Engagement::Engaged | Engagement::Recovering { .. })
    }
}

/// Advances the engagement state machine using the state at `state.time`.
pub fn update_engagement(
    protocol: &DistractionProtocol,
    reaction_delay: f64,
    state: &VehicleState,
    current: Engagement,
) -> Engagement {
    if protocol.mode == DriverMode::Attentive {
        return Engagement::Engaged;
    }
    let t = state.time;
    let offset = state.lateral_position.abs();
    match current {
        Engagement::Engaged | Engagement::Distracted => {
            if offset >= protocol.departure_trigger {
                if reaction_delay <= 0.0 {
                    Engagement::Recovering { in_band_since: None }
                } else {
                    Engagement::Reacting { since: t }
                }
            } else {
                Engagement::Distracted
            }
        }
        Engagement::Reacting { since } => {
            if t - since + TIME_EPS >= reaction_delay {
                Engagement::Recovering { in_band_since: None }
            } else {
                current
            }
        }
        Engagement::Recovering { in_band_since } => {
            if offset > protocol.recenter_band {
                return Engagement::Recovering { in_band_since: None };
            }
            let since = in_band_since.unwrap_or(t);
            if t - since + TIME_EPS >= protocol.hold_duration {
                Engagement::Distracted
            } else {
                Engagement::Recovering {
                    in_band_since: Some(since),
                }
            }
        }
    }
}

/// Deterministic part of the engaged driver's torque.
pub fn steering_command(state: &VehicleState, config: &DriverConfig) -> f64 {
    -config.preview_gain * state.lateral_position
        - config.heading_gain * state.heading
        - config.damping_gain * state.steering_wheel_rate
}

/// A driver with its own noise stream.
#[derive(Debug, Clone)]
pub struct Driver {
    config: DriverConfig,
    rng: ChaCha8Rng,
}

impl Driver {
    pub fn new(config: DriverConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
        }
    }

    pub fn config(&self) -> &DriverConfig {
        &self.config
    }

    /// Replaces the noise stream.
    pub fn reseed(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    /// Torque applied to the column. Exactly zero when not engaged; the noise
    /// stream only advances while engaged.
    pub fn torque(&mut self, state: &VehicleState, engaged: bool) -> f64 {
        if !engaged {
            return 0.0;
        }
        let mut torque = steering_command(state, &self.config);
        if self.config.noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            torque += self.config.noise_std * z;
        }
        torque
    }
}

/// `[driver]` section of the configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverSection {
    pub mode: DriverMode,
    pub preview_gain: f64,
    pub heading_gain: f64,
    pub damping_gain: f64,
    pub noise_std: f64,
    pub reaction_delay_s: f64,
    pub departure_trigger_m: f64,
    pub recenter_band_m: f64,
    pub hold_s: f64,
    /// Magnitude of the seeded initial heading perturbation in distracted runs.
    pub initial_heading_deg: f64,
    /// First seed of the sweep; run `i` of a condition uses `seed + i`.
    pub seed: u64,
}

impl Default for DriverSection {
    fn default() -> Self {
        let d = DriverConfig::default();
        let p = DistractionProtocol::default();
        Self {
            mode: p.mode,
            preview_gain: d.preview_gain,
            heading_gain: d.heading_gain,
            damping_gain: d.damping_gain,
            noise_std: d.noise_std,
            reaction_delay_s: d.reaction_delay,
            departure_trigger_m: p.departure_trigger,
            recenter_band_m: p.recenter_band,
            hold_s: p.hold_duration,
            initial_heading_deg: 0.5,
            seed: 1,
        }
    }
}

impl DriverSection {
    pub fn driver_config(&self, rng_seed: u64) -> DriverConfig {
        DriverConfig {
            preview_gain: self.preview_gain,
            heading_gain: self.heading_gain,
            damping_gain: self.damping_gain,
            noise_std: self.noise_std,
            reaction_delay: self.reaction_delay_s,
            rng_seed,
        }
    }

    pub fn protocol(&self) -> DistractionProtocol {
        DistractionProtocol {
            mode: self.mode,
            departure_trigger: self.departure_trigger_m,
            recenter_band: self.recenter_band_m,
            hold_duration: self.hold_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.driver_config(0).validate()?;
        self.protocol().validate()?;
        if !(self.initial_heading_deg.is_finite() && self.initial_heading_deg.abs() < 90.0) {
            return Err(Error::Config(format!(
                "initial heading must be within (-90, 90) degrees, got {}",
                self.initial_heading_deg
            )));
        }
        Ok(())
    }
}
