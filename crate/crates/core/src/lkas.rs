//! Lane keeping assist torque law.
//!
//! The assist extrapolates the lateral position one preview interval ahead
//! and commands a restoring torque that grows linearly once the predicted
//! deviation leaves a deadband of half-width `k_dev`. The slope is chosen so
//! the torque equals `k_tor` when the predicted deviation reaches the
//! reference deviation `d_ref`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lane::VehicleState;

/// Torque law parameterization. Angles are stored in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkasConfig {
    /// Torque at the reference deviation, N m. Zero disables the assist.
    pub k_tor: f64,
    /// Deadband half-width, m.
    pub k_dev: f64,
    pub preview_time: f64,
    pub ref_heading: f64,
    pub ref_speed: f64,
    pub lane_width: f64,
    /// Saturation magnitude, N m.
    pub torque_cap: f64,
}

impl Default for LkasConfig {
    fn default() -> Self {
        Self {
            k_tor: 2.0,
            k_dev: 0.4,
            preview_time: 1.0,
            ref_heading: 1.72_f64.to_radians(),
            ref_speed: 20.0,
            lane_width: 3.7,
            torque_cap: 5.0,
        }
    }
}

impl LkasConfig {
    /// Default parameterization with the given strategy levels.
    pub fn new(k_tor: f64, k_dev: f64) -> Result<Self> {
        Self::default().with_levels(k_tor, k_dev)
    }

    pub fn with_levels(self, k_tor: f64, k_dev: f64) -> Result<Self> {
        let config = Self {
            k_tor,
            k_dev,
            ..self
        };
        config.validate()?;
        Ok(config)
    }

    pub fn reference_deviation(&self) -> f64 {
        reference_deviation(self)
    }

    pub fn is_enabled(&self) -> bool {
        self.k_tor > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_tor.is_finite() && self.k_tor >= 0.0) {
            return Err(Error::Config(format!("k_TOR must be >= 0, got {}", self.k_tor)));
        }
        if !(self.preview_time.is_finite() && self.preview_time > 0.0) {
            return Err(Error::Config(format!(
                "preview time must be > 0, got {}",
                self.preview_time
            )));
        }
        if !(self.lane_width.is_finite() && self.lane_width > 0.0) {
            return Err(Error::Config(format!(
                "lane width must be > 0, got {}",
                self.lane_width
            )));
        }
        if !(self.ref_speed.is_finite() && self.ref_speed >= 0.0) {
            return Err(Error::Config(format!(
                "reference speed must be >= 0, got {}",
                self.ref_speed
            )));
        }
        if !self.ref_heading.is_finite() {
            return Err(Error::Config("reference heading must be finite".into()));
        }
        if !(self.torque_cap.is_finite() && self.torque_cap > 0.0) {
            return Err(Error::Config(format!(
                "torque cap must be > 0, got {}",
                self.torque_cap
            )));
        }
        if !(self.k_dev.is_finite() && self.k_dev >= 0.0) {
            return Err(Error::Config(format!("k_DEV must be >= 0, got {}", self.k_dev)));
        }
        let d_ref = self.reference_deviation();
        if self.k_dev >= d_ref {
            return Err(Error::Config(format!(
                "k_DEV must be < d_ref ({d_ref:.4} m), got {}",
                self.k_dev
            )));
        }
        Ok(())
    }
}

/// Lateral position extrapolated `preview_time` seconds ahead along the
/// current heading: `v t sin(heading) + d_cur`.
pub fn predicted_deviation(state: &VehicleState, preview_time: f64) -> f64 {
    state.speed * preview_time * state.heading.sin() + state.lateral_position
}

/// Predicted deviation of a vehicle sitting on the lane edge and heading out
/// at the reference heading and speed.
pub fn reference_deviation(config: &LkasConfig) -> f64 {
    config.ref_speed * config.preview_time * config.ref_heading.sin() + config.lane_width / 2.0
}

/// Assist torque for a predicted deviation.
///
/// Zero inside `|d_pre| <= k_dev`; outside, magnitude
/// `k_tor (|d_pre| - k_dev) / (d_ref - k_dev)` capped at `torque_cap`, with
/// sign opposite to `d_pre` so the torque steers back toward the center.
pub fn control_torque(d_pre: f64, config: &LkasConfig) -> Result<f64> {
    config.validate()?;
    Ok(torque_unchecked(d_pre, config, config.reference_deviation()))
}

fn torque_unchecked(d_pre: f64, config: &LkasConfig, d_ref: f64) -> f64 {
    let excess = d_pre.abs() - config.k_dev;
    if excess <= 0.0 || !config.is_enabled() {
        return 0.0;
    }
    // Ratio first so that d_pre == d_ref yields exactly k_tor.
    let magnitude = (config.k_tor * (excess / (d_ref - config.k_dev))).min(config.torque_cap);
    -magnitude.copysign(d_pre)
}

/// Validated controller with the reference deviation computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkasController {
    config: LkasConfig,
    d_ref: f64,
}

impl LkasController {
    pub fn new(config: LkasConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            d_ref: config.reference_deviation(),
            config,
        })
    }

    pub fn config(&self) -> &LkasConfig {
        &self.config
    }

    pub fn reference_deviation(&self) -> f64 {
        self.d_ref
    }

    pub fn slope(&self) -> f64 {
        self.config.k_tor / (self.d_ref - self.config.k_dev)
    }

    pub fn torque_for_deviation(&self, d_pre: f64) -> f64 {
        torque_unchecked(d_pre, &self.config, self.d_ref)
    }

    pub fn torque(&self, state: &VehicleState) -> f64 {
        self.torque_for_deviation(predicted_deviation(state, self.config.preview_time))
    }
}

/// All (TOR, DEV) combinations, TOR-major, built on top of `template`.
pub fn strategy_grid(
    tor_levels: &[f64],
    dev_levels: &[f64],
    template: &LkasConfig,
) -> Result<Vec<LkasConfig>> {
    if tor_levels.is_empty() || dev_levels.is_empty() {
        return Err(Error::Config("strategy grid needs at least one TOR and one DEV level".into()));
    }
    tor_levels
        .iter()
        .flat_map(|&tor| dev_levels.iter().map(move |&dev| (tor, dev)))
        .map(|(tor, dev)| template.with_levels(tor, dev))
        .collect()
}

/// `[lkas]` section of the configuration file, in user-facing units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LkasSection {
    pub k_tor_nm: f64,
    pub k_dev_m: f64,
    pub preview_s: f64,
    pub ref_heading_deg: f64,
    pub ref_speed_mps: f64,
    pub torque_cap_nm: f64,
}

impl Default for LkasSection {
    fn default() -> Self {
        let d = LkasConfig::default();
        Self {
            k_tor_nm: d.k_tor,
            k_dev_m: d.k_dev,
            preview_s: d.preview_time,
            ref_heading_deg: 1.72,
            ref_speed_mps: d.ref_speed,
            torque_cap_nm: d.torque_cap,
        }
    }
}

impl LkasSection {
    /// Controller configuration for a lane of the given width.
    pub fn to_config(&self, lane_width: f64) -> Result<LkasConfig> {
        let config = LkasConfig {
            k_tor: self.k_tor_nm,
            k_dev: self.k_dev_m,
            preview_time: self.preview_s,
            ref_heading: self.ref_heading_deg.to_radians(),
            ref_speed: self.ref_speed_mps,
            lane_width,
            torque_cap: self.torque_cap_nm,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn state(d_cur: f64, heading_deg: f64) -> VehicleState {
        VehicleState {
            lateral_position: d_cur,
            heading: heading_deg.to_radians(),
            ..VehicleState::centered(20.0)
        }
    }

    #[test]
    fn predicted_deviation_examples() {
        assert_relative_eq!(predicted_deviation(&state(1.85, 1.72), 1.0), 2.4503, epsilon = 1e-4);
        assert_eq!(predicted_deviation(&state(0.0, 0.0), 1.0), 0.0);
        assert_relative_eq!(
            predicted_deviation(&state(-1.85, -1.72), 1.0),
            -2.4503,
            epsilon = 1e-4
        );
    }

    #[test]
    fn reference_deviation_examples() {
        let c = LkasConfig::default();
        assert_relative_eq!(reference_deviation(&c), 2.4503, epsilon = 1e-4);
        let flat = LkasConfig {
            ref_heading: 0.0,
            ..c
        };
        assert_eq!(reference_deviation(&flat), 1.85);
        let slow = LkasConfig {
            ref_speed: 10.0,
            ..c
        };
        assert_relative_eq!(reference_deviation(&slow), 10.0 * 0.0300152 + 1.85, epsilon = 1e-6);
        assert_relative_eq!(reference_deviation(&slow), 2.1502, epsilon = 1e-4);
    }

    #[test]
    fn torque_law_examples() {
        let c = LkasConfig::new(2.0, 0.4).unwrap();
        let d_ref = c.reference_deviation();
        assert_eq!(control_torque(d_ref, &c).unwrap(), -2.0);
        assert_eq!(control_torque(-d_ref, &c).unwrap(), 2.0);
        assert_eq!(control_torque(0.4, &c).unwrap(), 0.0);

        // Midpoint of the linear segment with d_ref rounded to 2.45.
        let rounded = LkasConfig {
            ref_heading: ((2.45 - 1.85) / 20.0_f64).asin(),
            ..c
        };
        assert_relative_eq!(rounded.reference_deviation(), 2.45, epsilon = 1e-12);
        assert_relative_eq!(control_torque(1.425, &rounded).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn torque_saturates_at_cap() {
        let c = LkasConfig::new(3.0, 0.0).unwrap();
        assert_eq!(control_torque(50.0, &c).unwrap(), -5.0);
        assert_eq!(control_torque(-50.0, &c).unwrap(), 5.0);
    }

    #[test]
    fn rejects_deadband_beyond_reference() {
        let err = LkasConfig::new(2.0, 3.0).unwrap_err();
        assert!(err.to_string().contains("k_DEV must be < d_ref"), "{err}");
        let bad = LkasConfig {
            k_dev: 2.5,
            ..LkasConfig::default()
        };
        assert!(control_torque(1.0, &bad).is_err());
    }

    #[test]
    fn disabled_assist_is_silent() {
        let c = LkasConfig::new(0.0, 0.0).unwrap();
        assert_eq!(control_torque(2.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn grid_is_tor_major() {
        let g = strategy_grid(&[1.0, 2.0, 3.0], &[0.0, 0.4, 0.8], &LkasConfig::default()).unwrap();
        assert_eq!(g.len(), 9);
        let levels: Vec<_> = g.iter().map(|c| (c.k_tor, c.k_dev)).collect();
        assert_eq!(levels[0], (1.0, 0.0));
        assert_eq!(levels[1], (1.0, 0.4));
        assert_eq!(levels[3], (2.0, 0.0));
        assert_eq!(levels[8], (3.0, 0.8));

        assert_eq!(strategy_grid(&[2.0], &[0.4], &LkasConfig::default()).unwrap().len(), 1);
        let flat = strategy_grid(&[1.0, 2.0, 3.0], &[0.0], &LkasConfig::default()).unwrap();
        assert_eq!(flat.len(), 3);
        assert!(flat.iter().all(|c| c.k_dev == 0.0));

        assert!(strategy_grid(&[], &[0.4], &LkasConfig::default()).is_err());
        assert!(strategy_grid(&[1.0], &[0.4, 2.6], &LkasConfig::default()).is_err());
    }

    #[test]
    fn section_converts_degrees() {
        let c = LkasSection::default().to_config(3.7).unwrap();
        assert_relative_eq!(c.ref_heading, 0.030019663, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn deadband_is_exactly_zero(tor in 0.1f64..3.0, dev in 0.0f64..1.0, frac in -1.0f64..=1.0) {
            let c = LkasConfig::new(tor, dev).unwrap();
            prop_assert_eq!(control_torque(frac * dev, &c).unwrap(), 0.0);
        }

        #[test]
        fn odd_and_restoring(tor in 0.1f64..3.0, dev in 0.0f64..1.0, d in -6.0f64..6.0) {
            let c = LkasConfig::new(tor, dev).unwrap();
            let t = control_torque(d, &c).unwrap();
            prop_assert_eq!(control_torque(-d, &c).unwrap(), -t);
            if d.abs() > dev {
                prop_assert!(t * d < 0.0);
            }
        }

        #[test]
        fn piecewise_linear_between_deadband_and_cap(
            tor in 0.1f64..3.0, dev in 0.0f64..1.0, u in 0.0f64..1.0, w in 0.0f64..1.0,
        ) {
            let ctl = LkasController::new(LkasConfig::new(tor, dev).unwrap()).unwrap();
            let d_ref = ctl.reference_deviation();
            let (a, b) = (dev + u * (d_ref - dev), dev + w * (d_ref - dev));
            let diff = ctl.torque_for_deviation(a).abs() - ctl.torque_for_deviation(b).abs();
            prop_assert!((diff - ctl.slope() * (a - b)).abs() <= 1e-12 * tor.max(1.0));
        }

        #[test]
        fn continuous_at_deadband_edge(tor in 0.1f64..3.0, dev in 0.0f64..1.0) {
            let ctl = LkasController::new(LkasConfig::new(tor, dev).unwrap()).unwrap();
            let eps = 1e-9;
            prop_assert!(ctl.torque_for_deviation(dev + eps).abs() <= ctl.slope() * 2.0 * eps);
            prop_assert_eq!(ctl.torque_for_deviation(dev), 0.0);
        }
    }
}
