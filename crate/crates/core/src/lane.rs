//! Straight-road lane geometry and the vehicle plant.
//!
//! The plant couples a damped second-order steering column to a kinematic
//! bicycle model. Driver and assist torques are summed on the column; the
//! column angle maps to a front-wheel angle through the steering ratio, and
//! the wheel angle turns the vehicle at constant speed.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaneGeometry {
    /// Lane width in meters.
    pub lane_width: f64,
    /// Track length in meters.
    pub track_length: f64,
}

impl Default for LaneGeometry {
    fn default() -> Self {
        Self {
            lane_width: 3.7,
            track_length: 1500.0,
        }
    }
}

impl LaneGeometry {
    pub fn new(lane_width: f64, track_length: f64) -> Result<Self> {
        let geom = Self {
            lane_width,
            track_length,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lane_width.is_finite() && self.lane_width > 0.0) {
            return Err(Error::Config(format!(
                "lane_width must be > 0, got {}",
                self.lane_width
            )));
        }
        if !(self.track_length.is_finite() && self.track_length > 0.0) {
            return Err(Error::Config(format!(
                "track_length must be > 0, got {}",
                self.track_length
            )));
        }
        Ok(())
    }

    /// Distance from the lane center to either lane edge.
    pub fn half_width(&self) -> f64 {
        self.lane_width / 2.0
    }
}

/// Kinematic state of the ego vehicle.
///
/// Lateral position is signed with 0 at the lane center and positive to the
/// left. Heading is measured from the lane direction, positive to the left.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub time: f64,
    pub longitudinal_position: f64,
    pub lateral_position: f64,
    pub heading: f64,
    pub speed: f64,
    pub steering_wheel_angle: f64,
    pub steering_wheel_rate: f64,
}

impl VehicleState {
    /// Vehicle on the lane center, aligned with the lane, hands-off column at rest.
    pub fn centered(speed: f64) -> Self {
        Self {
            speed,
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.longitudinal_position,
            self.lateral_position,
            self.heading,
            self.speed,
            self.steering_wheel_angle,
            self.steering_wheel_rate,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidState(format!("non-finite field in {self:?}")));
        }
        if self.speed < 0.0 {
            return Err(Error::InvalidState(format!(
                "speed must be >= 0, got {}",
                self.speed
            )));
        }
        Ok(())
    }

    /// The same state reflected about the lane center line.
    pub fn mirrored(&self) -> Self {
        Self {
            lateral_position: -self.lateral_position,
            heading: -self.heading,
            steering_wheel_angle: -self.steering_wheel_angle,
            steering_wheel_rate: -self.steering_wheel_rate,
            ..*self
        }
    }
}

/// Lateral speed of the vehicle relative to the lane, `v * sin(heading)`.
pub fn lateral_speed(state: &VehicleState) -> f64 {
    state.speed * state.heading.sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParams {
    /// Steering column inertia, kg m^2.
    pub column_inertia: f64,
    /// Column viscous damping, N m s/rad.
    pub column_damping: f64,
    /// Self-aligning stiffness acting on the column, N m/rad.
    pub self_align_stiffness: f64,
    /// Steering wheel angle over front wheel angle.
    pub steering_ratio: f64,
    pub wheelbase: f64,
    /// Integration step in seconds.
    pub timestep: f64,
    /// Constant forward speed in m/s.
    pub cruise_speed: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            column_inertia: 0.05,
            column_damping: 1.0,
            self_align_stiffness: 10.0,
            steering_ratio: 15.0,
            wheelbase: 2.7,
            timestep: 0.01,
            cruise_speed: 20.0,
        }
    }
}

/// Largest integration step accepted by [`PlantParams::validate`].
pub const MAX_TIMESTEP: f64 = 0.01;

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("column_inertia", self.column_inertia),
            ("column_damping", self.column_damping),
            ("self_align_stiffness", self.self_align_stiffness),
            ("steering_ratio", self.steering_ratio),
            ("wheelbase", self.wheelbase),
            ("timestep", self.timestep),
            ("cruise_speed", self.cruise_speed),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {value}")));
            }
        }
        // Allow for the rounding in values like 1/100 written as a decimal.
        if self.timestep > MAX_TIMESTEP * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "timestep must be <= {MAX_TIMESTEP} s, got {}",
                self.timestep
            )));
        }
        Ok(())
    }
}

/// Advances the plant by one fixed step.
///
/// Column: `I a'' = T_driver + T_assist - b a' - k a`. Front wheel angle is
/// `a / ratio`, yaw rate `v tan(delta) / L`, lateral rate `v sin(heading)`.
/// The column rate is updated first and the column angle from the new rate
/// (semi-implicit Euler). Heading and positions then use the mean of the
/// start- and end-of-step values (trapezoidal rule).
pub fn step_plant(
    state: &VehicleState,
    driver_torque: f64,
    assist_torque: f64,
    params: &PlantParams,
) -> Result<VehicleState> {
    if !state.is_finite() {
        return Err(Error::InvalidState(format!("non-finite field in {state:?}")));
    }
    if !(driver_torque.is_finite() && assist_torque.is_finite()) {
        return Err(Error::InvalidState(format!(
            "non-finite torque input (driver {driver_torque}, assist {assist_torque})"
        )));
    }
    let dt = params.timestep;
    let v = state.speed;

    let column_torque = driver_torque + assist_torque
        - params.column_damping * state.steering_wheel_rate
        - params.self_align_stiffness * state.steering_wheel_angle;
    let steering_wheel_rate = state.steering_wheel_rate + dt * column_torque / params.column_inertia;
    let steering_wheel_angle = state.steering_wheel_angle + dt * steering_wheel_rate;

    let yaw_rate = |column_angle: f64| v * (column_angle / params.steering_ratio).tan() / params.wheelbase;
    let heading = state.heading
        + 0.5 * dt * (yaw_rate(state.steering_wheel_angle) + yaw_rate(steering_wheel_angle));

    let (sin_h, cos_h) = (0.5 * (state.heading + heading)).sin_cos();
    let next = VehicleState {
        time: state.time + dt,
        longitudinal_position: state.longitudinal_position + dt * v * cos_h,
        lateral_position: state.lateral_position + dt * v * sin_h,
        heading,
        speed: v,
        steering_wheel_angle,
        steering_wheel_rate,
    };
    if !next.is_finite() {
        return Err(Error::InvalidState(format!(
            "step produced a non-finite state from {state:?}"
        )));
    }
    Ok(next)
}

/// Road and wind disturbance felt as a torque on the steering column.
///
/// Modeled as an Ornstein-Uhlenbeck process with stationary standard
/// deviation `torque_std_nm` and correlation time `correlation_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadDisturbance {
    pub torque_std_nm: f64,
    pub correlation_s: f64,
}

impl Default for RoadDisturbance {
    fn default() -> Self {
        Self {
            torque_std_nm: 0.15,
            correlation_s: 1.0,
        }
    }
}

impl RoadDisturbance {
    pub const NONE: Self = Self {
        torque_std_nm: 0.0,
        correlation_s: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.torque_std_nm.is_finite() && self.torque_std_nm >= 0.0) {
            return Err(Error::Config(format!(
                "disturbance torque_std_nm must be >= 0, got {}",
                self.torque_std_nm
            )));
        }
        if !(self.correlation_s.is_finite() && self.correlation_s > 0.0) {
            return Err(Error::Config(format!(
                "disturbance correlation_s must be > 0, got {}",
                self.correlation_s
            )));
        }
        Ok(())
    }
}

/// Discretely sampled disturbance torque; starts at zero.
#[derive(Debug, Clone)]
pub struct DisturbanceProcess {
    decay: f64,
    kick: f64,
    value: f64,
    rng: ChaCha8Rng,
}

impl DisturbanceProcess {
    pub fn new(params: &RoadDisturbance, timestep: f64, rng: ChaCha8Rng) -> Self {
        let decay = (-timestep / params.correlation_s).exp();
        Self {
            decay,
            kick: params.torque_std_nm * (1.0 - decay * decay).sqrt(),
            value: 0.0,
            rng,
        }
    }

    /// Current value, then advance one step.
    pub fn next_torque(&mut self) -> f64 {
        let current = self.value;
        if self.kick > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.value = self.decay * self.value + self.kick * z;
        }
        current
    }
}
