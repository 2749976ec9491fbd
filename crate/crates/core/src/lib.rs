//! Shared steering control simulation and analysis.
//!
//! A lane keeping assist applies a restoring torque to the steering column
//! as a deadband-plus-linear function of the predicted lateral deviation.
//! This crate simulates that assist together with synthetic drivers on a
//! straight highway, computes lateral-control measures from the resulting
//! trajectories, and fits quadratic response surfaces over the assist
//! parameters.

pub mod config;
pub mod driver;
pub mod error;
pub mod filter;
pub mod harness;
pub mod lane;
pub mod lkas;
pub mod metrics;
pub mod surface;

pub use config::{ExperimentPlan, SimConfig, SweepSection};
pub use driver::{
    update_engagement, DistractionProtocol, Driver, DriverConfig, DriverMode, DriverSection, Engagement,
};
pub use error::{Error, Result};
pub use harness::{
    balanced_latin_square, run_condition, run_sweep, run_sweep_with, ConditionResult, Metric, SweepOutcome,
};
pub use lane::{lateral_speed, step_plant, LaneGeometry, PlantParams, RoadDisturbance, VehicleState};
pub use lkas::{
    control_torque, predicted_deviation, reference_deviation, strategy_grid, LkasConfig, LkasController,
};
pub use metrics::{compute_metrics, MetricSet, Sample, SrrMethod, SrrOptions, TrajectoryLog};
pub use surface::{
    Surface, QuadraticSurface,
    best_subsets, contour_grid, fit_ols, mallows_cp, stationary_point, Dataset, Polynomial, RegressionModel,
    SatisfactionSurface, StationaryKind, StationaryPoint, SubsetRanking, Term, TermBasis,
};
