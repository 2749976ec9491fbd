//! Closed-loop runs, strategy sweeps and their CSV outputs.

mod latin;
mod stats;

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use latin::{balanced_latin_square, order_for_participant};
pub use stats::{binomial_half_cdf, paired_sign_test, Aggregate, SignTest};

use crate::config::SimConfig;
use crate::driver::{update_engagement, Driver, DriverMode};
use crate::error::{Error, Result};
use crate::lane::{lateral_speed, step_plant, DisturbanceProcess, VehicleState};
use crate::lkas::{strategy_grid, LkasConfig, LkasController};
use crate::metrics::{compute_metrics, MetricSet, Sample, TrajectoryLog};

// Independent random streams derived from one run seed.
const STREAM_DRIVER: u64 = 1;
const STREAM_DISTURBANCE: u64 = 2;
const STREAM_INITIAL: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Simulates one session of a strategy with the configured driver.
///
/// A distracted run starts with the heading perturbed by
/// `initial_heading_deg` to a side drawn from the seed.
pub fn run_condition(lkas: &LkasConfig, sim: &SimConfig, seed: u64) -> Result<TrajectoryLog> {
    sim.validate()?;
    let controller = LkasController::new(*lkas)?;
    let plant = sim.plant;
    let dt = plant.timestep;
    let steps = (sim.session_duration() / dt).round() as usize;
    if steps < 2 {
        return Err(Error::Config(format!(
            "session of {} s is shorter than two steps",
            sim.session_duration()
        )));
    }

    let protocol = sim.driver.protocol();
    let reaction_delay = sim.driver.reaction_delay_s;
    let mut driver_config = sim.driver.driver_config(seed);
    driver_config.rng_seed = seed;
    let mut driver = Driver::new(driver_config);
    driver.reseed(stream(seed, STREAM_DRIVER));
    let mut disturbance =
        DisturbanceProcess::new(&sim.disturbance, dt, stream(seed, STREAM_DISTURBANCE));

    let initial_heading = if protocol.mode == DriverMode::Distracted {
        let side = if stream(seed, STREAM_INITIAL).random::<bool>() { 1.0 } else { -1.0 };
        side * sim.driver.initial_heading_deg.to_radians()
    } else {
        0.0
    };
    let mut state = VehicleState {
        heading: initial_heading,
        ..VehicleState::centered(plant.cruise_speed)
    };
    let mut engagement = protocol.initial_engagement();
    let mut samples = Vec::with_capacity(steps);

    for i in 0..steps {
        state.time = i as f64 * dt;
        engagement = update_engagement(&protocol, reaction_delay, &state, engagement);
        let engaged = engagement.is_engaged();
        let driver_torque = driver.torque(&state, engaged);
        let assist_torque = controller.torque(&state);
        let road_torque = disturbance.next_torque();
        samples.push(Sample {
            time: state.time,
            lateral_position: state.lateral_position,
            heading: state.heading,
            steering_wheel_angle: state.steering_wheel_angle,
            driver_torque,
            assist_torque,
            lateral_speed: lateral_speed(&state),
            engaged,
        });
        let time = state.time;
        state = step_plant(&state, driver_torque + road_torque, assist_torque, &plant).map_err(
            |e| Error::Diverged {
                time,
                reason: e.to_string(),
            },
        )?;
        if state.heading.abs() >= FRAC_PI_2 {
            return Err(Error::Diverged {
                time,
                reason: format!("heading {} rad left the valid range", state.heading),
            });
        }
    }
    TrajectoryLog::new(1.0 / dt, samples)
}

/// Metrics of one seeded run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbortedRun {
    pub condition_id: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Sdlp,
    Srr,
    Rmsls,
    Departures,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Sdlp, Metric::Srr, Metric::Rmsls, Metric::Departures];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Sdlp => "sdlp",
            Metric::Srr => "srr",
            Metric::Rmsls => "rmsls",
            Metric::Departures => "departures",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn of(&self, m: &MetricSet) -> f64 {
        match self {
            Metric::Sdlp => m.sdlp,
            Metric::Srr => m.srr,
            Metric::Rmsls => m.rmsls,
            Metric::Departures => m.departure_count as f64,
        }
    }
}

/// All runs of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    /// 1-based position in the TOR-major grid.
    pub condition_id: usize,
    pub config: LkasConfig,
    /// Completed runs in seed order.
    pub runs: Vec<RunRecord>,
    pub aborted: Vec<AbortedRun>,
}

impl ConditionResult {
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.runs.iter().map(|r| metric.of(&r.metrics)).collect()
    }

    pub fn aggregate(&self, metric: Metric) -> Aggregate {
        Aggregate::of(&self.values(metric))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub plan_seeds: Vec<u64>,
    pub conditions: Vec<ConditionResult>,
}

impl SweepOutcome {
    pub fn aborted_count(&self) -> usize {
        self.conditions.iter().map(|c| c.aborted.len()).sum()
    }

    pub fn condition(&self, k_tor: f64, k_dev: f64) -> Option<&ConditionResult> {
        self.conditions
            .iter()
            .find(|c| c.config.k_tor == k_tor && c.config.k_dev == k_dev)
    }
}

/// Runs every seed of one strategy, in parallel, keeping seed order.
pub fn run_condition_seeds(
    condition_id: usize,
    config: &LkasConfig,
    sim: &SimConfig,
    seeds: &[u64],
) -> ConditionResult {
    let outcomes: Vec<(u64, Result<MetricSet>)> = seeds
        .par_iter()
        .map(|&seed| {
            let metrics = run_condition(config, sim, seed)
                .and_then(|log| compute_metrics(&log, sim.lane.lane_width, &sim.metrics));
            (seed, metrics)
        })
        .collect();
    let mut runs = Vec::with_capacity(seeds.len());
    let mut aborted = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(metrics) => runs.push(RunRecord { seed, metrics }),
            Err(e) => aborted.push(AbortedRun {
                condition_id,
                seed,
                reason: e.to_string(),
            }),
        }
    }
    ConditionResult {
        condition_id,
        config: *config,
        runs,
        aborted,
    }
}

/// Runs the whole TOR x DEV grid. `on_condition` sees each condition as it
/// completes, in grid order.
pub fn run_sweep_with(
    sim: &SimConfig,
    mut on_condition: impl FnMut(&ConditionResult) -> Result<()>,
) -> Result<SweepOutcome> {
    sim.validate()?;
    let plan = sim.plan()?;
    let grid = strategy_grid(&plan.tor_levels, &plan.dev_levels, &sim.lkas_template()?)?;
    let mut conditions = Vec::with_capacity(grid.len());
    for (i, config) in grid.iter().enumerate() {
        let result = run_condition_seeds(i + 1, config, sim, &plan.seeds);
        on_condition(&result)?;
        conditions.push(result);
    }
    Ok(SweepOutcome {
        plan_seeds: plan.seeds,
        conditions,
    })
}

pub fn run_sweep(sim: &SimConfig) -> Result<SweepOutcome> {
    run_sweep_with(sim, |_| Ok(()))
}

pub const METRICS_HEADER: &str = "condition_id,tor_nm,dev_m,seed,sdlp,srr,rmsls,departures,duration";
pub const AGGREGATE_HEADER: &str = "tor_nm,dev_m,metric,mean,sem,n";

pub fn write_metrics_header<W: Write>(mut out: W) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")
}

/// Long-format rows, one per completed run.
pub fn write_metrics_rows<W: Write>(mut out: W, result: &ConditionResult) -> std::io::Result<()> {
    for run in &result.runs {
        let m = &run.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            result.condition_id,
            result.config.k_tor,
            result.config.k_dev,
            run.seed,
            m.sdlp,
            m.srr,
            m.rmsls,
            m.departure_count,
            m.duration
        )?;
    }
    Ok(())
}

pub fn write_metrics_csv<W: Write>(mut out: W, conditions: &[ConditionResult]) -> std::io::Result<()> {
    write_metrics_header(&mut out)?;
    for c in conditions {
        write_metrics_rows(&mut out, c)?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(mut out: W, conditions: &[ConditionResult]) -> std::io::Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for c in conditions {
        for metric in Metric::ALL {
            let a = c.aggregate(metric);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.config.k_tor,
                c.config.k_dev,
                metric.name(),
                a.mean,
                a.sem,
                a.n
            )?;
        }
    }
    Ok(())
}

/// One participant per line, comma-separated condition ids.
pub fn write_latin_square<W: Write>(mut out: W, rows: &[Vec<usize>]) -> std::io::Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(usize::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lane::RoadDisturbance;

    fn short(seconds: f64) -> SimConfig {
        let mut sim = SimConfig::default();
        sim.sweep.session_duration_s = Some(seconds);
        sim
    }

    #[test]
    fn quiet_run_without_assist_stays_centered() {
        let mut sim = short(20.0);
        sim.driver.noise_std = 0.0;
        sim.driver.initial_heading_deg = 0.0;
        sim.disturbance = RoadDisturbance::NONE;
        let off = LkasConfig::new(0.0, 0.0).unwrap();
        let log = run_condition(&off, &sim, 7).unwrap();
        assert!(log.samples().iter().all(|s| s.lateral_position == 0.0));
        let m = compute_metrics(&log, 3.7, &sim.metrics).unwrap();
        assert_eq!(m.sdlp, 0.0);
        assert_eq!(m.departure_count, 0);
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let sim = short(15.0);
        let c = LkasConfig::new(2.0, 0.4).unwrap();
        let a = run_condition(&c, &sim, 42).unwrap();
        let b = run_condition(&c, &sim, 42).unwrap();
        assert_eq!(a, b);
        let other = run_condition(&c, &sim, 43).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn default_session_covers_the_track() {
        let sim = SimConfig::default();
        let log = run_condition(&LkasConfig::new(2.0, 0.4).unwrap(), &sim, 1).unwrap();
        assert_eq!(log.len(), 7500);
        assert_eq!(log.duration(), 75.0);
    }

    #[test]
    fn hands_off_without_assist_leaves_the_lane() {
        let mut sim = short(60.0);
        sim.disturbance = RoadDisturbance::NONE;
        sim.driver.noise_std = 0.0;
        let off = LkasConfig::new(0.0, 0.0).unwrap();
        let log = run_condition(&off, &sim, 3).unwrap();
        let first_out = log
            .samples()
            .iter()
            .position(|s| s.lateral_position.abs() >= 1.85)
            .expect("vehicle should reach the lane edge");
        assert!(log.samples()[first_out..].iter().any(|s| s.engaged));
        for s in &log.samples()[..first_out] {
            assert!(!s.engaged);
            assert_eq!(s.driver_torque, 0.0);
        }
    }

    #[test]
    fn distracted_samples_have_zero_driver_torque() {
        let sim = short(75.0);
        let log = run_condition(&LkasConfig::new(1.0, 0.8).unwrap(), &sim, 5).unwrap();
        for s in log.samples().iter().filter(|s| !s.engaged) {
            assert_eq!(s.driver_torque, 0.0);
        }
    }

    #[test]
    fn single_cell_aggregate_equals_run() {
        let mut sim = short(10.0);
        sim.sweep.tor_levels = vec![2.0];
        sim.sweep.dev_levels = vec![0.4];
        sim.sweep.seeds_per_condition = 1;
        let out = run_sweep(&sim).unwrap();
        assert_eq!(out.conditions.len(), 1);
        let c = &out.conditions[0];
        assert_eq!(c.runs.len(), 1);
        for metric in Metric::ALL {
            assert_eq!(c.aggregate(metric).mean, metric.of(&c.runs[0].metrics));
            assert_eq!(c.aggregate(metric).n, 1);
        }
    }

    #[test]
    fn sweep_counts_and_order() {
        let mut sim = short(5.0);
        sim.sweep.seeds_per_condition = 3;
        let out = run_sweep(&sim).unwrap();
        assert_eq!(out.conditions.len(), 9);
        assert_eq!(out.conditions.iter().map(|c| c.runs.len()).sum::<usize>(), 27);
        let ids: Vec<_> = out.conditions.iter().map(|c| c.condition_id).collect();
        assert_eq!(ids, (1..=9).collect::<Vec<_>>());
        assert_eq!(out.conditions[5].config.k_tor, 2.0);
        assert_eq!(out.conditions[5].config.k_dev, 0.8);

        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &out.conditions).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 9 * 4);
        assert!(text.starts_with("tor_nm,dev_m,metric,mean,sem,n\n1,0,sdlp,"));

        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &out.conditions).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 28);
        assert!(text.lines().nth(1).unwrap().starts_with("1,1,0,1,"));
    }

    #[test]
    fn diverging_runs_are_excluded() {
        let mut sim = short(5.0);
        sim.sweep.tor_levels = vec![2.0];
        sim.sweep.dev_levels = vec![0.4];
        sim.sweep.seeds_per_condition = 2;
        // A column this soft with a huge driver gain spins the vehicle around.
        sim.driver.mode = DriverMode::Attentive;
        sim.driver.heading_gain = 1e6;
        sim.driver.initial_heading_deg = 0.0;
        let out = run_sweep(&sim).unwrap();
        assert_eq!(out.aborted_count(), 2);
        assert!(out.conditions[0].runs.is_empty());
        assert!(out.conditions[0].aggregate(Metric::Sdlp).mean.is_nan());
    }

    #[test]
    fn latin_square_file_format() {
        let mut buf = Vec::new();
        write_latin_square(&mut buf, &balanced_latin_square(2).unwrap()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,2\n2,1\n");
    }
}
