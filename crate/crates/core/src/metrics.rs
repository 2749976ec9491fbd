//! Objective driving measures computed from trajectory logs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Biquad;

/// One logged simulation sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub time: f64,
    pub lateral_position: f64,
    pub heading: f64,
    pub steering_wheel_angle: f64,
    pub driver_torque: f64,
    pub assist_torque: f64,
    pub lateral_speed: f64,
    pub engaged: bool,
}

/// Uniformly sampled time series of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    sample_rate: f64,
    samples: Vec<Sample>,
}

/// Relative tolerance on sample spacing.
const SPACING_TOL: f64 = 1e-6;

impl TrajectoryLog {
    pub fn new(sample_rate: f64, samples: Vec<Sample>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Argument(format!("sample rate must be > 0, got {sample_rate}")));
        }
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let dt = 1.0 / sample_rate;
        for (i, w) in samples.windows(2).enumerate() {
            let step = w[1].time - w[0].time;
            if step.is_nan() || step <= 0.0 {
                return Err(Error::Argument(format!(
                    "time not strictly increasing at sample {}",
                    i + 1
                )));
            }
            if (step - dt).abs() > SPACING_TOL * dt.max(w[1].time.abs()) {
                return Err(Error::Argument(format!(
                    "non-uniform sampling at sample {}: step {step} s, expected {dt} s",
                    i + 1
                )));
            }
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    /// Infers the sample rate from the first two timestamps.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let span = samples[samples.len() - 1].time - samples[0].time;
        let rate = (samples.len() - 1) as f64 / span;
        Self::new(rate, samples)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Each sample covers one sampling interval, so `n / rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn lateral_positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lateral_position).collect()
    }

    pub fn lateral_speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lateral_speed).collect()
    }

    pub fn steering_angles(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.steering_wheel_angle).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrrMethod {
    /// Reversals between filtered extrema separated by at least the gap.
    Gap,
    /// Direction changes of the filtered steering rate beyond a rate threshold.
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrrOptions {
    pub method: SrrMethod,
    pub gap_threshold_deg: f64,
    pub rate_threshold_deg_s: f64,
    pub cutoff_hz: f64,
}

impl Default for SrrOptions {
    fn default() -> Self {
        Self {
            method: SrrMethod::Gap,
            gap_threshold_deg: 1.0,
            rate_threshold_deg_s: 1.0,
            cutoff_hz: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSet {
    pub sdlp: f64,
    pub srr: f64,
    pub rmsls: f64,
    pub departure_count: usize,
    pub duration: f64,
}

/// Population standard deviation about the sample mean.
pub fn population_std(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "standard deviation needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    // Shifted by the first value so constant input gives exactly zero.
    let origin = values[0];
    let mean = values.iter().map(|v| v - origin).sum::<f64>() / n;
    let ss: f64 = values
        .iter()
        .map(|v| {
            let d = v - origin - mean;
            d * d
        })
        .sum();
    Ok((ss / n).sqrt())
}

pub fn root_mean_square(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("root mean square of no values".into()));
    }
    let ms = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    Ok(ms.sqrt())
}

/// Standard deviation of lane position.
pub fn sdlp(log: &TrajectoryLog) -> Result<f64> {
    population_std(&log.lateral_positions())
}

/// Root mean square of lateral speed.
pub fn rmsls(log: &TrajectoryLog) -> Result<f64> {
    root_mean_square(&log.lateral_speeds())
}

/// Values at the local extrema of `signal`. Plateaus count once, at their
/// first sample; endpoints are not extrema.
pub fn stationary_points(signal: &[f64]) -> Vec<f64> {
    let mut points = Vec::new();
    let mut last_dir = 0.0_f64;
    let mut last_idx = 0usize;
    for i in 1..signal.len() {
        let d = signal[i] - signal[i - 1];
        if d == 0.0 {
            continue;
        }
        let dir = d.signum();
        if last_dir != 0.0 && dir != last_dir {
            points.push(signal[last_idx]);
        }
        last_dir = dir;
        last_idx = i;
    }
    points
}

/// Counts reversals in a sequence of extrema: an upward reversal when a
/// point rises at least `gap` above the lowest point since the previous
/// upward reversal, and symmetrically downward.
pub fn count_gap_reversals(extrema: &[f64], gap: f64) -> usize {
    let count_one_way = |sign: f64| {
        let mut count = 0;
        let mut k = 0;
        for l in 1..extrema.len() {
            let rise = sign * (extrema[l] - extrema[k]);
            if rise >= gap {
                count += 1;
                k = l;
            } else if rise < 0.0 {
                k = l;
            }
        }
        count
    };
    if extrema.is_empty() {
        return 0;
    }
    count_one_way(1.0) + count_one_way(-1.0)
}

/// Counts direction changes of `rate` where each direction is only
/// established once `|rate| >= threshold`.
pub fn count_rate_reversals(rate: &[f64], threshold: f64) -> usize {
    let mut dir = 0.0_f64;
    let mut count = 0;
    for &r in rate {
        if r.abs() >= threshold {
            let s = r.signum();
            if dir != 0.0 && s != dir {
                count += 1;
            }
            dir = s;
        }
    }
    count
}

/// Padding used for zero-phase filtering: three time constants of the cutoff.
fn filter_pad(sample_rate: f64, cutoff_hz: f64) -> usize {
    (3.0 * sample_rate / cutoff_hz).ceil() as usize
}

/// Steering reversals per second.
///
/// The steering wheel angle is low-pass filtered (second-order Butterworth,
/// forward and backward) before counting.
pub fn srr(log: &TrajectoryLog, options: &SrrOptions) -> Result<f64> {
    let duration = log.duration();
    if duration.is_nan() || duration <= 0.0 {
        return Err(Error::InsufficientData("zero-length trajectory".into()));
    }
    let fs = log.sample_rate();
    let filter = Biquad::butterworth_lowpass(options.cutoff_hz, fs)?;
    let degrees: Vec<f64> = log.steering_angles().iter().map(|a| a.to_degrees()).collect();
    let smooth = filter.filtfilt(&degrees, filter_pad(fs, options.cutoff_hz));
    let count = match options.method {
        SrrMethod::Gap => {
            if options.gap_threshold_deg.is_nan() || options.gap_threshold_deg <= 0.0 {
                return Err(Error::Argument(format!(
                    "gap threshold must be > 0, got {}",
                    options.gap_threshold_deg
                )));
            }
            count_gap_reversals(&stationary_points(&smooth), options.gap_threshold_deg)
        }
        SrrMethod::Rate => {
            if options.rate_threshold_deg_s.is_nan() || options.rate_threshold_deg_s <= 0.0 {
                return Err(Error::Argument(format!(
                    "rate threshold must be > 0, got {}",
                    options.rate_threshold_deg_s
                )));
            }
            let rate: Vec<f64> = smooth.windows(2).map(|w| (w[1] - w[0]) * fs).collect();
            count_rate_reversals(&rate, options.rate_threshold_deg_s)
        }
    };
    Ok(count as f64 / duration)
}

/// Number of times the vehicle leaves the lane: transitions of
/// `|lateral_position|` from within the half-width to beyond it. A log that
/// starts outside the lane counts that excursion too.
pub fn departures(log: &TrajectoryLog, lane_width: f64) -> usize {
    let half = lane_width / 2.0;
    let mut outside = false;
    let mut count = 0;
    for s in log.samples() {
        let now = s.lateral_position.abs() > half;
        if now && !outside {
            count += 1;
        }
        outside = now;
    }
    count
}

pub fn compute_metrics(log: &TrajectoryLog, lane_width: f64, srr_options: &SrrOptions) -> Result<MetricSet> {
    Ok(MetricSet {
        sdlp: sdlp(log)?,
        srr: srr(log, srr_options)?,
        rmsls: rmsls(log)?,
        departure_count: departures(log, lane_width),
        duration: log.duration(),
    })
}

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "t",
    "lat_pos",
    "heading",
    "steer_angle",
    "driver_tq",
    "assist_tq",
    "lat_speed",
    "engaged",
];

pub fn write_trajectory_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Argument(format!("writing trajectory CSV: {e}"));
    w.write_record(TRAJECTORY_HEADER).map_err(io)?;
    for s in log.samples() {
        w.write_record([
            s.time.to_string(),
            s.lateral_position.to_string(),
            s.heading.to_string(),
            s.steering_wheel_angle.to_string(),
            s.driver_torque.to_string(),
            s.assist_torque.to_string(),
            s.lateral_speed.to_string(),
            u8::from(s.engaged).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Argument(format!("writing trajectory CSV: {e}")))?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryLog> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::Argument(format!("reading trajectory CSV: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
        return Err(Error::Argument(format!(
            "unexpected trajectory header {:?}, expected {}",
            headers.iter().collect::<Vec<_>>(),
            TRAJECTORY_HEADER.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::Argument(format!("reading trajectory CSV: {e}")))?;
        let num = |i: usize| -> Result<f64> {
            record[i].trim().parse::<f64>().map_err(|e| {
                Error::Argument(format!(
                    "row {}: column {}: {e}",
                    line + 2,
                    TRAJECTORY_HEADER[i]
                ))
            })
        };
        let engaged = match record[7].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Argument(format!(
                    "row {}: engaged must be 0 or 1, got {other:?}",
                    line + 2
                )))
            }
        };
        samples.push(Sample {
            time: num(0)?,
            lateral_position: num(1)?,
            heading: num(2)?,
            steering_wheel_angle: num(3)?,
            driver_torque: num(4)?,
            assist_torque: num(5)?,
            lateral_speed: num(6)?,
            engaged,
        });
    }
    TrajectoryLog::from_samples(samples)
}
