//! Naive reference implementations of the lateral-control metrics, shared
//! by the metric oracle tests and the acceptance suite.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use steerlab::metrics::{Sample, TrajectoryLog};

/// Variance from all pairwise differences: sum_ij (xi - xj)^2 / (2 n^2).
pub fn sdlp(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut acc = 0.0;
    for a in x {
        for b in x {
            acc += (a - b) * (a - b);
        }
    }
    (acc / (2.0 * n * n)).sqrt()
}

pub fn rmsls(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in x.iter().rev() {
        acc += v.powi(2);
    }
    (acc / x.len() as f64).sqrt()
}

/// Butterworth coefficients from the analog prototype
/// H(s) = w^2 / (s^2 + sqrt(2) w s + w^2) with s = 2 fs (z - 1) / (z + 1).
fn coefficients(fc: f64, fs: f64) -> ([f64; 3], [f64; 3]) {
    let w = 2.0 * fs * (PI * fc / fs).tan();
    let c = 2.0 * fs;
    let a0 = c * c + 2f64.sqrt() * w * c + w * w;
    let a1 = 2.0 * w * w - 2.0 * c * c;
    let a2 = c * c - 2f64.sqrt() * w * c + w * w;
    let b = [w * w / a0, 2.0 * w * w / a0, w * w / a0];
    (b, [1.0, a1 / a0, a2 / a0])
}

/// Direct-form I with the history primed as if the input had always been x[0].
fn lfilter(b: [f64; 3], a: [f64; 3], x: &[f64]) -> Vec<f64> {
    let x0 = x[0];
    let (mut x1, mut x2, mut y1, mut y2) = (x0, x0, x0, x0);
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = b[0] * xn + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2;
        x2 = x1;
        x1 = xn;
        y2 = y1;
        y1 = yn;
        y.push(yn);
    }
    y
}

fn filtfilt(x: &[f64], fc: f64, fs: f64) -> Vec<f64> {
    let (b, a) = coefficients(fc, fs);
    let n = x.len();
    let pad = ((3.0 * fs / fc).ceil() as usize).min(n - 1);
    let mut ext = Vec::new();
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let fwd = lfilter(b, a, &ext);
    let rev: Vec<f64> = fwd.into_iter().rev().collect();
    let back: Vec<f64> = lfilter(b, a, &rev).into_iter().rev().collect();
    back[pad..pad + n].to_vec()
}

pub fn srr(angles_rad: &[f64], fs: f64, gap_deg: f64, fc: f64) -> f64 {
    let deg: Vec<f64> = angles_rad.iter().map(|a| a * 180.0 / PI).collect();
    let y = filtfilt(&deg, fc, fs);
    // Local extrema by neighbour comparison (signals here have no plateaus).
    let mut ext = Vec::new();
    for i in 1..y.len() - 1 {
        let (l, c, r) = (y[i - 1], y[i], y[i + 1]);
        if (c > l && c > r) || (c < l && c < r) {
            ext.push(c);
        }
    }
    let mut count = 0;
    for dir in [1.0, -1.0] {
        let mut anchor = 0;
        for j in 1..ext.len() {
            let change = dir * (ext[j] - ext[anchor]);
            if change >= gap_deg {
                count += 1;
                anchor = j;
            } else if change < 0.0 {
                anchor = j;
            }
        }
    }
    count as f64 * fs / angles_rad.len() as f64
}
/// Random uniformly sampled log with smooth multi-tone steering.
pub fn random_log(rng: &mut ChaCha8Rng) -> TrajectoryLog {
    let fs = [20.0, 50.0, 100.0][rng.random_range(0..3)];
    let n = rng.random_range(200..2000);
    let offset = rng.random_range(-1.0..1.0);
    // Sum of a few slow sinusoids plus a small wiggle for steering.
    let comps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.5..6.0_f64).to_radians(),
                rng.random_range(0.05..1.5),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let steer: f64 = comps
                .iter()
                .map(|(a, f, p)| a * (2.0 * std::f64::consts::PI * f * t + p).sin())
                .sum();
            Sample {
                time: t,
                lateral_position: offset + rng.random_range(-2.5..2.5),
                heading: rng.random_range(-0.05..0.05),
                steering_wheel_angle: steer + rng.random_range(-1e-3..1e-3),
                lateral_speed: rng.random_range(-1.0..1.0),
                ..Sample::default()
            }
        })
        .collect();
    TrajectoryLog::new(fs, samples).unwrap()
}
