//! Second-order Butterworth low-pass applied forward and backward.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    /// Denominator with a0 normalized to 1: `[a1, a2]`.
    pub a: [f64; 2],
}

impl Biquad {
    /// Bilinear-transform design with frequency prewarping.
    pub fn butterworth_lowpass(cutoff_hz: f64, sample_rate: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && sample_rate > 0.0 && cutoff_hz < sample_rate / 2.0) {
            return Err(Error::Argument(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
                sample_rate / 2.0
            )));
        }
        let k = (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
        let k2 = k * k;
        let sqrt2 = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + sqrt2 * k + k2);
        let b0 = k2 * norm;
        Ok(Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k2 - 1.0) * norm, (1.0 - sqrt2 * k + k2) * norm],
        })
    }

    /// Runs the filter (transposed direct form II) starting from the steady
    /// state for a constant input equal to `x[0]`.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let Some(&x0) = x.first() else {
            return Vec::new();
        };
        let mut z2 = (b2 - a2) * x0;
        let mut z1 = (b1 - a1) * x0 + z2;
        x.iter()
            .map(|&xi| {
                let y = b0 * xi + z1;
                z1 = b1 * xi - a1 * y + z2;
                z2 = b2 * xi - a2 * y;
                y
            })
            .collect()
    }

    /// Zero-phase filtering with odd-reflection padding at both ends.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = pad.min(n - 1);
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}
