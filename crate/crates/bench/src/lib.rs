//! Fixtures shared by the benchmarks.

use steerlab::{Dataset, SatisfactionSurface, SimConfig, Surface};

/// Default configuration with a shortened session.
pub fn short_session(seconds: f64) -> SimConfig {
    let mut sim = SimConfig::default();
    sim.sweep.session_duration_s = Some(seconds);
    sim
}

/// The 3 x 3 strategy grid with responses from the published satisfaction surface.
pub fn satisfaction_grid() -> Dataset {
    let sat = SatisfactionSurface::default();
    let points: Vec<Vec<f64>> = [1.0, 2.0, 3.0]
        .iter()
        .flat_map(|&t| [0.0, 0.4, 0.8].into_iter().map(move |d| vec![t, d]))
        .collect();
    Dataset::from_fn(points, |x| sat.evaluate(x)).expect("finite grid")
}
