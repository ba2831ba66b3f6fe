//! Shared setups for the criterion benches.

use num_complex::Complex64;
use tdnls_core::criticality::Nonlinearity;
use tdnls_core::oscillator::OscillatorModel;
use tdnls_core::solver::{InitialData, RunSettings, SimConfig};
use tdnls_core::spectral::{Grid, WaveState};

/// Example-1 potential, cubic dissipation, unit Gaussian.
pub fn example_config(n: usize, points: usize, half_width: f64) -> SimConfig {
    let mut run = RunSettings::new(1.0, 1e3, 0.01);
    run.initial_data = InitialData::Gaussian {
        width: 1.0,
        amplitude: 1.0,
        center: Vec::new(),
        chirp: 0.0,
    };
    run.cheap_diagnostics = true;
    run.record_every = usize::MAX;
    SimConfig {
        grid: Grid::new(n, points, half_width).unwrap(),
        oscillator: OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap(),
        nonlinearity: Nonlinearity::new(3.0, 0.0, -1.0).unwrap(),
        run,
    }
}

/// Smooth field with energy spread over many modes.
pub fn busy_state(grid: Grid) -> WaveState {
    WaveState::from_fn(grid, 0.0, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let phase: f64 = x.iter().enumerate().map(|(i, v)| (1.0 + i as f64) * v).sum();
        Complex64::from_polar((-0.1 * r2).exp() * (1.0 + 0.3 * (2.0 * phase).cos()), phase)
    })
}
