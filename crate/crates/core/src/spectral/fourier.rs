use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, Axis, Dimension, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Grid, ProfileState, WaveState};

/// Cached FFT plans and |ξ|² table for one grid layout.
///
/// Only the sample count and spacing matter, so one engine serves every
/// state whose grid is [`Grid::compatible`] with the one it was built for.
#[derive(Clone)]
pub struct Fourier {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    xi_sq: ArrayD<f64>,
    xi: Vec<f64>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            fwd: planner.plan_fft_forward(grid.points),
            inv: planner.plan_fft_inverse(grid.points),
            xi_sq: grid.xi_sq_fft(),
            xi: grid.xi_fft(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// |ξ|² in FFT order.
    pub fn xi_sq(&self) -> &ArrayD<f64> {
        &self.xi_sq
    }

    /// Unnormalised forward FFT along every axis.
    pub fn forward(&self, data: &mut ArrayD<Complex64>) {
        transform_axes(data, self.fwd.as_ref());
    }

    /// Inverse FFT along every axis, normalised so `inverse ∘ forward = id`.
    pub fn inverse(&self, data: &mut ArrayD<Complex64>) {
        transform_axes(data, self.inv.as_ref());
        let scale = 1.0 / self.grid.len() as f64;
        data.mapv_inplace(|v| v * scale);
    }

    /// Apply the radial multiplier m(|ξ|²).
    pub fn apply_radial(&self, data: &mut ArrayD<Complex64>, m: impl Fn(f64) -> Complex64) {
        self.forward(data);
        Zip::from(&mut *data).and(&self.xi_sq).for_each(|v, &q| *v *= m(q));
        self.inverse(data);
    }

    /// Apply a multiplier m(|ξ|²) given as a precomputed table in FFT order.
    pub fn apply_table(&self, data: &mut ArrayD<Complex64>, table: &ArrayD<Complex64>) {
        self.forward(data);
        Zip::from(&mut *data).and(table).for_each(|v, &m| *v *= m);
        self.inverse(data);
    }

    /// ∂/∂x_axis by the multiplier iξ_axis.
    pub fn derivative(&self, data: &mut ArrayD<Complex64>, axis: usize) {
        self.forward(data);
        let n = self.grid.points;
        for (k, mut lane) in data.axis_iter_mut(Axis(axis)).enumerate() {
            // The Nyquist mode has no odd partner; dropping it keeps ∂ skew-adjoint.
            let m = if k == n / 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, self.xi[k]) };
            lane.mapv_inplace(|v| v * m);
        }
        self.inverse(data);
    }

    /// Continuous-normalised transform onto increasing frequencies.
    ///
    /// f̂(ξ_k) = (2π)^(−n/2) Σ_j f(x_j) e^(−i x_j·ξ_k) Δxⁿ. On a symmetric box
    /// with N/2 even, the shifts reduce to (−1)^j before and (−1)^k after the FFT.
    pub fn dft(&self, state: &WaveState) -> ProfileState {
        let mut data = state.values.clone();
        checkerboard(&mut data);
        self.forward(&mut data);
        checkerboard(&mut data);
        let c = (state.grid.dx() / (2.0 * PI).sqrt()).powi(state.grid.n as i32);
        data.mapv_inplace(|v| v * c);
        ProfileState {
            grid: state.grid,
            values: data,
            frame: state.frame,
            t: state.t,
        }
    }

    pub fn inverse_dft(&self, profile: &ProfileState) -> WaveState {
        let mut data = profile.values.clone();
        checkerboard(&mut data);
        transform_axes(&mut data, self.inv.as_ref());
        checkerboard(&mut data);
        let c = (profile.grid.dxi() / (2.0 * PI).sqrt()).powi(profile.grid.n as i32);
        data.mapv_inplace(|v| v * c);
        WaveState {
            grid: profile.grid,
            values: data,
            frame: profile.frame,
            t: profile.t,
        }
    }
}

/// Multiply by (−1)^(j₁+…+jₙ).
fn checkerboard(data: &mut ArrayD<Complex64>) {
    for (idx, v) in data.indexed_iter_mut() {
        let parity: usize = idx.as_array_view().sum();
        if parity % 2 == 1 {
            *v = -*v;
        }
    }
}

fn transform_axes(data: &mut ArrayD<Complex64>, fft: &dyn Fft<f64>) {
    let len = fft.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for axis in 0..data.ndim() {
        for mut lane in data.lanes_mut(Axis(axis)) {
            if let Some(s) = lane.as_slice_mut() {
                fft.process_with_scratch(s, &mut scratch);
                continue;
            }
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }
}
