//! Periodic-grid fields and the unitary operators acting on them.
//!
//! Transforms use the continuous normalisation
//! f̂(ξ) = (2π)^(−n/2) ∫ e^(−ix·ξ) f(x) dx, discretised on the box
//! [−L, L)ⁿ with spacing Δx = 2L/N and dual spacing Δξ = π/L.

mod fourier;
mod grid;
pub mod io;
mod ops;

pub use fourier::Fourier;
pub use grid::{Frame, Grid, ProfileState, WaveState, MAX_POINTS_3D};
pub use ops::{
    band_limited_interpolate, chirp_aliased, j_fractional, j_fractional_conjugated, j_operator, j_vector,
    l2_norm, lens_transform, linf_norm, lp_norm, lp_power, mdfm_apply, sample_physical, sobolev_seminorm,
    to_lens, to_original, JOutcome, LensDirection, MdfmOutcome, Y1_FLOOR,
};

use thiserror::Error;

use crate::oscillator::OscillatorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("array shape {found:?} does not match grid shape {expected:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("|y1| = {y1:e} at t = {t} is below the lens-frame floor")]
    SingularY1 { t: f64, y1: f64 },
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("malformed field data: {0}")]
    Format(String),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
}

/// Continuous-normalised DFT onto increasing frequencies.
pub fn dft(state: &WaveState) -> ProfileState {
    Fourier::new(&state.grid).dft(state)
}

pub fn inverse_dft(profile: &ProfileState) -> WaveState {
    Fourier::new(&profile.grid).inverse_dft(profile)
}
