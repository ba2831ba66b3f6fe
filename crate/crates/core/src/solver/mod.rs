//! Split-step integration of the original equation and of the lens-frame
//! reduced equation i∂ₜv + Δv/(2y₁²) = λ|y₁|^(−n(p−1)/2)|v|^(p−1)v.
//!
//! The nonlinear substep is the exact pointwise flow, and in the lens frame
//! the linear substep is an exact Fourier multiplier. The lens frame is
//! therefore the production path; the original frame serves as a
//! cross-check.

mod config;
mod sim;
mod steps;

pub use config::{FrameChoice, InitialData, RunSettings, SimConfig, Splitting};
pub use sim::{cross_validate, evolve, CrossValidation, MassLedger, RunRecord, Simulation, PAIR_TOL};
pub use steps::{apply_nonlinear, linear_substep_lens, linear_substep_original, nonlinear_substep};

use thiserror::Error;

use crate::criticality::CriticalityError;
use crate::oscillator::OscillatorError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("L-infinity norm {linf:e} exceeded the ceiling at t = {t}; check the sign of Im lambda")]
    BlowupDetected { t: f64, linf: f64 },
    #[error("step size fell below dt_min ({dt:e}) at t = {t}")]
    NonConvergence { t: f64, dt: f64 },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Criticality(#[from] CriticalityError),
}
