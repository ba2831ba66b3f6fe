//! Experiment orchestration: decay fits, theory comparisons, parameter sweeps
//! and the linear dispersive-bound check.

mod experiment;
mod fit;
mod korotyaev;
mod output;

pub use experiment::{
    compare_with_theory, run_experiment, run_experiment_serial, Comparisons, CrossValidationSummary, ExperimentSpec,
    PointResult, RefinementStudy, ReportBundle, RunSummary, SweepAxes, SweepPoint, TheoremComparison,
    EXPONENT_TOLERANCE, PLATEAU_SLOPE_TOLERANCE,
};
pub use fit::{
    calibrate_envelope, calibrate_lower_bound, default_window, fit_decay, fit_decay_window, fit_series, DecayModel,
    EnvelopeCalibration, FitModel, FitResult,
};
pub use korotyaev::{korotyaev_check, KorotyaevEntry, KorotyaevReport, KorotyaevSpec};
pub use output::{file_stem, OutputDir};

use thiserror::Error;

use crate::criticality::CriticalityError;
use crate::oscillator::OscillatorError;
use crate::profile::ProfileError;
use crate::solver::SolverError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error(transparent)]
    Criticality(#[from] CriticalityError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}
