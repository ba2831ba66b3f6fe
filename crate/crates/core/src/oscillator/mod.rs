//! Fundamental solutions of y'' + σ(t) y = 0 and the quantities derived
//! from them.
//!
//! The harmonic coefficient σ enters everything else only through the pair
//! (y₁, y₂): the dispersive rate |y₂(t)|^(−n/2), the lens-frame time
//! Y(t) = y₂/(2y₁), and the dissipation clock Y₂(t) = ∫ |y₂|^(−n(p−1)/2).

mod derived;
mod fundamental;
mod model;

pub use derived::{
    build_derived, check_conditions, check_conditions_with, ConditionOptions, ConditionReport,
    OscillatorDerived, Y2_QUADRATURE_TOL,
};
pub use fundamental::{
    geomspace, linspace, solve_fundamental, solve_fundamental_with, FundamentalPair,
    FundamentalValues, PairMethod, DEFAULT_WRONSKIAN_TOL,
};
pub use model::{Glue, OscillatorModel, SigmaKind};

use thiserror::Error;

use crate::numerics::OdeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OscillatorError {
    #[error("invalid oscillator model: {0}")]
    InvalidModel(String),
    #[error("sigma is not defined at t = {t}")]
    Domain { t: f64 },
    #[error("fundamental-solution integration did not converge: {0}")]
    NonConvergence(OdeError),
    #[error("insufficient sample range: {got} points, need {need}")]
    InsufficientRange { got: usize, need: usize },
    #[error("y1 vanishes near t = {t}; the lens frame is undefined there")]
    SingularY1 { t: f64 },
    #[error("oscillator condition violated: {0}")]
    ConditionFailed(String),
    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

impl From<OdeError> for OscillatorError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::OutOfRange { t, start, end } => Self::OutOfRange { t, start, end },
            other => Self::NonConvergence(other),
        }
    }
}
