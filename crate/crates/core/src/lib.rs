//! Pseudospectral laboratory for the dissipative nonlinear Schrödinger
//! equation with a time-dependent harmonic potential,
//!
//! ```text
//! i∂ₜu + ½Δu − ½σ(t)|x|²u = λ|u|^(p−1)u,   Im λ < 0.
//! ```

pub mod criticality;
pub mod harness;
pub mod numerics;
pub mod oscillator;
pub mod profile;
pub mod solver;
pub mod spectral;

pub use oscillator::{FundamentalPair, OscillatorDerived, OscillatorModel, SigmaKind};
