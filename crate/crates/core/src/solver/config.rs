use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::criticality::Nonlinearity;
use crate::oscillator::OscillatorModel;
use crate::spectral::io::{read_field_bin, read_field_csv};
use crate::spectral::{Fourier, Frame, Grid, WaveState};

/// Whole run description; maps one-to-one onto the config file sections
/// `[grid]`, `[oscillator]`, `[nonlinearity]` and `[run]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub oscillator: OscillatorModel,
    pub nonlinearity: Nonlinearity,
    pub run: RunSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameChoice {
    Original,
    #[default]
    Lens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    #[default]
    Strang,
    Lie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// amplitude · (πw²)^(−n/4) e^(−|x−c|²/2w²) e^(i·chirp·|x−c|²/2), unit L² at amplitude 1.
    Gaussian {
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        chirp: f64,
    },
    /// Sum of Gaussian bumps in frequency with seeded centres and phases,
    /// normalised to L² norm `amplitude`.
    FourierBump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "one")]
        k_max: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Binary field dump (`.bin`) or 1-D CSV `x,re,im`, on the run grid.
    FromFile { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

fn default_modes() -> usize {
    3
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Gaussian {
            width: 1.0,
            amplitude: 1.0,
            center: Vec::new(),
            chirp: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default)]
    pub initial_data: InitialData,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub frame: FrameChoice,
    #[serde(default)]
    pub splitting: Splitting,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Sobolev regularity used by the diagnostics.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Largest accepted change of the ledger residual within one step.
    #[serde(default = "default_step_tol")]
    pub ledger_step_tol: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_ceiling")]
    pub linf_ceiling: f64,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default)]
    pub seed: u64,
    /// Weight exponent ε₁ in the X-norm diagnostic.
    #[serde(default = "default_x_eps")]
    pub x_norm_eps: f64,
    /// Relative boundary amplitude above which the box is reported too small.
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    /// Skip the Sobolev and X-norm diagnostics, which cost extra transforms.
    #[serde(default)]
    pub cheap_diagnostics: bool,
}

fn default_record_every() -> usize {
    10
}
fn default_s() -> f64 {
    1.0
}
fn default_step_tol() -> f64 {
    1e-5
}
fn default_dt_min() -> f64 {
    1e-8
}
fn default_ceiling() -> f64 {
    1e8
}
fn default_x_eps() -> f64 {
    0.05
}
fn default_boundary_tol() -> f64 {
    1e-10
}

impl RunSettings {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Self {
        Self {
            initial_data: InitialData::default(),
            t0,
            t_end,
            dt,
            frame: FrameChoice::default(),
            splitting: Splitting::default(),
            record_every: default_record_every(),
            s: default_s(),
            ledger_step_tol: default_step_tol(),
            dt_min: default_dt_min(),
            linf_ceiling: default_ceiling(),
            dealias: false,
            seed: 0,
            x_norm_eps: default_x_eps(),
            boundary_tol: default_boundary_tol(),
            cheap_diagnostics: false,
        }
    }
}

impl SimConfig {
    pub fn from_toml(src: &str) -> Result<Self, SolverError> {
        let cfg: SimConfig = toml::from_str(src).map_err(|e| SolverError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.grid.validate()?;
        self.oscillator.validate()?;
        self.nonlinearity.validate()?;
        let r = &self.run;
        let bad = |m: String| Err(SolverError::Config(m));
        if !(r.dt > 0.0) || !r.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", r.dt));
        }
        if !(r.t_end > r.t0) {
            return bad(format!("t_end = {} must exceed t0 = {}", r.t_end, r.t0));
        }
        if r.t0 < 0.0 {
            return bad(format!("t0 must be >= 0, got {}", r.t0));
        }
        if r.record_every == 0 {
            return bad("record_every must be >= 1".into());
        }
        if r.frame == FrameChoice::Lens && r.t0 < self.oscillator.t0 {
            return bad(format!(
                "lens-frame runs start at t0 >= T0 = {}, got t0 = {}",
                self.oscillator.t0, r.t0
            ));
        }
        if let InitialData::Gaussian { width, center, .. } = &r.initial_data {
            if !(*width > 0.0) {
                return bad(format!("Gaussian width must be positive, got {width}"));
            }
            if !center.is_empty() && center.len() != self.grid.n {
                return bad(format!("Gaussian centre needs {} coordinates", self.grid.n));
            }
        }
        Ok(())
    }

    /// u(t0) on the run grid in the original frame.
    pub fn initial_state(&self) -> Result<WaveState, SolverError> {
        let grid = self.grid;
        let t0 = self.run.t0;
        let n = grid.n as f64;
        let mut state = match &self.run.initial_data {
            InitialData::Gaussian {
                width,
                amplitude,
                center,
                chirp,
            } => {
                let c: Vec<f64> = if center.is_empty() { vec![0.0; grid.n] } else { center.clone() };
                let norm = amplitude * (PI * width * width).powf(-0.25 * n);
                WaveState::from_fn(grid, t0, |x| {
                    let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                    Complex64::from_polar(norm * (-0.5 * r2 / (width * width)).exp(), 0.5 * chirp * r2)
                })
            }
            InitialData::FourierBump {
                amplitude,
                modes,
                k_max,
                width,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.run.seed);
                let bumps: Vec<(Vec<f64>, f64)> = (0..*modes)
                    .map(|_| {
                        let k: Vec<f64> = (0..grid.n).map(|_| rng.gen_range(-k_max..=*k_max)).collect();
                        (k, rng.gen_range(0.0..2.0 * PI))
                    })
                    .collect();
                let xi = grid.xi_centered();
                let mut profile = crate::spectral::ProfileState {
                    grid,
                    values: ndarray::ArrayD::zeros(ndarray::IxDyn(&grid.shape())),
                    frame: Frame::Original,
                    t: t0,
                };
                for (idx, v) in profile.values.indexed_iter_mut() {
                    for (k, phase) in &bumps {
                        let d2: f64 = (0..grid.n).map(|a| (xi[idx[a]] - k[a]).powi(2)).sum();
                        *v += Complex64::from_polar((-0.5 * d2 / (width * width)).exp(), *phase);
                    }
                }
                let mut s = Fourier::new(&grid).inverse_dft(&profile);
                let l2 = s.l2_norm();
                if l2 > 0.0 {
                    s.values.mapv_inplace(|v| v * (amplitude / l2));
                }
                s
            }
            InitialData::FromFile { path } => {
                let file = File::open(path).map_err(|e| SolverError::Io(format!("{}: {e}", path.display())))?;
                let s = if path.extension().and_then(|e| e.to_str()) == Some("bin") {
                    read_field_bin(BufReader::new(file))?
                } else {
                    read_field_csv(BufReader::new(file), grid)?
                };
                if !s.grid.compatible(&grid) || s.frame != Frame::Original {
                    return Err(SolverError::Config(format!(
                        "field in {} does not match the run grid",
                        path.display()
                    )));
                }
                s
            }
        };
        state.t = t0;
        Ok(state)
    }
}
