use std::io::{self, Write};
use std::sync::Arc;

use ndarray::ArrayD;
use num_complex::Complex64;
use serde::Serialize;

use super::config::{FrameChoice, SimConfig, Splitting};
use super::steps::{apply_lens_free, apply_linear_original, apply_nonlinear, dealias};
use super::SolverError;
use crate::oscillator::{build_derived, solve_fundamental, FundamentalPair, OscillatorDerived};
use crate::spectral::{
    j_fractional_conjugated, linf_norm, lp_power, sample_physical, to_lens, to_original, Fourier, Frame, WaveState,
};

/// Tolerance handed to the fundamental-solution integrator.
pub const PAIR_TOL: f64 = 1e-11;

/// Running dissipative identity ‖u(t)‖² + 2|Im λ|∫‖u‖_{p+1}^{p+1} = ‖u₀‖².
///
/// In the lens frame the integrand carries |y₁|^(−n(p−1)/2) and v replaces u;
/// both forms take the same value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassLedger {
    pub initial_mass_sq: f64,
    pub dissipated: f64,
    pub current_mass_sq: f64,
    /// Integrand 2|Im λ|·c(t)·‖·‖_{p+1}^{p+1} at the last accepted state.
    pub rate: f64,
}

impl MassLedger {
    pub fn new(mass_sq: f64, rate: f64) -> Self {
        Self {
            initial_mass_sq: mass_sq,
            dissipated: 0.0,
            current_mass_sq: mass_sq,
            rate,
        }
    }

    /// Trapezoid update over a step of length h.
    pub fn advanced(&self, h: f64, mass_sq: f64, rate: f64) -> Self {
        Self {
            initial_mass_sq: self.initial_mass_sq,
            dissipated: self.dissipated + 0.5 * h * (self.rate + rate),
            current_mass_sq: mass_sq,
            rate,
        }
    }

    /// (‖u‖² + dissipated − ‖u₀‖²)/‖u₀‖².
    pub fn residual(&self) -> f64 {
        if self.initial_mass_sq == 0.0 {
            return 0.0;
        }
        (self.current_mass_sq + self.dissipated - self.initial_mass_sq) / self.initial_mass_sq
    }
}

/// Diagnostics recorded every `record_every` steps and at the final time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunRecord {
    pub times: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub linf_norms: Vec<f64>,
    pub ledger_residuals: Vec<f64>,
    pub hs_half: Vec<f64>,
    pub x_norm: Vec<f64>,
    /// Y₂(t), NaN before T₀.
    pub y2_integral: Vec<f64>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub final_dt: f64,
    pub max_boundary_ratio: f64,
    /// Largest step-to-step increase of ‖u‖², relative to ‖u₀‖².
    pub max_mass_increase: f64,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal_ledger_residual(&self) -> f64 {
        self.ledger_residuals.last().copied().unwrap_or(f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,l2,linf,ledger_residual,hs_half,x_norm")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.6e},{:.12e},{:.12e}",
                self.times[i],
                self.l2_norms[i],
                self.linf_norms[i],
                self.ledger_residuals[i],
                self.hs_half[i],
                self.x_norm[i]
            )?;
        }
        Ok(())
    }
}

/// One sequentially stepped run.
pub struct Simulation {
    config: SimConfig,
    pair: Arc<FundamentalPair>,
    derived: Option<OscillatorDerived>,
    fourier: Fourier,
    r2: ArrayD<f64>,
    state: WaveState,
    ledger: MassLedger,
    record: RunRecord,
    dt: f64,
    boundary_warned: bool,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("t", &self.state.t)
            .field("dt", &self.dt)
            .field("steps", &self.record.steps)
            .finish()
    }
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let model = &config.oscillator;
        model.check_domain(config.run.t_end)?;
        let pair = Arc::new(solve_fundamental(model, config.run.t_end, PAIR_TOL)?);
        Self::with_pair(config, pair)
    }

    /// Reuse an already solved pair covering [0, t_end].
    pub fn with_pair(config: SimConfig, pair: Arc<FundamentalPair>) -> Result<Self, SolverError> {
        config.validate()?;
        let run = &config.run;
        let t0_model = config.oscillator.t0;
        let derived = if run.t_end > t0_model {
            match build_derived(
                Arc::clone(&pair),
                config.grid.n,
                config.nonlinearity.p,
                t0_model,
                run.t_end,
            ) {
                Ok(d) => Some(d),
                Err(e) if run.frame == FrameChoice::Lens => return Err(e.into()),
                Err(e) => {
                    log::info!("derived quantities unavailable: {e}");
                    None
                }
            }
        } else {
            None
        };
        if run.frame == FrameChoice::Lens && derived.is_none() {
            return Err(SolverError::Config("lens frame needs t_end > T0".into()));
        }
        let u0 = config.initial_state()?;
        let state = match run.frame {
            FrameChoice::Original => u0,
            FrameChoice::Lens => {
                let v = pair.eval(run.t0)?;
                to_lens(&u0, v.y1, v.dy1)?
            }
        };
        let fourier = Fourier::new(&state.grid);
        let r2 = state.grid.radius_sq();
        let mut sim = Self {
            ledger: MassLedger::new(0.0, 0.0),
            record: RunRecord {
                final_dt: run.dt,
                ..RunRecord::default()
            },
            dt: run.dt,
            config,
            pair,
            derived,
            fourier,
            r2,
            state,
            boundary_warned: false,
        };
        let rate = sim.dissipation_rate(&sim.state)?;
        sim.ledger = MassLedger::new(sim.state.l2_norm().powi(2), rate);
        sim.observe()?;
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &WaveState {
        &self.state
    }

    pub fn ledger(&self) -> &MassLedger {
        &self.ledger
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    pub fn pair(&self) -> &Arc<FundamentalPair> {
        &self.pair
    }

    pub fn derived(&self) -> Option<&OscillatorDerived> {
        self.derived.as_ref()
    }

    pub fn into_record(self) -> RunRecord {
        self.record
    }

    pub fn t(&self) -> f64 {
        self.state.t
    }

    pub fn finished(&self) -> bool {
        self.state.t >= self.config.run.t_end - 1e-12 * self.config.run.t_end.abs().max(1.0)
    }

    /// Physical field u(t) in the original frame, on the grid the state implies.
    pub fn physical_state(&self) -> Result<WaveState, SolverError> {
        Ok(match self.state.frame {
            Frame::Original => self.state.clone(),
            Frame::Lens { .. } => to_original(&self.state)?,
        })
    }

    fn nonlinear_coeff(&self, t: f64) -> Result<f64, SolverError> {
        Ok(match self.config.run.frame {
            FrameChoice::Original => 1.0,
            FrameChoice::Lens => {
                let k = 0.5 * self.config.grid.n as f64 * (self.config.nonlinearity.p - 1.0);
                self.pair.y1(t)?.abs().powf(-k)
            }
        })
    }

    fn dissipation_rate(&self, state: &WaveState) -> Result<f64, SolverError> {
        let nl = &self.config.nonlinearity;
        if nl.lambda_im == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * nl.lambda_im.abs() * self.nonlinear_coeff(state.t)? * lp_power(state, nl.p + 1.0))
    }

    fn linear(&self, values: &mut ArrayD<Complex64>, t: f64, h: f64) -> Result<(), SolverError> {
        match self.config.run.frame {
            FrameChoice::Original => {
                apply_linear_original(values, &self.fourier, &self.r2, &self.config.oscillator, t, h)?
            }
            FrameChoice::Lens => {
                let d = self.derived.as_ref().expect("lens runs carry derived data");
                let dy = d.lens_time(t + h)? - d.lens_time(t)?;
                apply_lens_free(values, &self.fourier, dy);
            }
        }
        Ok(())
    }

    /// Advance by exactly `h` without step control.
    fn trial(&self, h: f64) -> Result<WaveState, SolverError> {
        let t = self.state.t;
        let nl = &self.config.nonlinearity;
        let mut next = self.state.clone();
        let coeff = self.nonlinear_coeff(t + 0.5 * h)?;
        match self.config.run.splitting {
            Splitting::Strang => {
                self.linear(&mut next.values, t, 0.5 * h)?;
                apply_nonlinear(&mut next.values, nl, h, coeff);
                if self.config.run.dealias {
                    dealias(&mut next.values, &self.fourier);
                }
                self.linear(&mut next.values, t + 0.5 * h, 0.5 * h)?;
            }
            Splitting::Lie => {
                self.linear(&mut next.values, t, h)?;
                apply_nonlinear(&mut next.values, nl, h, coeff);
                if self.config.run.dealias {
                    dealias(&mut next.values, &self.fourier);
                }
            }
        }
        next.t = t + h;
        if let Frame::Lens { .. } = next.frame {
            let v = self.pair.eval(next.t)?;
            next.frame = Frame::Lens { y1: v.y1, dy1: v.dy1 };
        }
        Ok(next)
    }

    fn next_h(&self) -> f64 {
        let remaining = self.config.run.t_end - self.state.t;
        if remaining <= self.dt * (1.0 + 1e-9) {
            remaining
        } else {
            self.dt
        }
    }

    fn physical_linf(&self, state: &WaveState) -> f64 {
        let m = linf_norm(state);
        match state.frame {
            Frame::Original => m,
            Frame::Lens { y1, .. } => y1.abs().powf(-0.5 * state.grid.n as f64) * m,
        }
    }

    fn accept(&mut self, next: WaveState, ledger: MassLedger) -> Result<(), SolverError> {
        let increase = (ledger.current_mass_sq - self.ledger.current_mass_sq) / self.ledger.initial_mass_sq.max(f64::MIN_POSITIVE);
        self.record.max_mass_increase = self.record.max_mass_increase.max(increase);
        self.state = next;
        self.ledger = ledger;
        self.record.steps += 1;
        self.record.final_dt = self.dt;
        let linf = self.physical_linf(&self.state);
        if !(linf <= self.config.run.linf_ceiling) {
            return Err(SolverError::BlowupDetected { t: self.state.t, linf });
        }
        if self.record.steps % self.config.run.record_every == 0 || self.finished() {
            self.observe()?;
        }
        Ok(())
    }

    /// One step under ledger control: halve dt until the per-step residual
    /// change is within tolerance.
    pub fn step(&mut self) -> Result<(), SolverError> {
        loop {
            let h = self.next_h();
            let next = self.trial(h)?;
            let ledger = self.ledger.advanced(h, next.l2_norm().powi(2), self.dissipation_rate(&next)?);
            let jump = (ledger.residual() - self.ledger.residual()).abs();
            if jump <= self.config.run.ledger_step_tol {
                return self.accept(next, ledger);
            }
            let halved = 0.5 * self.dt;
            if halved < self.config.run.dt_min {
                return Err(SolverError::NonConvergence { t: self.state.t, dt: halved });
            }
            self.record.rejected_steps += 1;
            log::debug!("ledger jump {jump:e} at t = {}; dt -> {halved}", self.state.t);
            self.dt = halved;
        }
    }

    /// One step of the current dt with no step control.
    pub fn step_fixed(&mut self) -> Result<(), SolverError> {
        let h = self.next_h();
        let next = self.trial(h)?;
        let ledger = self.ledger.advanced(h, next.l2_norm().powi(2), self.dissipation_rate(&next)?);
        self.accept(next, ledger)
    }

    pub fn run(&mut self) -> Result<(), SolverError> {
        self.run_with(|_| {})
    }

    /// Run to t_end, calling `observer` with the working-frame state at every record.
    pub fn run_with(&mut self, mut observer: impl FnMut(&WaveState)) -> Result<(), SolverError> {
        observer(&self.state);
        let mut seen = self.record.len();
        while !self.finished() {
            self.step()?;
            if self.record.len() > seen {
                seen = self.record.len();
                observer(&self.state);
            }
        }
        Ok(())
    }

    fn observe(&mut self) -> Result<(), SolverError> {
        let t = self.state.t;
        let run = &self.config.run;
        let l2 = self.state.l2_norm();
        let linf = self.physical_linf(&self.state);
        let ratio = self.state.boundary_ratio();
        if ratio > self.record.max_boundary_ratio {
            self.record.max_boundary_ratio = ratio;
        }
        if ratio > run.boundary_tol && !self.boundary_warned {
            self.boundary_warned = true;
            let msg = format!("boundary amplitude {ratio:.2e} of peak at t = {t}; enlarge the box");
            log::warn!("{msg}");
            self.record.warnings.push(msg);
        }
        let (hs, xn) = if run.cheap_diagnostics {
            (f64::NAN, f64::NAN)
        } else {
            (self.hs_half()?, self.x_norm()?)
        };
        let y2 = match &self.derived {
            Some(d) if t >= d.t0 => d.y2_integral(t).unwrap_or(f64::NAN),
            _ => f64::NAN,
        };
        let r = &mut self.record;
        r.times.push(t);
        r.l2_norms.push(l2);
        r.linf_norms.push(linf);
        r.ledger_residuals.push(self.ledger.residual());
        r.hs_half.push(hs);
        r.x_norm.push(xn);
        r.y2_integral.push(y2);
        Ok(())
    }

    fn hs_half(&self) -> Result<f64, SolverError> {
        let u = self.physical_state()?;
        Ok(Fourier::new(&u.grid).sobolev_norm(&u, 0.5 * self.config.run.s))
    }

    /// ⟨Y⟩^(n/2)‖v‖∞ + ⟨Y⟩^(−ε₁)(‖v‖_{H^s} + ‖|J|^s v‖₂).
    fn x_norm(&self) -> Result<f64, SolverError> {
        let Some(d) = &self.derived else {
            return Ok(f64::NAN);
        };
        let t = self.state.t;
        if t < d.t0 {
            return Ok(f64::NAN);
        }
        let y = d.lens_time(t)?;
        let owned;
        let (v, fourier) = match self.state.frame {
            Frame::Lens { .. } => (&self.state, &self.fourier),
            Frame::Original => {
                let e = self.pair.eval(t)?;
                let lens = to_lens(&self.state, e.y1, e.dy1)?;
                owned = (Fourier::new(&lens.grid), lens);
                (&owned.1, &owned.0)
            }
        };
        let s = self.config.run.s;
        let bracket = (1.0 + y * y).sqrt();
        let n = self.config.grid.n as f64;
        let jv = j_fractional_conjugated(fourier, v, y, s).l2_norm();
        Ok(bracket.powf(0.5 * n) * linf_norm(v)
            + bracket.powf(-self.config.run.x_norm_eps) * (fourier.sobolev_norm(v, s) + jv))
    }
}

/// Run one configuration to completion.
pub fn evolve(config: &SimConfig) -> Result<RunRecord, SolverError> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run()?;
    Ok(sim.into_record())
}

/// Discrepancy between original-frame and lens-frame runs from the same data.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CrossValidation {
    pub times: Vec<f64>,
    /// ‖u_orig − u_lens‖₂ / ‖u_orig‖₂ on the original-frame grid.
    pub l2_discrepancy: Vec<f64>,
    /// max|u_orig − u_lens| / ‖u_orig‖∞.
    pub linf_discrepancy: Vec<f64>,
}

impl CrossValidation {
    pub fn terminal_l2(&self) -> f64 {
        self.l2_discrepancy.last().copied().unwrap_or(f64::NAN)
    }
}

/// Run both frames in lockstep with a fixed step and compare on the
/// original grid after mapping the lens-frame field back.
pub fn cross_validate(config: &SimConfig) -> Result<CrossValidation, SolverError> {
    let mut base = config.clone();
    base.run.ledger_step_tol = f64::INFINITY;
    base.run.cheap_diagnostics = true;
    let mut orig_cfg = base.clone();
    orig_cfg.run.frame = FrameChoice::Original;
    let mut lens_cfg = base;
    lens_cfg.run.frame = FrameChoice::Lens;
    let orig_probe = Simulation::new(orig_cfg)?;
    let pair = Arc::clone(orig_probe.pair());
    let mut orig = orig_probe;
    let mut lens = Simulation::with_pair(lens_cfg, pair)?;
    let mut out = CrossValidation::default();
    let mut compare = |o: &Simulation, l: &Simulation| -> Result<(), SolverError> {
        let uo = o.state();
        let ul = sample_physical(l.state(), &uo.grid)?;
        let diff2: f64 = uo.values.iter().zip(ul.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            * uo.grid.cell_volume();
        let dinf = uo.values.iter().zip(ul.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        out.times.push(uo.t);
        out.l2_discrepancy.push(diff2.sqrt() / uo.l2_norm());
        out.linf_discrepancy.push(dinf / uo.linf_norm());
        Ok(())
    };
    compare(&orig, &lens)?;
    while !orig.finished() {
        orig.step_fixed()?;
        lens.step_fixed()?;
        if orig.record().steps % config.run.record_every == 0 || orig.finished() {
            compare(&orig, &lens)?;
        }
    }
    Ok(out)
}
